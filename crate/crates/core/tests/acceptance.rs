//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uidforge::bayes::{metropolis_sample, DemandObservation, PriorSpec};
use uidforge::card_ledger::{
    annual_card_requirement_series, macro_net_card_change, micro_net_card_change_expected,
    simulate_ledger, CardLedger, FlowRates, FlowTally, IssuancePolicy, StateFlows,
};
use uidforge::coverage::{
    apply_omission_adjustment, dual_system_estimate, CoverageConfig, DualSystemCounts,
};
use uidforge::io::{
    emit_demand_csv, load_fertility_csv, load_flows_csv, load_population_csv, load_survival_csv,
    series_chart_svg,
};
use uidforge::projection::{calibrate_fertility_scale, project_population, survive_cohorts};
use uidforge::{
    AgeAxis, AgePyramid, FertilityConfig, RegionId, RegionLevel, Result, Sex, SurvivalSchedule,
};

type Outcome = Result<(bool, String)>;
type Check = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

struct National {
    pop: AgePyramid,
    surv: SurvivalSchedule,
    fert: FertilityConfig,
    flows: Vec<StateFlows>,
}

fn national() -> Result<National> {
    Ok(National {
        pop: load_population_csv(fixture("national_population.csv"), AgeAxis::default(), 2011)?
            .remove(0),
        surv: load_survival_csv(fixture("national_survival.csv"))?.remove(0),
        fert: load_fertility_csv(fixture("national_fertility.csv"))?,
        flows: load_flows_csv(fixture("national_flows.csv"))?,
    })
}

fn region() -> RegionId {
    RegionId::new("X", RegionLevel::Region).expect("non-empty code")
}

fn timed(limit: Duration, run: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = run()?;
    let took = start.elapsed();
    Ok((
        ok && took < limit,
        format!("{detail}; {:.3} s (limit {} s)", took.as_secs_f64(), limit.as_secs()),
    ))
}

fn decadal_growth() -> Outcome {
    let n = national()?;
    let target = 1210.0e6 * 1.123;
    timed(Duration::from_secs(1), || {
        let (fert, scale) = calibrate_fertility_scale(&n.pop, &n.surv, &n.fert, 10, target)?;
        let series = project_population(&n.pop, &n.surv, &fert, 10)?;
        let last = series.last();
        let rel = (last.total() - target).abs() / target;
        Ok((
            last.time_label() == 2021 && rel < 1e-3,
            format!(
                "{} total {:.0} vs {target:.0}, rel err {rel:.2e}, fertility scale {scale:.6}",
                last.time_label(),
                last.total()
            ),
        ))
    })
}

fn infant_survival_ratio() -> Outcome {
    // Births only: nobody turns 15 and nobody migrates in the first year.
    let axis = AgeAxis::default();
    let surv = SurvivalSchedule::new(
        region(),
        (0..=100).map(|a| if a == 100 { 0.0 } else { 0.99 }).collect(),
        (0..=100).map(|a| if a == 100 { 0.0 } else { 0.995 }).collect(),
    )?;
    let mut pop = AgePyramid::zeros(region(), 2011, axis);
    for age in 15..=49 {
        pop.set(Sex::Female, age, 1000.0 + 37.0 * age as f64);
        pop.set(Sex::Male, age, 900.0 + 11.0 * age as f64);
    }
    let fert = FertilityConfig::new(0.9, 1.06, 60.0)?
        .with_rates((15..=49).map(|a| (a, 0.02 + 0.001 * (a % 7) as f64)))?;
    let birth = annual_card_requirement_series(&pop, &surv, &fert, &[], 1, IssuancePolicy::AtBirth)?;
    let one = annual_card_requirement_series(&pop, &surv, &fert, &[], 1, IssuancePolicy::AtAgeOne)?;
    let (b, o) = (&birth.rows[0], &one.rows[0]);
    let factor = fert.infant_survival();
    let exact = o.new_cards_male == b.new_cards_male * factor
        && o.new_cards_female == b.new_cards_female * factor;
    let ratio = o.new_cards_total() / b.new_cards_total();
    Ok((
        exact && (factor - 0.94).abs() <= f64::EPSILON && (ratio - 0.94).abs() <= 4.0 * f64::EPSILON,
        format!(
            "year-1 demand {:.6} vs {:.6}, ratio {ratio:.17}",
            o.new_cards_total(),
            b.new_cards_total()
        ),
    ))
}

fn conservation() -> Outcome {
    let axis = AgeAxis::default();
    let surv = SurvivalSchedule::new(
        region(),
        (0..=100).map(|a| if a == 100 { 0.0 } else { 1.0 }).collect(),
        (0..=100).map(|a| if a == 100 { 0.0 } else { 1.0 }).collect(),
    )?;
    // Oldest cohort reaches 89 after 50 years, short of the closing age.
    let mut pop = AgePyramid::zeros(region(), 2011, axis);
    for age in 0..40 {
        pop.set(Sex::Male, age, 1.0e6 + 12_345.678 * age as f64);
        pop.set(Sex::Female, age, 0.97e6 + 9_876.5 * age as f64);
    }
    let fert = FertilityConfig::new(0.9, 1.05, 40.0)?;
    let series = project_population(&pop, &surv, &fert, 50)?;
    let start = pop.total();
    let worst = series
        .totals()
        .iter()
        .map(|t| (t - start).abs() / start)
        .fold(0.0, f64::max);
    Ok((worst < 1e-9, format!("max rel drift over 50 years {worst:.2e}")))
}

fn microsimulation() -> Outcome {
    timed(Duration::from_secs(5), || {
        let axis = AgeAxis::default();
        let surv = SurvivalSchedule::constant(region(), axis, 0.95)?;
        let mut pop = AgePyramid::zeros(region(), 2011, axis);
        pop.set(Sex::Female, 20, 10_000.0);
        let expected = survive_cohorts(&pop, &surv, 10)?.count(Sex::Female, 30);

        let mut rng = ChaCha8Rng::seed_from_u64(20110301);
        let reps = 200;
        let mut draws = Vec::with_capacity(reps);
        for _ in 0..reps {
            let alive = (0..10_000)
                .filter(|_| (0..10).all(|_| rng.random::<f64>() < 0.95))
                .count();
            draws.push(alive as f64);
        }
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        let se = (var / reps as f64).sqrt();
        let z = (mean - expected) / se;
        Ok((
            z.abs() < 3.0,
            format!("mean {mean:.2} vs {expected:.2}, se {se:.3}, z {z:.2}"),
        ))
    })
}

fn macro_micro() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1210);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n_states = rng.random_range(1..=12);
        let mut rates = Vec::with_capacity(n_states);
        let mut tallies: Vec<FlowTally<f64>> = Vec::with_capacity(n_states);
        for i in 0..n_states {
            let r = FlowRates {
                population: rng.random_range(1.0e4..2.0e8),
                birth_rate: rng.random_range(0.0..0.04),
                death_rate: rng.random_range(0.0..0.02),
                in_rate: rng.random_range(0.0..0.005),
                out_rate: rng.random_range(0.0..0.005),
            };
            tallies.push(FlowTally {
                births: r.birth_rate * r.population,
                deaths: r.death_rate * r.population,
                interstate_in: 0.0,
                interstate_out: 0.0,
                immigration: r.in_rate * r.population,
                emigration: r.out_rate * r.population,
            });
            rates.push(StateFlows::from_rates(
                RegionId::new(format!("S{i}"), RegionLevel::State)?,
                r,
            )?);
        }
        // Interstate moves cancel nationally; add some so they are exercised.
        for _ in 0..n_states * 2 {
            let from = rng.random_range(0..n_states);
            let to = rng.random_range(0..n_states);
            let movers = rng.random_range(0.0..5.0e4);
            tallies[from].interstate_out += movers;
            tallies[to].interstate_in += movers;
        }
        let mac = macro_net_card_change(&rates)?;
        let mic = micro_net_card_change_expected(&tallies)?;
        worst = worst.max((mac - mic).abs() / mac.abs().max(1.0));
    }
    Ok((worst < 1e-9, format!("100 scenarios, max rel diff {worst:.2e}")))
}

fn dual_system() -> Outcome {
    let est = dual_system_estimate(&DualSystemCounts::new(900, 800, 720))?;
    let mut pop = AgePyramid::zeros(region(), 2011, AgeAxis::default());
    for age in 0..=100 {
        pop.set(Sex::Male, age, 1.0 + 7919.0 * age as f64);
        pop.set(Sex::Female, age, 3.0 + 104_729.0 * age as f64);
    }
    let mut worst: f64 = 0.0;
    for rate in 1..=999 {
        let cfg = CoverageConfig {
            omission_per_1000: rate as f64,
            ..Default::default()
        };
        let adjusted = apply_omission_adjustment(&pop, &cfg)?;
        for (sex, age, c) in pop.cells() {
            let back = adjusted.count(sex, age) * (1.0 - rate as f64 / 1000.0);
            worst = worst.max((back - c).abs() / c);
        }
    }
    Ok((
        est == 1000.0 && worst < 1e-9,
        format!("estimate {est:?}, omission round-trip max rel err {worst:.2e}"),
    ))
}

fn mcmc() -> Outcome {
    let data = [
        DemandObservation::new(2011, 4, 1.0)?,
        DemandObservation::new(2012, 6, 1.0)?,
    ];
    let prior = PriorSpec::gamma(1.0, 1.0)?;
    let seed = 2011;
    let mut first = None;
    let outcome = timed(Duration::from_secs(10), || {
        let chain = metropolis_sample(&data, &prior, 100_000, seed, 0.7)?;
        let kept = chain.kept();
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        let rel = (mean - 11.0 / 3.0).abs() / (11.0 / 3.0);
        first = Some(chain);
        Ok((rel < 0.01, format!("chain mean {mean:.5} vs 11/3, rel err {rel:.2e}")))
    })?;
    let again = metropolis_sample(&data, &prior, 100_000, seed, 0.7)?;
    let identical = first.is_some_and(|c| {
        c.samples.len() == again.samples.len()
            && c.samples
                .iter()
                .zip(&again.samples)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    });
    Ok((
        outcome.0 && identical,
        format!("{}; rerun bit-identical {identical}", outcome.1),
    ))
}

fn national_series_properties() -> Outcome {
    let n = national()?;
    let series =
        annual_card_requirement_series(&n.pop, &n.surv, &n.fert, &n.flows, 10, IssuancePolicy::AtBirth)?;
    let positive = series
        .rows
        .iter()
        .all(|r| r.new_cards_male.round_ties_even() > 0.0 && r.new_cards_female.round_ties_even() > 0.0);
    let srb = n.fert.sex_ratio_at_birth();
    let ratio_ok = series.rows.iter().all(|r| {
        let (m, f) = (r.births.male.round_ties_even(), r.births.female.round_ties_even());
        (m - srb * f).abs() <= 0.5 * (1.0 + srb)
    });
    let a = series_chart_svg(&series)?;
    let b = series_chart_svg(&annual_card_requirement_series(
        &n.pop,
        &n.surv,
        &n.fert,
        &n.flows,
        10,
        IssuancePolicy::AtBirth,
    )?)?;
    let same = a.as_bytes() == b.as_bytes();
    Ok((
        positive && ratio_ok && same,
        format!(
            "{} years positive {positive}, birth sex ratio {ratio_ok}, svg deterministic {same}",
            series.len()
        ),
    ))
}

fn ledger_identity() -> Outcome {
    let n = national()?;
    let mut checked = 0;
    for policy in [
        IssuancePolicy::AtBirth,
        IssuancePolicy::AtAgeOne,
        IssuancePolicy::NumberAndCardAtBirth,
    ] {
        let opening = CardLedger::from_pyramid(&n.pop, policy);
        let years = simulate_ledger(&n.pop, &n.surv, &n.fert, &n.flows, 20, policy, &opening)?;
        if years.len() != 20 {
            return Ok((false, format!("{policy}: {} years simulated", years.len())));
        }
        let mut prev = opening.active_cards;
        for y in &years {
            let expected = prev as i128 + y.issued_this_year as i128 - y.returned_this_year as i128;
            if y.opening_cards != prev || y.active_cards as i128 != expected {
                return Ok((
                    false,
                    format!("{policy} {}: active {} != {expected}", y.year, y.active_cards),
                ));
            }
            // child_links is unsigned; a shortfall would have failed the run.
            prev = y.active_cards;
            checked += 1;
        }
    }
    Ok((true, format!("{checked} ledger years over 3 policies balance exactly")))
}

fn golden_file() -> Outcome {
    let pop = load_population_csv(fixture("toy_population.csv"), AgeAxis::new(49)?, 2011)?.remove(0);
    let surv = load_survival_csv(fixture("toy_survival.csv"))?.remove(0);
    let fert = load_fertility_csv(fixture("toy_fertility.csv"))?;
    let flows = load_flows_csv(fixture("toy_flows.csv"))?;
    let series = annual_card_requirement_series(&pop, &surv, &fert, &flows, 3, IssuancePolicy::AtBirth)?;
    let dir = std::env::temp_dir().join(format!("uidforge-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| uidforge::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let path = dir.join("demand.csv");
    emit_demand_csv(&series, &path)?;
    let got = std::fs::read(&path).unwrap_or_default();
    let want = std::fs::read(fixture("demand_toy_golden.csv")).unwrap_or_default();
    let _ = std::fs::remove_dir_all(&dir);
    Ok((
        !want.is_empty() && got == want,
        format!("{} bytes emitted, {} bytes expected", got.len(), want.len()),
    ))
}

fn main() -> ExitCode {
    let criteria: [Check; 10] = [
        ("decadal growth reproduction", decadal_growth),
        ("infant-survival policy ratio", infant_survival_ratio),
        ("conservation over 50 years", conservation),
        ("microsimulation oracle", microsimulation),
        ("macro-micro agreement", macro_micro),
        ("dual-system estimator and omission inversion", dual_system),
        ("MCMC vs conjugate posterior", mcmc),
        ("national demand series properties", national_series_properties),
        ("ledger identity over 20 years", ledger_identity),
        ("golden demand file", golden_file),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
