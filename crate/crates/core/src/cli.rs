//! Command runners behind the `uidforge` binary.
//!
//! Each runner reads its inputs, writes its reports into the output directory
//! and returns the paths it wrote. Nothing is printed here.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bayes::{conjugate_posterior, metropolis_sample, summarize_chain, PriorSpec};
use crate::card_ledger::{
    annual_card_requirement_series, simulate_ledger, CardLedger, DemandSeries, StateFlows,
};
use crate::config::{CommandKind, RunConfig};
use crate::coverage::{
    add_enumeration_segments, allocate_unknown_age, apply_omission_adjustment, CoverageConfig,
};
use crate::demography::{AgePyramid, SurvivalSchedule};
use crate::error::{Error, Result};
use crate::io;
use crate::projection::project_population;

pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    match cfg.command {
        CommandKind::Project => run_project(cfg),
        CommandKind::Demand => run_demand(cfg),
        CommandKind::Coverage => run_coverage(cfg),
        CommandKind::Estimate => run_estimate(cfg),
    }
}

fn load_pyramids(cfg: &RunConfig) -> Result<Vec<AgePyramid>> {
    let path = cfg.input(&cfg.population, "population")?;
    io::load_population_csv(&path, cfg.axis, cfg.year)
}

/// The schedule for `pop`'s region, or the only schedule when just one is
/// given.
fn survival_for<'a>(
    pop: &AgePyramid,
    schedules: &'a [SurvivalSchedule],
) -> Result<&'a SurvivalSchedule> {
    let code = pop.region().code();
    if let Some(s) = schedules.iter().find(|s| s.region().code() == code) {
        return Ok(s);
    }
    match schedules {
        [only] => Ok(only),
        _ => Err(Error::Config(format!("no survival schedule for region {code}"))),
    }
}

/// Flows for `pop`'s state. With a single pyramid and no matching state,
/// every row applies.
fn flows_for(pop: &AgePyramid, flows: &[StateFlows], n_pyramids: usize) -> Vec<StateFlows> {
    let code = pop.region().code();
    let matched: Vec<_> = flows
        .iter()
        .filter(|f| f.state.code() == code)
        .cloned()
        .collect();
    if matched.is_empty() && n_pyramids == 1 {
        flows.to_vec()
    } else {
        matched
    }
}

fn out(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.output.join(name)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_project(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let pyramids = load_pyramids(cfg)?;
    let schedules = io::load_survival_csv(cfg.input(&cfg.survival, "survival")?)?;
    let fert = io::load_fertility_csv(cfg.input(&cfg.fertility, "fertility")?)?;
    let series = pyramids
        .iter()
        .map(|p| project_population(p, survival_for(p, &schedules)?, &fert, cfg.horizon))
        .collect::<Result<Vec<_>>>()?;
    let frames = out(cfg, "projection.csv");
    let totals = out(cfg, "totals.csv");
    io::emit_projection_csv(&series, &frames)?;
    io::emit_projection_totals_csv(&series, &totals)?;
    Ok(vec![frames, totals])
}

fn run_demand(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let pyramids = load_pyramids(cfg)?;
    if pyramids.is_empty() {
        return Err(Error::Insufficient("population file has no rows".into()));
    }
    let schedules = io::load_survival_csv(cfg.input(&cfg.survival, "survival")?)?;
    let fert = io::load_fertility_csv(cfg.input(&cfg.fertility, "fertility")?)?;
    let flows = io::load_flows_csv(cfg.input(&cfg.flows, "flows")?)?;

    let mut parts = Vec::with_capacity(pyramids.len());
    let mut ledger_csv = String::from(
        "region,year,opening_cards,issued,returned,active_cards,child_links\n",
    );
    for pop in &pyramids {
        let surv = survival_for(pop, &schedules)?;
        let own = flows_for(pop, &flows, pyramids.len());
        parts.push(annual_card_requirement_series(
            pop,
            surv,
            &fert,
            &own,
            cfg.horizon,
            cfg.issuance_policy,
        )?);
        let opening = CardLedger::from_pyramid(pop, cfg.issuance_policy);
        for l in simulate_ledger(pop, surv, &fert, &own, cfg.horizon, cfg.issuance_policy, &opening)? {
            let _ = writeln!(
                ledger_csv,
                "{},{},{},{},{},{},{}",
                l.state.code(),
                l.year,
                l.opening_cards,
                l.issued_this_year,
                l.returned_this_year,
                l.active_cards,
                l.child_links
            );
        }
    }
    let series = DemandSeries::sum(&parts)?;

    let demand = out(cfg, "demand.csv");
    io::emit_demand_csv(&series, &demand)?;
    let ledger = out(cfg, "ledger.csv");
    write_text(&ledger, &ledger_csv)?;
    let mut written = vec![demand, ledger];
    if series.len() >= 2 {
        let chart = out(cfg, "demand.svg");
        io::render_series_chart(&series, &chart)?;
        written.push(chart);
    }
    Ok(written)
}

fn run_coverage(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let pyramids = load_pyramids(cfg)?;
    let unknown = match &cfg.unknown_age {
        Some(p) => io::load_unknown_age_csv(p)?,
        None => Default::default(),
    };
    let profile = match &cfg.houseless_profile {
        Some(p) => Some(io::load_profile_csv(p)?),
        None => None,
    };
    let houseless = cfg.houseless_rural + cfg.houseless_urban > 0.0;
    if houseless && pyramids.len() != 1 {
        return Err(Error::Config(format!(
            "houseless counts apply to one region, the population file has {}",
            pyramids.len()
        )));
    }
    if let Some(code) = unknown
        .keys()
        .find(|k| !pyramids.iter().any(|p| p.region().code() == k.as_str()))
    {
        return Err(Error::Config(format!(
            "unknown-age counts given for region {code}, which has no population rows"
        )));
    }

    let mut adjusted = Vec::with_capacity(pyramids.len());
    for pop in &pyramids {
        let cov = CoverageConfig {
            omission_per_1000: cfg.omission_per_1000,
            houseless_rural: cfg.houseless_rural,
            houseless_urban: cfg.houseless_urban,
            unknown_age: unknown.get(pop.region().code()).copied().unwrap_or([0.0; 2]),
        };
        let mut p = allocate_unknown_age(pop, &cov)?;
        if let Some(profile) = &profile {
            p = add_enumeration_segments(&p, &cov, profile)?;
        }
        adjusted.push(apply_omission_adjustment(&p, &cov)?);
    }
    let path = out(cfg, "adjusted_population.csv");
    io::write_population_csv(&adjusted, &path)?;
    Ok(vec![path])
}

fn run_estimate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = io::load_observations_csv(cfg.input(&cfg.observations, "observations")?)?;
    let prior = PriorSpec::gamma(cfg.prior_shape, cfg.prior_rate)?;
    let chain = metropolis_sample(&data, &prior, cfg.samples, cfg.seed, cfg.proposal_scale)?;
    let summary = summarize_chain(&chain)?;
    let exact = conjugate_posterior(&data, &prior);

    let mut samples = String::from("iteration,beta,burn_in\n");
    for (i, b) in chain.samples.iter().enumerate() {
        let _ = writeln!(samples, "{i},{b},{}", u8::from(i < chain.burn_in));
    }
    let mut table = String::from("statistic,value\n");
    for (k, v) in [
        ("mean", summary.mean),
        ("variance", summary.variance),
        ("lower_95", summary.lower),
        ("upper_95", summary.upper),
        ("acceptance_rate", chain.acceptance_rate),
        ("kept_samples", summary.n as f64),
        ("seed", chain.seed as f64),
        ("conjugate_shape", exact.shape),
        ("conjugate_rate", exact.rate),
        ("conjugate_mean", exact.mean()),
    ] {
        let _ = writeln!(table, "{k},{v}");
    }
    let samples_path = out(cfg, "posterior_samples.csv");
    let summary_path = out(cfg, "posterior_summary.csv");
    write_text(&samples_path, &samples)?;
    write_text(&summary_path, &table)?;
    Ok(vec![samples_path, summary_path])
}
