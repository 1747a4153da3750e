//! Card-flow accounting: the macro (rate) and micro (count) models of annual
//! change in issued cards, the per-state ledger with its age-15 re-issuance
//! and return procedures, and the annual demand series.
//!
//! Time steps are one year. The change in cards over a year is the forward
//! difference U(t+1) - U(t), and sums over states replace integrals.
//!
//! Two modeling choices:
//!
//! * In the rate form, `in_rate` (m) and `out_rate` (e) are moves into the state
//!   from outside the country and moves out of the country. In count form
//!   these are the `immigration` and `emigration` fields, and interstate moves
//!   are separate.
//! * Interstate in-movers count as new-card demand in the receiving state even
//!   though they may already hold a card issued elsewhere.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::demography::{AgePyramid, FertilityConfig, RegionId, Sex, SurvivalSchedule};
use crate::error::{Error, Result};
use crate::projection::{apply_infant_survival, project_births, project_one_year, BirthCount};

/// Age at which a child's parent-linked number becomes a card of their own.
pub const CARD_AGE: usize = 15;

/// Relative tolerance for interstate closure on real-valued tallies.
const CLOSURE_REL_TOL: f64 = 1e-9;

/// Per-person annual rates applied to a state's population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRates {
    pub population: f64,
    pub birth_rate: f64,
    pub death_rate: f64,
    pub in_rate: f64,
    pub out_rate: f64,
}

impl FlowRates {
    fn validate(&self) -> Result<()> {
        let fields = [
            ("population", self.population),
            ("birth rate", self.birth_rate),
            ("death rate", self.death_rate),
            ("in rate", self.in_rate),
            ("out rate", self.out_rate),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("{name} {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Expected annual counts, count = rate × population.
    pub fn expected_tally(&self) -> FlowTally<f64> {
        FlowTally {
            births: self.birth_rate * self.population,
            deaths: self.death_rate * self.population,
            interstate_in: 0.0,
            interstate_out: 0.0,
            immigration: self.in_rate * self.population,
            emigration: self.out_rate * self.population,
        }
    }
}

/// The six annual person flows of one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowTally<T> {
    pub births: T,
    pub deaths: T,
    pub interstate_in: T,
    pub interstate_out: T,
    pub immigration: T,
    pub emigration: T,
}

pub type FlowCounts = FlowTally<u64>;

impl FlowTally<u64> {
    pub fn net_change(&self) -> i64 {
        let signed = self.births as i128 - self.deaths as i128 + self.interstate_in as i128
            - self.interstate_out as i128
            + self.immigration as i128
            - self.emigration as i128;
        signed as i64
    }

    pub fn new_card_demand(&self) -> u64 {
        self.births + self.interstate_in + self.immigration
    }

    pub fn to_real(&self) -> FlowTally<f64> {
        FlowTally {
            births: self.births as f64,
            deaths: self.deaths as f64,
            interstate_in: self.interstate_in as f64,
            interstate_out: self.interstate_out as f64,
            immigration: self.immigration as f64,
            emigration: self.emigration as f64,
        }
    }
}

impl FlowTally<f64> {
    pub fn net_change(&self) -> f64 {
        self.births - self.deaths + self.interstate_in - self.interstate_out + self.immigration
            - self.emigration
    }

    pub fn new_card_demand(&self) -> f64 {
        self.births + self.interstate_in + self.immigration
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowData {
    Rates(FlowRates),
    Counts(FlowCounts),
}

/// Annual flows for one state, either as rates or as counts.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFlows {
    pub state: RegionId,
    pub data: FlowData,
}

impl StateFlows {
    pub fn from_rates(state: RegionId, rates: FlowRates) -> Result<Self> {
        rates.validate()?;
        Ok(Self {
            state,
            data: FlowData::Rates(rates),
        })
    }

    pub fn from_counts(state: RegionId, counts: FlowCounts) -> Self {
        Self {
            state,
            data: FlowData::Counts(counts),
        }
    }

    pub fn is_rate_based(&self) -> bool {
        matches!(self.data, FlowData::Rates(_))
    }

    pub fn rates(&self) -> Option<&FlowRates> {
        match &self.data {
            FlowData::Rates(r) => Some(r),
            FlowData::Counts(_) => None,
        }
    }

    pub fn counts(&self) -> Option<&FlowCounts> {
        match &self.data {
            FlowData::Counts(c) => Some(c),
            FlowData::Rates(_) => None,
        }
    }

    /// Counts for count-based records, expected counts for rate-based ones.
    pub fn expected_tally(&self) -> FlowTally<f64> {
        match &self.data {
            FlowData::Rates(r) => r.expected_tally(),
            FlowData::Counts(c) => c.to_real(),
        }
    }
}

fn all_rates(flows: &[StateFlows]) -> Result<Vec<&FlowRates>> {
    flows
        .iter()
        .map(|f| {
            f.rates().ok_or_else(|| {
                Error::domain(format!(
                    "state {} has count-based flows where rates are required",
                    f.state
                ))
            })
        })
        .collect()
}

fn all_counts(flows: &[StateFlows]) -> Result<Vec<&FlowCounts>> {
    flows
        .iter()
        .map(|f| {
            f.counts().ok_or_else(|| {
                Error::domain(format!(
                    "state {} has rate-based flows where counts are required",
                    f.state
                ))
            })
        })
        .collect()
}

/// Net annual change in cards, the sum over states of (b - d + m - e)·S.
pub fn macro_net_card_change(flows: &[StateFlows]) -> Result<f64> {
    Ok(all_rates(flows)?
        .into_iter()
        .map(|r| (r.birth_rate - r.death_rate + r.in_rate - r.out_rate) * r.population)
        .sum())
}

/// Annual new-card demand, the sum over states of (b + m)·S.
pub fn macro_new_card_demand(flows: &[StateFlows]) -> Result<f64> {
    Ok(all_rates(flows)?
        .into_iter()
        .map(|r| (r.birth_rate + r.in_rate) * r.population)
        .sum())
}

/// Every interstate mover leaves one state and enters another, so the
/// national totals of out-moves and in-moves must agree.
pub fn check_interstate_closure(counts: &[FlowCounts]) -> Result<()> {
    let out: u128 = counts.iter().map(|c| c.interstate_out as u128).sum();
    let inn: u128 = counts.iter().map(|c| c.interstate_in as u128).sum();
    if out != inn {
        return Err(Error::consistency(format!(
            "interstate closure violated: total out-moves {out} != total in-moves {inn}"
        )));
    }
    Ok(())
}

fn check_interstate_closure_real(tallies: &[FlowTally<f64>]) -> Result<()> {
    let out: f64 = tallies.iter().map(|c| c.interstate_out).sum();
    let inn: f64 = tallies.iter().map(|c| c.interstate_in).sum();
    if (out - inn).abs() > CLOSURE_REL_TOL * out.abs().max(inn.abs()).max(1.0) {
        return Err(Error::consistency(format!(
            "interstate closure violated: total out-moves {out} != total in-moves {inn}"
        )));
    }
    Ok(())
}

/// Net annual change in cards from six-flow counts, summed over states.
pub fn micro_net_card_change(flows: &[StateFlows]) -> Result<i64> {
    let counts: Vec<FlowCounts> = all_counts(flows)?.into_iter().copied().collect();
    check_interstate_closure(&counts)?;
    Ok(counts.iter().map(FlowTally::<u64>::net_change).sum())
}

/// Per-state contributions to [`micro_net_card_change`], in input order.
pub fn micro_net_card_change_by_state(flows: &[StateFlows]) -> Result<Vec<(RegionId, i64)>> {
    let counts = all_counts(flows)?;
    let owned: Vec<FlowCounts> = counts.iter().map(|c| **c).collect();
    check_interstate_closure(&owned)?;
    Ok(flows
        .iter()
        .zip(counts)
        .map(|(f, c)| (f.state.clone(), c.net_change()))
        .collect())
}

/// Cards to be issued in a year: births + interstate in-moves + immigration.
/// Deaths and out-moves do not enter.
pub fn micro_new_card_demand(flows: &[StateFlows]) -> Result<u64> {
    let counts: Vec<FlowCounts> = all_counts(flows)?.into_iter().copied().collect();
    check_interstate_closure(&counts)?;
    Ok(counts.iter().map(FlowTally::<u64>::new_card_demand).sum())
}

/// [`micro_net_card_change`] on unrounded expected counts.
pub fn micro_net_card_change_expected(tallies: &[FlowTally<f64>]) -> Result<f64> {
    check_interstate_closure_real(tallies)?;
    Ok(tallies.iter().map(FlowTally::<f64>::net_change).sum())
}

/// [`micro_new_card_demand`] on unrounded expected counts.
pub fn micro_new_card_demand_expected(tallies: &[FlowTally<f64>]) -> Result<f64> {
    check_interstate_closure_real(tallies)?;
    Ok(tallies.iter().map(FlowTally::<f64>::new_card_demand).sum())
}

/// When a newborn enters the card system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IssuancePolicy {
    /// Number at birth linked to a parent's card; own card at 15.
    #[default]
    AtBirth,
    /// As `AtBirth`, but only infants who complete their first year are
    /// linked.
    AtAgeOne,
    /// Own number and card at birth; no re-issuance at 15.
    NumberAndCardAtBirth,
}

impl IssuancePolicy {
    /// Whether turning 15 produces a new physical card.
    pub fn issues_at_card_age(self) -> bool {
        !matches!(self, IssuancePolicy::NumberAndCardAtBirth)
    }

    /// Births entering the system under this policy.
    pub fn admitted_births(self, births: &BirthCount, fert: &FertilityConfig) -> BirthCount {
        match self {
            IssuancePolicy::AtAgeOne => apply_infant_survival(births, fert),
            IssuancePolicy::AtBirth | IssuancePolicy::NumberAndCardAtBirth => *births,
        }
    }

    /// Youngest age at which a death returns a card rather than a linkage.
    fn card_holder_age(self) -> usize {
        if self.issues_at_card_age() {
            CARD_AGE
        } else {
            0
        }
    }
}

impl fmt::Display for IssuancePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IssuancePolicy::AtBirth => "at-birth",
            IssuancePolicy::AtAgeOne => "at-age-one",
            IssuancePolicy::NumberAndCardAtBirth => "full",
        })
    }
}

impl FromStr for IssuancePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "at-birth" | "at_birth" => Ok(IssuancePolicy::AtBirth),
            "at-age-one" | "at_age_one" => Ok(IssuancePolicy::AtAgeOne),
            "full" | "number-and-card-at-birth" | "number_and_card_at_birth" => {
                Ok(IssuancePolicy::NumberAndCardAtBirth)
            }
            other => Err(Error::domain(format!(
                "unknown issuance policy {other:?} (expected at-birth, at-age-one or full)"
            ))),
        }
    }
}

/// Card inventory of one state during one year.
///
/// `active_cards` is the running balance and moves as cards are issued or
/// returned. `opening_cards` is the balance at the start of the year, so
/// `active = opening + issued - returned` holds at every point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardLedger {
    pub state: RegionId,
    pub year: i32,
    pub opening_cards: u64,
    pub active_cards: u64,
    pub issued_this_year: u64,
    pub returned_this_year: u64,
    /// Persons under 15 holding a number linked to a parent or guardian.
    pub child_links: u64,
}

impl CardLedger {
    pub fn new(state: RegionId, year: i32, active_cards: u64, child_links: u64) -> Self {
        Self {
            state,
            year,
            opening_cards: active_cards,
            active_cards,
            issued_this_year: 0,
            returned_this_year: 0,
            child_links,
        }
    }

    /// Opening ledger for a fully enrolled population: card holders are
    /// everyone at or above the policy's card age, links are everyone below.
    pub fn from_pyramid(pop: &AgePyramid, policy: IssuancePolicy) -> Self {
        let holder_age = policy.card_holder_age();
        let (mut cards, mut links) = (0.0, 0.0);
        for (_, age, count) in pop.cells() {
            if age >= holder_age {
                cards += count;
            } else {
                links += count;
            }
        }
        Self::new(
            pop.region().clone(),
            pop.time_label(),
            to_whole(cards),
            to_whole(links),
        )
    }

    pub fn issue_cards(&mut self, n: u64) {
        self.active_cards += n;
        self.issued_this_year += n;
    }

    pub fn link_children(&mut self, n: u64) {
        self.child_links += n;
    }

    fn return_cards(&mut self, n: u64) -> Result<()> {
        if n > self.active_cards {
            return Err(Error::consistency(format!(
                "state {} year {}: returning {n} cards with only {} active",
                self.state, self.year, self.active_cards
            )));
        }
        self.active_cards -= n;
        self.returned_this_year += n;
        Ok(())
    }

    fn unlink_children(&mut self, n: u64) -> Result<()> {
        if n > self.child_links {
            return Err(Error::consistency(format!(
                "state {} year {}: removing {n} child links with only {} held",
                self.state, self.year, self.child_links
            )));
        }
        self.child_links -= n;
        Ok(())
    }

    /// Checks the year's accounting identity and opens the following year.
    pub fn close_year(&self) -> Result<CardLedger> {
        let expected = self.opening_cards as i128 + self.issued_this_year as i128
            - self.returned_this_year as i128;
        if expected != self.active_cards as i128 {
            return Err(Error::consistency(format!(
                "state {} year {}: {} opening + {} issued - {} returned != {} active",
                self.state,
                self.year,
                self.opening_cards,
                self.issued_this_year,
                self.returned_this_year,
                self.active_cards
            )));
        }
        Ok(CardLedger::new(
            self.state.clone(),
            self.year + 1,
            self.active_cards,
            self.child_links,
        ))
    }
}

/// Expected value to whole persons or cards, half to even.
fn to_whole(x: f64) -> u64 {
    x.round_ties_even().max(0.0) as u64
}

/// Converts this year's 14-year-olds who survive to 15 from parent links into
/// cards of their own.
///
/// Returns the expected number of new cards and the updated ledger; the
/// ledger moves by the rounded amount, once.
pub fn age15_transition(
    pop: &AgePyramid,
    survival: &SurvivalSchedule,
    ledger: &CardLedger,
) -> Result<(f64, CardLedger)> {
    let from_age = CARD_AGE - 1;
    let mut expected = 0.0;
    for sex in Sex::ALL {
        let count = pop.get(sex, from_age).ok_or_else(|| {
            Error::domain(format!(
                "pyramid {} has no {sex} count at age {from_age}",
                pop.region()
            ))
        })?;
        expected += count * survival.one_year(sex, from_age);
    }
    let whole = to_whole(expected);
    let mut next = ledger.clone();
    next.unlink_children(whole)?;
    next.issue_cards(whole);
    Ok((expected, next))
}

/// Deaths and emigrant returns keyed by (sex, age).
pub type DeathsByAge = BTreeMap<(Sex, usize), u64>;

/// Books card returns for deaths and emigration.
///
/// Deaths at 15 and over and all emigrants return cards. Deaths under 15
/// remove the parent-linked number instead.
pub fn process_card_returns(
    deaths_by_age: &DeathsByAge,
    emigrants: u64,
    ledger: &CardLedger,
) -> Result<CardLedger> {
    process_returns_from(deaths_by_age, emigrants, ledger, CARD_AGE)
}

fn process_returns_from(
    deaths_by_age: &DeathsByAge,
    emigrants: u64,
    ledger: &CardLedger,
    holder_age: usize,
) -> Result<CardLedger> {
    let (mut card_deaths, mut child_deaths) = (0u64, 0u64);
    for (&(_, age), &n) in deaths_by_age {
        if age >= holder_age {
            card_deaths += n;
        } else {
            child_deaths += n;
        }
    }
    let mut next = ledger.clone();
    next.unlink_children(child_deaths)?;
    next.return_cards(card_deaths + emigrants)?;
    Ok(next)
}

/// One year of projected card demand. All values are expected counts;
/// rounding happens when the series is written out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandRow {
    pub year: i32,
    pub new_cards_male: f64,
    pub new_cards_female: f64,
    pub returned_cards: f64,
    /// Birth-driven part of the new cards, after the policy's infant
    /// adjustment.
    pub births: BirthCount,
    pub age15_male: f64,
    pub age15_female: f64,
    pub immigration: f64,
}

impl DemandRow {
    pub fn new_cards_total(&self) -> f64 {
        self.new_cards_male + self.new_cards_female
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandSeries {
    pub start_year: i32,
    pub rows: Vec<DemandRow>,
}

impl DemandSeries {
    /// Rows must run in consecutive years from `start_year` with every value
    /// non-negative.
    pub fn new(start_year: i32, rows: Vec<DemandRow>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.year != start_year + i as i32 {
                return Err(Error::domain(format!(
                    "demand row {i} has year {} but {} was expected",
                    row.year,
                    start_year + i as i32
                )));
            }
            let values = [row.new_cards_male, row.new_cards_female, row.returned_cards];
            if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::domain(format!(
                    "demand row for {} has a negative or non-finite value",
                    row.year
                )));
            }
        }
        Ok(Self { start_year, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row-wise sum of regional series covering the same years.
    pub fn sum(parts: &[DemandSeries]) -> Result<DemandSeries> {
        let Some(first) = parts.first() else {
            return Ok(DemandSeries::default());
        };
        let mut rows = first.rows.clone();
        for part in &parts[1..] {
            if part.start_year != first.start_year || part.rows.len() != rows.len() {
                return Err(Error::consistency(
                    "regional demand series cover different years",
                ));
            }
            for (acc, r) in rows.iter_mut().zip(&part.rows) {
                acc.new_cards_male += r.new_cards_male;
                acc.new_cards_female += r.new_cards_female;
                acc.returned_cards += r.returned_cards;
                acc.births.total += r.births.total;
                acc.births.male += r.births.male;
                acc.births.female += r.births.female;
                acc.age15_male += r.age15_male;
                acc.age15_female += r.age15_female;
                acc.immigration += r.immigration;
            }
        }
        DemandSeries::new(first.start_year, rows)
    }
}

/// International immigration and emigration per year, summed over states.
fn international_flows(flows: &[StateFlows]) -> (f64, f64) {
    flows.iter().fold((0.0, 0.0), |(imm, emi), f| {
        let t = f.expected_tally();
        (imm + t.immigration, emi + t.emigration)
    })
}

fn deaths_from(pop: &AgePyramid, survival: &SurvivalSchedule, sex: Sex, age: usize) -> f64 {
    pop.count(sex, age) * (1.0 - survival.one_year(sex, age))
}

/// Annual new and returned cards over `horizon` years starting at the
/// pyramid's year.
///
/// Each row takes the population at the start of its year and adds births
/// admitted under `policy`, survivors turning 15 when the policy issues cards
/// at that age, and immigrants split by the population's sex composition.
/// Returns are deaths among card holders plus emigrants. Under
/// [`IssuancePolicy::NumberAndCardAtBirth`] every person holds a card, so
/// deaths at all ages return one.
pub fn annual_card_requirement_series(
    pop: &AgePyramid,
    survival: &SurvivalSchedule,
    fert: &FertilityConfig,
    flows: &[StateFlows],
    horizon: usize,
    policy: IssuancePolicy,
) -> Result<DemandSeries> {
    if horizon < 1 {
        return Err(Error::domain("demand horizon must be at least one year"));
    }
    let axis = survival.axis();
    pop.require_complete(axis)?;
    let (immigration, emigration) = international_flows(flows);
    let holder_age = policy.card_holder_age();

    let mut rows = Vec::with_capacity(horizon);
    let mut frame = pop.clone();
    for k in 0..horizon {
        let births = policy.admitted_births(&project_births(&frame, survival, fert)?, fert);
        let (age15_male, age15_female) = if policy.issues_at_card_age() {
            let at = CARD_AGE - 1;
            (
                frame.count(Sex::Male, at) * survival.one_year(Sex::Male, at),
                frame.count(Sex::Female, at) * survival.one_year(Sex::Female, at),
            )
        } else {
            (0.0, 0.0)
        };
        let total = frame.total();
        let male_share = if total > 0.0 {
            frame.total_by_sex(Sex::Male) / total
        } else {
            0.5
        };
        let mut deaths = 0.0;
        for sex in Sex::ALL {
            for age in holder_age..=axis.max_age() {
                deaths += deaths_from(&frame, survival, sex, age);
            }
        }
        rows.push(DemandRow {
            year: pop.time_label() + k as i32,
            new_cards_male: births.male + age15_male + immigration * male_share,
            new_cards_female: births.female + age15_female + immigration * (1.0 - male_share),
            returned_cards: deaths + emigration,
            births,
            age15_male,
            age15_female,
            immigration,
        });
        if k + 1 < horizon {
            frame = project_one_year(&frame, survival, fert)?;
        }
    }
    DemandSeries::new(pop.time_label(), rows)
}

/// Runs a state's card ledger forward `horizon` years with whole-card
/// bookkeeping.
///
/// Returns one ledger per year as it stands at year end, before the year is
/// closed. Expected counts are rounded half to even at each booking.
pub fn simulate_ledger(
    pop: &AgePyramid,
    survival: &SurvivalSchedule,
    fert: &FertilityConfig,
    flows: &[StateFlows],
    horizon: usize,
    policy: IssuancePolicy,
    opening: &CardLedger,
) -> Result<Vec<CardLedger>> {
    let axis = survival.axis();
    pop.require_complete(axis)?;
    let (immigration, emigration) = international_flows(flows);
    let holder_age = policy.card_holder_age();

    let mut years = Vec::with_capacity(horizon);
    let mut ledger = opening.clone();
    let mut frame = pop.clone();
    for _ in 0..horizon {
        let births = policy.admitted_births(&project_births(&frame, survival, fert)?, fert);
        let newborn = to_whole(births.male) + to_whole(births.female);
        if policy.issues_at_card_age() {
            ledger.link_children(newborn);
        } else {
            ledger.issue_cards(newborn);
        }
        ledger.issue_cards(to_whole(immigration));

        let mut deaths = DeathsByAge::new();
        for sex in Sex::ALL {
            for age in axis.ages() {
                let n = to_whole(deaths_from(&frame, survival, sex, age));
                if n > 0 {
                    deaths.insert((sex, age), n);
                }
            }
        }
        ledger = process_returns_from(&deaths, to_whole(emigration), &ledger, holder_age)?;

        if policy.issues_at_card_age() {
            ledger = age15_transition(&frame, survival, &ledger)?.1;
        }

        years.push(ledger.clone());
        ledger = ledger.close_year()?;
        frame = project_one_year(&frame, survival, fert)?;
    }
    Ok(years)
}
