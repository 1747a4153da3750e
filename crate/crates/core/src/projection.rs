//! Cohort-component projection: births from age-specific fertility, survival
//! of existing cohorts, and the yearly loop that combines them.

use crate::demography::{AgePyramid, FertilityConfig, Sex, SurvivalSchedule};
use crate::error::{Error, Result};

/// Live births in one year, total and split by sex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthCount {
    pub total: f64,
    pub male: f64,
    pub female: f64,
}

impl BirthCount {
    /// Splits `total` with `male_share` going to boys.
    pub fn split(total: f64, male_share: f64) -> Self {
        let male = total * male_share;
        Self {
            total,
            male,
            female: total - male,
        }
    }

    pub fn by_sex(&self, sex: Sex) -> f64 {
        match sex {
            Sex::Male => self.male,
            Sex::Female => self.female,
        }
    }
}

/// Births during the year starting at `pop`:
/// the sum over mothers aged 15..=49 of s(x, x+1) · P(x) · F(x) · K,
/// with P the female count. The survival factor multiplies the start-of-year
/// female count, in that order.
pub fn project_births(
    pop: &AgePyramid,
    survival: &SurvivalSchedule,
    fert: &FertilityConfig,
) -> Result<BirthCount> {
    if survival.axis().max_age() < FertilityConfig::LAST_REPRODUCTIVE_AGE {
        return Err(Error::domain(format!(
            "survival schedule ends at age {}, before the last reproductive age {}",
            survival.axis().max_age(),
            FertilityConfig::LAST_REPRODUCTIVE_AGE
        )));
    }
    let k = fert.eligible_proportion();
    let mut total = 0.0;
    for age in FertilityConfig::reproductive_ages() {
        let women = pop.get(Sex::Female, age).ok_or_else(|| {
            Error::domain(format!(
                "pyramid {} has no female count at age {age}",
                pop.region()
            ))
        })?;
        total += survival.one_year(Sex::Female, age) * women * fert.rate(age) * k;
    }
    Ok(BirthCount::split(total, fert.male_share()))
}

/// Births reduced to those expected to complete their first year.
pub fn apply_infant_survival(births: &BirthCount, fert: &FertilityConfig) -> BirthCount {
    let factor = fert.infant_survival();
    BirthCount {
        total: births.total * factor,
        male: births.male * factor,
        female: births.female * factor,
    }
}

/// Ages every cohort forward by `span` years.
///
/// The cohort at age x lands at x + span scaled by the multi-year survival
/// from x. Cohorts that would pass the last age die out, and the youngest
/// `span` ages of the result are zero because no births are added here.
pub fn survive_cohorts(
    pop: &AgePyramid,
    survival: &SurvivalSchedule,
    span: usize,
) -> Result<AgePyramid> {
    let axis = survival.axis();
    if span == 0 {
        return Err(Error::domain("survival span must be at least one year"));
    }
    if span > axis.max_age() {
        return Err(Error::domain(format!(
            "span {span} exceeds the last age {}",
            axis.max_age()
        )));
    }
    pop.require_complete(axis)?;
    let mut out = AgePyramid::zeros(
        pop.region().clone(),
        pop.time_label() + span as i32,
        axis,
    );
    for sex in Sex::ALL {
        let s = survival.one_year_slice(sex);
        for age in 0..=axis.max_age() - span {
            let factor: f64 = s[age..age + span].iter().product();
            out.set(sex, age + span, pop.count(sex, age) * factor);
        }
    }
    Ok(out)
}

/// Survivors after `span` years of the age group `start_age..start_age + width`
/// for one sex.
///
/// The continuous group integral is taken with the rectangle rule on
/// single-year cells, so this is exactly the sum of the per-cohort survivors.
pub fn age_group_survivors(
    pop: &AgePyramid,
    survival: &SurvivalSchedule,
    sex: Sex,
    start_age: usize,
    width: usize,
    span: usize,
) -> Result<f64> {
    let axis = survival.axis();
    if width == 0 {
        return Err(Error::domain("age group width must be at least one year"));
    }
    if start_age + width + span > axis.len() {
        return Err(Error::domain(format!(
            "group {start_age}..{} projected {span} years runs past the last age {}",
            start_age + width,
            axis.max_age()
        )));
    }
    let mut total = 0.0;
    for age in start_age..start_age + width {
        let count = pop.get(sex, age).ok_or_else(|| {
            Error::domain(format!("pyramid has no {sex} count at age {age}"))
        })?;
        total += count * survival.multi_year_survival(sex, age, span)?;
    }
    Ok(total)
}

/// Year-by-year frames of a closed-population projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSeries {
    horizon: usize,
    frames: Vec<AgePyramid>,
}

impl ProjectionSeries {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `horizon + 1` frames; the first is the input pyramid.
    pub fn frames(&self) -> &[AgePyramid] {
        &self.frames
    }

    pub fn last(&self) -> &AgePyramid {
        self.frames.last().expect("series always holds the input frame")
    }

    pub fn totals(&self) -> Vec<f64> {
        self.frames.iter().map(AgePyramid::total).collect()
    }
}

/// One projection step: survive every cohort a year and put the year's births
/// at age 0. Infant deaths are not applied here.
pub fn project_one_year(
    frame: &AgePyramid,
    survival: &SurvivalSchedule,
    fert: &FertilityConfig,
) -> Result<AgePyramid> {
    let births = project_births(frame, survival, fert)?;
    let mut next = survive_cohorts(frame, survival, 1)?;
    for sex in Sex::ALL {
        next.set(sex, 0, births.by_sex(sex));
    }
    Ok(next)
}

pub fn project_population(
    pop: &AgePyramid,
    survival: &SurvivalSchedule,
    fert: &FertilityConfig,
    horizon: usize,
) -> Result<ProjectionSeries> {
    pop.require_complete(survival.axis())?;
    let mut frames = Vec::with_capacity(horizon + 1);
    frames.push(pop.clone());
    for _ in 0..horizon {
        let next = project_one_year(frames.last().unwrap(), survival, fert)?;
        frames.push(next);
    }
    Ok(ProjectionSeries { horizon, frames })
}

/// Finds the multiplier on every F(x) that makes the projected total after
/// `horizon` years equal `target_total`, by bisection.
///
/// Returns the scaled fertility config and the multiplier.
pub fn calibrate_fertility_scale(
    pop: &AgePyramid,
    survival: &SurvivalSchedule,
    fert: &FertilityConfig,
    horizon: usize,
    target_total: f64,
) -> Result<(FertilityConfig, f64)> {
    let total_at = |scale: f64| -> Result<f64> {
        let f = fert.scaled(scale)?;
        Ok(project_population(pop, survival, &f, horizon)?.last().total())
    };
    let floor = total_at(0.0)?;
    if target_total < floor {
        return Err(Error::domain(format!(
            "target {target_total} is below the zero-fertility total {floor}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut grow = 0;
    while total_at(hi)? < target_total {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::domain(format!(
                "target {target_total} is unreachable by scaling fertility"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total_at(mid)? < target_total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = 0.5 * (lo + hi);
    Ok((fert.scaled(scale)?, scale))
}
