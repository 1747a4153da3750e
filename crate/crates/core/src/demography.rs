//! Population containers: age axis, sex, regions, age pyramids and the
//! survival and fertility schedules that drive a projection.
//!
//! Counts are stored as `f64` expected values. Nothing here rounds; rounding
//! to whole persons or cards happens only when a report is written.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Ages `0..=max_age`, where `max_age` is the last age of life.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgeAxis {
    max_age: usize,
}

impl AgeAxis {
    pub const DEFAULT_MAX_AGE: usize = 100;

    pub fn new(max_age: usize) -> Result<Self> {
        if max_age < 1 {
            return Err(Error::domain("age axis needs max_age >= 1"));
        }
        Ok(Self { max_age })
    }

    pub fn max_age(&self) -> usize {
        self.max_age
    }

    /// Number of single-year cells, `max_age + 1`.
    pub fn len(&self) -> usize {
        self.max_age + 1
    }

    pub fn contains(&self, age: usize) -> bool {
        age <= self.max_age
    }

    pub fn ages(&self) -> RangeInclusive<usize> {
        0..=self.max_age
    }
}

impl Default for AgeAxis {
    fn default() -> Self {
        Self {
            max_age: Self::DEFAULT_MAX_AGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sex {
    Male,
    Female,
}

impl Sex {
    pub const ALL: [Sex; 2] = [Sex::Male, Sex::Female];

    pub fn index(self) -> usize {
        match self {
            Sex::Male => 0,
            Sex::Female => 1,
        }
    }

    /// Single-letter code used in CSV files.
    pub fn code(self) -> &'static str {
        match self {
            Sex::Male => "M",
            Sex::Female => "F",
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Sex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Ok(Sex::Male),
            "f" | "female" => Ok(Sex::Female),
            other => Err(Error::domain(format!("unknown sex {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum RegionLevel {
    Country,
    State,
    #[default]
    Region,
    Block,
    Ward,
}

impl fmt::Display for RegionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionLevel::Country => "country",
            RegionLevel::State => "state",
            RegionLevel::Region => "region",
            RegionLevel::Block => "block",
            RegionLevel::Ward => "ward",
        };
        f.write_str(s)
    }
}

impl FromStr for RegionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "country" => Ok(RegionLevel::Country),
            "state" => Ok(RegionLevel::State),
            "region" => Ok(RegionLevel::Region),
            "block" => Ok(RegionLevel::Block),
            "ward" => Ok(RegionLevel::Ward),
            other => Err(Error::domain(format!("unknown region level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId {
    code: String,
    level: RegionLevel,
}

impl RegionId {
    pub fn new(code: impl Into<String>, level: RegionLevel) -> Result<Self> {
        let code = code.into();
        if code.trim().is_empty() {
            return Err(Error::domain("region code must be non-empty"));
        }
        Ok(Self { code, level })
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn level(&self) -> RegionLevel {
        self.level
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// Population by sex and single-year age for one region at one point in time.
///
/// Cells are stored sparsely so that partially populated inputs (a CSV with a
/// handful of rows, say) can be represented and then checked with
/// [`validate_pyramid`]. Operations that need every cell call
/// [`AgePyramid::require_complete`] first.
#[derive(Debug, Clone, PartialEq)]
pub struct AgePyramid {
    region: RegionId,
    time_label: i32,
    cells: BTreeMap<(Sex, usize), f64>,
}

impl AgePyramid {
    pub fn new(region: RegionId, time_label: i32) -> Self {
        Self {
            region,
            time_label,
            cells: BTreeMap::new(),
        }
    }

    /// A complete pyramid with every cell set to zero.
    pub fn zeros(region: RegionId, time_label: i32, axis: AgeAxis) -> Self {
        let mut p = Self::new(region, time_label);
        for sex in Sex::ALL {
            for age in axis.ages() {
                p.cells.insert((sex, age), 0.0);
            }
        }
        p
    }

    /// Builds a complete pyramid from per-sex vectors indexed by age.
    pub fn from_dense(
        region: RegionId,
        time_label: i32,
        male: &[f64],
        female: &[f64],
    ) -> Result<Self> {
        if male.len() != female.len() {
            return Err(Error::domain(format!(
                "male and female vectors differ in length ({} vs {})",
                male.len(),
                female.len()
            )));
        }
        if male.len() < 2 {
            return Err(Error::domain("a pyramid needs at least ages 0 and 1"));
        }
        let mut p = Self::new(region, time_label);
        for (age, (&m, &f)) in male.iter().zip(female).enumerate() {
            p.cells.insert((Sex::Male, age), m);
            p.cells.insert((Sex::Female, age), f);
        }
        Ok(p)
    }

    pub fn region(&self) -> &RegionId {
        &self.region
    }

    pub fn time_label(&self) -> i32 {
        self.time_label
    }

    pub fn with_time_label(mut self, time_label: i32) -> Self {
        self.time_label = time_label;
        self
    }

    pub fn set(&mut self, sex: Sex, age: usize, count: f64) {
        self.cells.insert((sex, age), count);
    }

    pub fn get(&self, sex: Sex, age: usize) -> Option<f64> {
        self.cells.get(&(sex, age)).copied()
    }

    /// Count at a cell, with missing cells read as zero.
    pub fn count(&self, sex: Sex, age: usize) -> f64 {
        self.get(sex, age).unwrap_or(0.0)
    }

    pub fn cells(&self) -> impl Iterator<Item = (Sex, usize, f64)> + '_ {
        self.cells.iter().map(|(&(s, a), &c)| (s, a, c))
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cells.values().sum()
    }

    pub fn total_by_sex(&self, sex: Sex) -> f64 {
        self.cells
            .iter()
            .filter(|((s, _), _)| *s == sex)
            .map(|(_, c)| c)
            .sum()
    }

    /// Counts for one sex as a dense vector over `axis`, missing cells as zero.
    pub fn dense(&self, sex: Sex, axis: AgeAxis) -> Vec<f64> {
        axis.ages().map(|age| self.count(sex, age)).collect()
    }

    /// Folds every cell above the last age of life into the last age.
    pub fn collapse_above(&self, axis: AgeAxis) -> Self {
        let mut out = Self::new(self.region.clone(), self.time_label);
        for (sex, age, count) in self.cells() {
            let age = age.min(axis.max_age());
            *out.cells.entry((sex, age)).or_insert(0.0) += count;
        }
        out
    }

    /// Applies `f` to every stored cell.
    pub fn map_counts(&self, mut f: impl FnMut(Sex, usize, f64) -> f64) -> Self {
        let cells = self
            .cells
            .iter()
            .map(|(&(s, a), &c)| ((s, a), f(s, a, c)))
            .collect();
        Self {
            region: self.region.clone(),
            time_label: self.time_label,
            cells,
        }
    }

    /// Errors with the full violation list unless the pyramid is valid on `axis`.
    pub fn require_complete(&self, axis: AgeAxis) -> Result<()> {
        let report = validate_pyramid(self, axis);
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "pyramid {} ({}) is invalid: {report}",
                self.region, self.time_label
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativeCount { sex: Sex, age: usize, count: f64 },
    NonFiniteCount { sex: Sex, age: usize },
    MissingCell { sex: Sex, age: usize },
    AgeBeyondAxis { sex: Sex, age: usize, max_age: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeCount { sex, age, count } => {
                write!(f, "negative count {count} at sex {sex} age {age}")
            }
            Violation::NonFiniteCount { sex, age } => {
                write!(f, "non-finite count at sex {sex} age {age}")
            }
            Violation::MissingCell { sex, age } => {
                write!(f, "missing cell at sex {sex} age {age}")
            }
            Violation::AgeBeyondAxis { sex, age, max_age } => {
                write!(f, "age {age} (sex {sex}) beyond last age {max_age}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every broken invariant of `pyramid` relative to `axis`.
pub fn validate_pyramid(pyramid: &AgePyramid, axis: AgeAxis) -> ValidationReport {
    let mut violations = Vec::new();
    for (sex, age, count) in pyramid.cells() {
        if !axis.contains(age) {
            violations.push(Violation::AgeBeyondAxis {
                sex,
                age,
                max_age: axis.max_age(),
            });
        }
        if !count.is_finite() {
            violations.push(Violation::NonFiniteCount { sex, age });
        } else if count < 0.0 {
            violations.push(Violation::NegativeCount { sex, age, count });
        }
    }
    for sex in Sex::ALL {
        for age in axis.ages() {
            if pyramid.get(sex, age).is_none() {
                violations.push(Violation::MissingCell { sex, age });
            }
        }
    }
    ValidationReport { violations }
}

/// One-year survival probabilities by sex and age for a region.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSchedule {
    region: RegionId,
    axis: AgeAxis,
    one_year: [Vec<f64>; 2],
}

impl SurvivalSchedule {
    /// `male[x]` and `female[x]` are the chances of surviving from age x to
    /// x+1. Both vectors cover the whole axis and end in 0.
    pub fn new(region: RegionId, male: Vec<f64>, female: Vec<f64>) -> Result<Self> {
        if male.len() != female.len() {
            return Err(Error::domain(format!(
                "survival vectors differ in length ({} vs {})",
                male.len(),
                female.len()
            )));
        }
        let axis = AgeAxis::new(male.len().saturating_sub(1))?;
        for (sex, v) in [(Sex::Male, &male), (Sex::Female, &female)] {
            if let Some((age, p)) = v
                .iter()
                .enumerate()
                .find(|(_, p)| !(0.0..=1.0).contains(*p))
            {
                return Err(Error::domain(format!(
                    "survival probability {p} at sex {sex} age {age} is outside [0, 1]"
                )));
            }
            let last = v[axis.max_age()];
            if last != 0.0 {
                return Err(Error::domain(format!(
                    "survival at the last age {} must be 0 (sex {sex} has {last})",
                    axis.max_age()
                )));
            }
        }
        Ok(Self {
            region,
            axis,
            one_year: [male, female],
        })
    }

    /// Same probability `p` at every age below the last, for both sexes.
    pub fn constant(region: RegionId, axis: AgeAxis, p: f64) -> Result<Self> {
        let mut v = vec![p; axis.len()];
        v[axis.max_age()] = 0.0;
        Self::new(region, v.clone(), v)
    }

    pub fn region(&self) -> &RegionId {
        &self.region
    }

    pub fn axis(&self) -> AgeAxis {
        self.axis
    }

    /// Probability of surviving from `age` to `age + 1`. Panics if `age` is
    /// off the axis.
    pub fn one_year(&self, sex: Sex, age: usize) -> f64 {
        self.one_year[sex.index()][age]
    }

    pub fn one_year_slice(&self, sex: Sex) -> &[f64] {
        &self.one_year[sex.index()]
    }

    /// Probability that someone aged `age` is still alive `span` years later:
    /// the product of the one-year factors over `age..age + span`.
    pub fn multi_year_survival(&self, sex: Sex, age: usize, span: usize) -> Result<f64> {
        if !self.axis.contains(age) {
            return Err(Error::domain(format!(
                "age {age} is off the axis 0..={}",
                self.axis.max_age()
            )));
        }
        if age + span > self.axis.len() {
            return Err(Error::domain(format!(
                "age {age} + span {span} runs past {}",
                self.axis.len()
            )));
        }
        Ok(self.one_year[sex.index()][age..age + span]
            .iter()
            .product())
    }
}

/// Free-function form of [`SurvivalSchedule::multi_year_survival`].
pub fn multi_year_survival(
    schedule: &SurvivalSchedule,
    sex: Sex,
    age: usize,
    span: usize,
) -> Result<f64> {
    schedule.multi_year_survival(sex, age, span)
}

/// Age-specific fertility and the birth-side parameters used with it.
#[derive(Debug, Clone, PartialEq)]
pub struct FertilityConfig {
    rates: [f64; FertilityConfig::REPRODUCTIVE_SPAN],
    eligible_proportion: f64,
    sex_ratio_at_birth: f64,
    infant_mortality: f64,
}

impl FertilityConfig {
    pub const FIRST_REPRODUCTIVE_AGE: usize = 15;
    pub const LAST_REPRODUCTIVE_AGE: usize = 49;
    const REPRODUCTIVE_SPAN: usize = Self::LAST_REPRODUCTIVE_AGE - Self::FIRST_REPRODUCTIVE_AGE + 1;

    /// Zero fertility at every age. `sex_ratio_at_birth` is males per female;
    /// `infant_mortality` is deaths before age one per 1000 live births.
    pub fn new(
        eligible_proportion: f64,
        sex_ratio_at_birth: f64,
        infant_mortality: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&eligible_proportion) {
            return Err(Error::domain(format!(
                "eligible proportion {eligible_proportion} is outside [0, 1]"
            )));
        }
        if !(sex_ratio_at_birth.is_finite() && sex_ratio_at_birth > 0.0) {
            return Err(Error::domain(format!(
                "sex ratio at birth {sex_ratio_at_birth} must be positive"
            )));
        }
        if !(0.0..=1000.0).contains(&infant_mortality) {
            return Err(Error::domain(format!(
                "infant mortality {infant_mortality} per 1000 is outside [0, 1000]"
            )));
        }
        Ok(Self {
            rates: [0.0; Self::REPRODUCTIVE_SPAN],
            eligible_proportion,
            sex_ratio_at_birth,
            infant_mortality,
        })
    }

    pub fn reproductive_ages() -> RangeInclusive<usize> {
        Self::FIRST_REPRODUCTIVE_AGE..=Self::LAST_REPRODUCTIVE_AGE
    }

    /// Sets F(age). Only ages 15..=49 may carry a rate; a zero rate is
    /// accepted anywhere.
    pub fn set_rate(&mut self, age: usize, rate: f64) -> Result<()> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::domain(format!(
                "fertility rate {rate} at age {age} must be finite and >= 0"
            )));
        }
        if Self::reproductive_ages().contains(&age) {
            self.rates[age - Self::FIRST_REPRODUCTIVE_AGE] = rate;
            Ok(())
        } else if rate == 0.0 {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "fertility rate at age {age} is outside the reproductive ages 15..=49"
            )))
        }
    }

    pub fn with_rates(mut self, rates: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        for (age, rate) in rates {
            self.set_rate(age, rate)?;
        }
        Ok(self)
    }

    /// F(age), zero outside the reproductive ages.
    pub fn rate(&self, age: usize) -> f64 {
        if Self::reproductive_ages().contains(&age) {
            self.rates[age - Self::FIRST_REPRODUCTIVE_AGE]
        } else {
            0.0
        }
    }

    /// Copy with every F(x) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut out = self.clone();
        for (age, r) in Self::reproductive_ages().zip(self.rates) {
            out.set_rate(age, r * factor)?;
        }
        Ok(out)
    }

    pub fn eligible_proportion(&self) -> f64 {
        self.eligible_proportion
    }

    pub fn sex_ratio_at_birth(&self) -> f64 {
        self.sex_ratio_at_birth
    }

    pub fn infant_mortality(&self) -> f64 {
        self.infant_mortality
    }

    /// Share of births that are male, r / (1 + r).
    pub fn male_share(&self) -> f64 {
        self.sex_ratio_at_birth / (1.0 + self.sex_ratio_at_birth)
    }

    /// Chance a live birth completes its first year.
    pub fn infant_survival(&self) -> f64 {
        1.0 - self.infant_mortality / 1000.0
    }
}
