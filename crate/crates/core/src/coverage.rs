//! Corrections applied to enumerated counts before projecting: dual-system
//! estimation of the true total, net-omission inflation, proration of
//! persons with unknown age and inclusion of houseless segments.

use std::collections::BTreeMap;

use crate::demography::{AgePyramid, Sex};
use crate::error::{Error, Result};

/// Tolerance on the sum of a segment's age-profile weights.
pub const PROFILE_WEIGHT_TOL: f64 = 1e-9;

/// Sizes of two independent enumerations and their matched overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualSystemCounts {
    pub first_list: u64,
    pub second_list: u64,
    pub matched: u64,
}

impl DualSystemCounts {
    pub fn new(first_list: u64, second_list: u64, matched: u64) -> Self {
        Self {
            first_list,
            second_list,
            matched,
        }
    }

    fn check(&self) -> Result<()> {
        if self.first_list == 0 || self.second_list == 0 {
            return Err(Error::domain("both enumeration lists must be non-empty"));
        }
        if self.matched > self.first_list.min(self.second_list) {
            return Err(Error::domain(format!(
                "matched count {} exceeds the smaller list ({})",
                self.matched,
                self.first_list.min(self.second_list)
            )));
        }
        Ok(())
    }
}

/// Lincoln–Petersen estimate of the total, n1·n2/m.
pub fn dual_system_estimate(counts: &DualSystemCounts) -> Result<f64> {
    counts.check()?;
    if counts.matched == 0 {
        return Err(Error::UndefinedEstimate(
            "the two lists share no matched records".into(),
        ));
    }
    Ok(counts.first_list as f64 * counts.second_list as f64 / counts.matched as f64)
}

/// Chapman's bias-corrected variant, (n1+1)(n2+1)/(m+1) - 1. Defined for
/// m = 0 and preferable for small samples.
pub fn dual_system_estimate_chapman(counts: &DualSystemCounts) -> Result<f64> {
    counts.check()?;
    Ok((counts.first_list as f64 + 1.0) * (counts.second_list as f64 + 1.0)
        / (counts.matched as f64 + 1.0)
        - 1.0)
}

/// Inputs for the pre-projection corrections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageConfig {
    /// Persons missed by the enumeration per 1000 of the true population.
    pub omission_per_1000: f64,
    pub houseless_rural: f64,
    pub houseless_urban: f64,
    /// Enumerated persons whose age was not stated, by sex.
    pub unknown_age: [f64; 2],
}

impl CoverageConfig {
    pub fn unknown_age_for(&self, sex: Sex) -> f64 {
        self.unknown_age[sex.index()]
    }

    pub fn houseless_total(&self) -> f64 {
        self.houseless_rural + self.houseless_urban
    }
}

/// Inflates every cell by 1/(1 - rate/1000): the rate is the share of the
/// true population that the count missed.
pub fn apply_omission_adjustment(pyramid: &AgePyramid, cfg: &CoverageConfig) -> Result<AgePyramid> {
    let rate = cfg.omission_per_1000;
    if !(rate.is_finite() && (0.0..1000.0).contains(&rate)) {
        return Err(Error::domain(format!(
            "omission rate {rate} per 1000 must lie in [0, 1000)"
        )));
    }
    let covered = 1.0 - rate / 1000.0;
    Ok(pyramid.map_counts(|_, _, c| c / covered))
}

/// Spreads each sex's unknown-age persons over ages in proportion to that
/// sex's known age distribution.
pub fn allocate_unknown_age(pyramid: &AgePyramid, cfg: &CoverageConfig) -> Result<AgePyramid> {
    let mut factors = [1.0; 2];
    for sex in Sex::ALL {
        let unknown = cfg.unknown_age_for(sex);
        if !(unknown.is_finite() && unknown >= 0.0) {
            return Err(Error::domain(format!(
                "unknown-age count {unknown} for sex {sex} must be finite and >= 0"
            )));
        }
        if unknown == 0.0 {
            continue;
        }
        let known = pyramid.total_by_sex(sex);
        if known <= 0.0 {
            return Err(Error::Allocation(format!(
                "{unknown} persons of sex {sex} have unknown age but no known-age persons to prorate over"
            )));
        }
        factors[sex.index()] = 1.0 + unknown / known;
    }
    Ok(pyramid.map_counts(|sex, _, c| c * factors[sex.index()]))
}

/// Weights by (sex, age) that distribute a segment total over cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgeProfile {
    weights: BTreeMap<(Sex, usize), f64>,
}

impl AgeProfile {
    pub fn new(weights: BTreeMap<(Sex, usize), f64>) -> Result<Self> {
        if let Some(((sex, age), w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::domain(format!(
                "profile weight {w} at sex {sex} age {age} must be finite and >= 0"
            )));
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > PROFILE_WEIGHT_TOL {
            return Err(Error::domain(format!(
                "profile weights sum to {sum}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Equal weight on every listed cell.
    pub fn uniform(cells: impl IntoIterator<Item = (Sex, usize)>) -> Result<Self> {
        let cells: Vec<_> = cells.into_iter().collect();
        let w = 1.0 / cells.len() as f64;
        Self::new(cells.into_iter().map(|c| (c, w)).collect())
    }

    pub fn weights(&self) -> &BTreeMap<(Sex, usize), f64> {
        &self.weights
    }
}

/// Adds the rural and urban houseless counts, distributed by `profile`.
pub fn add_enumeration_segments(
    pyramid: &AgePyramid,
    cfg: &CoverageConfig,
    profile: &AgeProfile,
) -> Result<AgePyramid> {
    for (name, v) in [
        ("rural houseless", cfg.houseless_rural),
        ("urban houseless", cfg.houseless_urban),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::domain(format!("{name} count {v} must be finite and >= 0")));
        }
    }
    let segment_total = cfg.houseless_total();
    let mut out = pyramid.clone();
    if segment_total == 0.0 {
        return Ok(out);
    }
    for (&(sex, age), &w) in profile.weights() {
        out.set(sex, age, pyramid.count(sex, age) + segment_total * w);
    }
    Ok(out)
}
