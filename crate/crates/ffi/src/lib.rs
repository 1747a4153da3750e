//! C interface to uidforge.
//!
//! Objects cross the boundary as opaque handles created by `uf_*_new` or
//! `uf_*_load_csv` and released with the matching `uf_*_free`. Every fallible
//! call returns a [`UfStatus`]; on failure the message is available from
//! [`uf_last_error`] on the same thread until the next failing call.
//! Panics are caught and reported as [`UfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use uidforge::bayes::{metropolis_sample, DemandObservation, PosteriorChain, PriorSpec};
use uidforge::card_ledger::{annual_card_requirement_series, DemandSeries, IssuancePolicy};
use uidforge::coverage::{dual_system_estimate, DualSystemCounts};
use uidforge::io;
use uidforge::projection::project_population;
use uidforge::{AgeAxis, AgePyramid, Error, FertilityConfig, RegionId, RegionLevel, Sex, SurvivalSchedule};

pub const UF_SEX_MALE: u32 = 0;
pub const UF_SEX_FEMALE: u32 = 1;

pub const UF_POLICY_AT_BIRTH: u32 = 0;
pub const UF_POLICY_AT_AGE_ONE: u32 = 1;
pub const UF_POLICY_FULL: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Consistency = 4,
    Allocation = 5,
    UndefinedEstimate = 6,
    Insufficient = 7,
    Initialization = 8,
    Config = 9,
    Parse = 10,
    Data = 11,
    Io = 12,
    Panic = 13,
}

/// One year of a demand series, counts unrounded.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UfDemandRow {
    pub year: i32,
    pub new_cards_male: f64,
    pub new_cards_female: f64,
    pub returned_cards: f64,
}

pub struct UfPyramid(AgePyramid);
pub struct UfSurvival(SurvivalSchedule);
pub struct UfFertility(FertilityConfig);
pub struct UfDemandSeries(DemandSeries);
pub struct UfChain(PosteriorChain);

struct Failure(UfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) => UfStatus::Domain,
            Error::Consistency(_) => UfStatus::Consistency,
            Error::Allocation(_) => UfStatus::Allocation,
            Error::UndefinedEstimate(_) => UfStatus::UndefinedEstimate,
            Error::Insufficient(_) => UfStatus::Insufficient,
            Error::Initialization(_) => UfStatus::Initialization,
            Error::Config(_) => UfStatus::Config,
            Error::Parse { .. } => UfStatus::Parse,
            Error::Data { .. } => UfStatus::Data,
            Error::Io { .. } => UfStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(UfStatus::InvalidArgument, msg.into())
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            UfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(UfStatus::NullPointer, format!("{name} is null")))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(UfStatus::NullPointer, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let slot = deref_mut(out, "out")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    let s = deref(p, name)?;
    let s = CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(UfStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn sex_arg(sex: u32) -> Result<Sex, Failure> {
    match sex {
        UF_SEX_MALE => Ok(Sex::Male),
        UF_SEX_FEMALE => Ok(Sex::Female),
        other => Err(invalid(format!("unknown sex code {other}"))),
    }
}

fn policy_arg(policy: u32) -> Result<IssuancePolicy, Failure> {
    match policy {
        UF_POLICY_AT_BIRTH => Ok(IssuancePolicy::AtBirth),
        UF_POLICY_AT_AGE_ONE => Ok(IssuancePolicy::AtAgeOne),
        UF_POLICY_FULL => Ok(IssuancePolicy::NumberAndCardAtBirth),
        other => Err(invalid(format!("unknown issuance policy code {other}"))),
    }
}

fn only<T>(mut items: Vec<T>, what: &str) -> Result<T, Failure> {
    if items.len() != 1 {
        return Err(invalid(format!("expected one {what}, the file has {}", items.len())));
    }
    Ok(items.remove(0))
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn uf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Empty pyramid with every cell from age 0 to `max_age` set to zero.
///
/// # Safety
/// `region` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uf_pyramid_new(
    region: *const c_char,
    year: i32,
    max_age: usize,
    out: *mut *mut UfPyramid,
) -> UfStatus {
    guard(|| {
        let code = CStr::from_ptr(deref(region, "region")?)
            .to_str()
            .map_err(|_| invalid("region is not valid UTF-8"))?;
        let axis = AgeAxis::new(max_age)?;
        let region = RegionId::new(code, RegionLevel::Region)?;
        put(out, UfPyramid(AgePyramid::zeros(region, year, axis)))
    })
}

/// Loads a single-region population CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uf_pyramid_load_csv(
    path: *const c_char,
    max_age: usize,
    year: i32,
    out: *mut *mut UfPyramid,
) -> UfStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let pyramids = io::load_population_csv(path, AgeAxis::new(max_age)?, year)?;
        put(out, UfPyramid(only(pyramids, "region")?))
    })
}

/// # Safety
/// `pyramid` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_pyramid_set(
    pyramid: *mut UfPyramid,
    sex: u32,
    age: usize,
    count: f64,
) -> UfStatus {
    guard(|| {
        let p = deref_mut(pyramid, "pyramid")?;
        if !(count.is_finite() && count >= 0.0) {
            return Err(invalid(format!("count {count} must be finite and >= 0")));
        }
        p.0.set(sex_arg(sex)?, age, count);
        Ok(())
    })
}

/// # Safety
/// `pyramid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uf_pyramid_get(
    pyramid: *const UfPyramid,
    sex: u32,
    age: usize,
    out: *mut f64,
) -> UfStatus {
    guard(|| {
        let p = deref(pyramid, "pyramid")?;
        *deref_mut(out, "out")? = p.0.count(sex_arg(sex)?, age);
        Ok(())
    })
}

/// # Safety
/// `pyramid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uf_pyramid_total(pyramid: *const UfPyramid, out: *mut f64) -> UfStatus {
    guard(|| {
        *deref_mut(out, "out")? = deref(pyramid, "pyramid")?.0.total();
        Ok(())
    })
}

/// # Safety
/// `pyramid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uf_pyramid_free(pyramid: *mut UfPyramid) {
    if !pyramid.is_null() {
        drop(Box::from_raw(pyramid));
    }
}

/// Survival schedule from one-year probabilities for ages 0..len-1. The
/// last value of each sex must be 0.
///
/// # Safety
/// `male` and `female` must point to `len` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn uf_survival_new(
    male: *const f64,
    female: *const f64,
    len: usize,
    out: *mut *mut UfSurvival,
) -> UfStatus {
    guard(|| {
        let m = slice_arg(male, len, "male")?.to_vec();
        let f = slice_arg(female, len, "female")?.to_vec();
        let region = RegionId::new("C", RegionLevel::Region)?;
        put(out, UfSurvival(SurvivalSchedule::new(region, m, f)?))
    })
}

/// Loads a single-region survival CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uf_survival_load_csv(
    path: *const c_char,
    out: *mut *mut UfSurvival,
) -> UfStatus {
    guard(|| {
        let schedules = io::load_survival_csv(path_arg(path, "path")?)?;
        put(out, UfSurvival(only(schedules, "region")?))
    })
}

/// # Safety
/// `survival` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uf_survival_free(survival: *mut UfSurvival) {
    if !survival.is_null() {
        drop(Box::from_raw(survival));
    }
}

/// Fertility with every rate zero; set rates with [`uf_fertility_set_rate`].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uf_fertility_new(
    eligible_proportion: f64,
    sex_ratio_at_birth: f64,
    infant_mortality: f64,
    out: *mut *mut UfFertility,
) -> UfStatus {
    guard(|| {
        let f = FertilityConfig::new(eligible_proportion, sex_ratio_at_birth, infant_mortality)?;
        put(out, UfFertility(f))
    })
}

/// # Safety
/// `fertility` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_fertility_set_rate(
    fertility: *mut UfFertility,
    age: usize,
    rate: f64,
) -> UfStatus {
    guard(|| {
        deref_mut(fertility, "fertility")?.0.set_rate(age, rate)?;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uf_fertility_load_csv(
    path: *const c_char,
    out: *mut *mut UfFertility,
) -> UfStatus {
    guard(|| put(out, UfFertility(io::load_fertility_csv(path_arg(path, "path")?)?)))
}

/// # Safety
/// `fertility` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uf_fertility_free(fertility: *mut UfFertility) {
    if !fertility.is_null() {
        drop(Box::from_raw(fertility));
    }
}

/// Projects `horizon` years and returns the final pyramid as a new handle.
///
/// # Safety
/// Input handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uf_project(
    pyramid: *const UfPyramid,
    survival: *const UfSurvival,
    fertility: *const UfFertility,
    horizon: usize,
    out: *mut *mut UfPyramid,
) -> UfStatus {
    guard(|| {
        let series = project_population(
            &deref(pyramid, "pyramid")?.0,
            &deref(survival, "survival")?.0,
            &deref(fertility, "fertility")?.0,
            horizon,
        )?;
        put(out, UfPyramid(series.last().clone()))
    })
}

/// Annual card demand for `horizon` years. `flows_path` may be null for no
/// international migration.
///
/// # Safety
/// Input handles must be live, `flows_path` null or a NUL-terminated string,
/// and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uf_demand_series(
    pyramid: *const UfPyramid,
    survival: *const UfSurvival,
    fertility: *const UfFertility,
    flows_path: *const c_char,
    horizon: usize,
    policy: u32,
    out: *mut *mut UfDemandSeries,
) -> UfStatus {
    guard(|| {
        let flows = if flows_path.is_null() {
            Vec::new()
        } else {
            io::load_flows_csv(path_arg(flows_path, "flows_path")?)?
        };
        let series = annual_card_requirement_series(
            &deref(pyramid, "pyramid")?.0,
            &deref(survival, "survival")?.0,
            &deref(fertility, "fertility")?.0,
            &flows,
            horizon,
            policy_arg(policy)?,
        )?;
        put(out, UfDemandSeries(series))
    })
}

/// Number of years in the series; 0 for a null handle.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_demand_len(series: *const UfDemandSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `series` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uf_demand_row(
    series: *const UfDemandSeries,
    index: usize,
    out: *mut UfDemandRow,
) -> UfStatus {
    guard(|| {
        let s = deref(series, "series")?;
        let r = s
            .0
            .rows
            .get(index)
            .ok_or_else(|| invalid(format!("row {index} out of range 0..{}", s.0.len())))?;
        *deref_mut(out, "out")? = UfDemandRow {
            year: r.year,
            new_cards_male: r.new_cards_male,
            new_cards_female: r.new_cards_female,
            returned_cards: r.returned_cards,
        };
        Ok(())
    })
}

/// Writes the series as rounded CSV.
///
/// # Safety
/// `series` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn uf_demand_write_csv(
    series: *const UfDemandSeries,
    path: *const c_char,
) -> UfStatus {
    guard(|| {
        io::emit_demand_csv(&deref(series, "series")?.0, path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Writes the series as an SVG line chart.
///
/// # Safety
/// `series` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn uf_demand_write_svg(
    series: *const UfDemandSeries,
    path: *const c_char,
) -> UfStatus {
    guard(|| {
        io::render_series_chart(&deref(series, "series")?.0, path_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uf_demand_free(series: *mut UfDemandSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Lincoln-Petersen estimate n1·n2/m.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uf_dual_system_estimate(
    first_list: u64,
    second_list: u64,
    matched: u64,
    out: *mut f64,
) -> UfStatus {
    guard(|| {
        let est = dual_system_estimate(&DualSystemCounts::new(first_list, second_list, matched))?;
        *deref_mut(out, "out")? = est;
        Ok(())
    })
}

/// Metropolis chain for the demand rate under a Gamma(shape, rate) prior.
///
/// # Safety
/// `counts` and `exposures` must point to `n_obs` values and `out` be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn uf_metropolis_sample(
    counts: *const u64,
    exposures: *const f64,
    n_obs: usize,
    prior_shape: f64,
    prior_rate: f64,
    n_samples: usize,
    seed: u64,
    proposal_scale: f64,
    out: *mut *mut UfChain,
) -> UfStatus {
    guard(|| {
        let counts = slice_arg(counts, n_obs, "counts")?;
        let exposures = slice_arg(exposures, n_obs, "exposures")?;
        let data = counts
            .iter()
            .zip(exposures)
            .enumerate()
            .map(|(i, (&c, &e))| DemandObservation::new(i as i32, c, e))
            .collect::<Result<Vec<_>, _>>()?;
        let prior = PriorSpec::gamma(prior_shape, prior_rate)?;
        let chain = metropolis_sample(&data, &prior, n_samples, seed, proposal_scale)?;
        put(out, UfChain(chain))
    })
}

/// Total draws including burn-in; 0 for a null handle.
///
/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_chain_len(chain: *const UfChain) -> usize {
    chain.as_ref().map_or(0, |c| c.0.samples.len())
}

/// Leading draws to discard as burn-in.
///
/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_chain_burn_in(chain: *const UfChain) -> usize {
    chain.as_ref().map_or(0, |c| c.0.burn_in)
}

/// Pointer to the draws, valid while the handle lives; null for a null
/// handle.
///
/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_chain_samples(chain: *const UfChain) -> *const f64 {
    chain.as_ref().map_or(ptr::null(), |c| c.0.samples.as_ptr())
}

/// # Safety
/// `chain` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uf_chain_acceptance_rate(chain: *const UfChain) -> f64 {
    chain.as_ref().map_or(f64::NAN, |c| c.0.acceptance_rate)
}

/// # Safety
/// `chain` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uf_chain_free(chain: *mut UfChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}
