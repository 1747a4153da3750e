//! Population projection and identity-card demand forecasting.
//!
//! The crate covers four stages:
//!
//! * [`coverage`]: correct enumerated census counts for omission, unknown age
//!   and houseless segments, and estimate totals by dual-system estimation.
//! * [`projection`]: cohort-component projection of an age pyramid.
//! * [`card_ledger`]: annual card issuance and returns, from either state
//!   rates or person-flow counts, and the yearly demand series.
//! * [`bayes`]: posterior inference for the demand rate with a Metropolis
//!   sampler and its conjugate closed form.
//!
//! [`io`] reads and writes the CSV inputs and reports used by the
//! `uidforge` command-line tool.

pub mod bayes;
pub mod card_ledger;
pub mod cli;
pub mod config;
pub mod coverage;
pub mod demography;
pub mod error;
pub mod io;
pub mod projection;

pub use demography::{
    multi_year_survival, validate_pyramid, AgeAxis, AgePyramid, FertilityConfig, RegionId,
    RegionLevel, Sex, SurvivalSchedule, ValidationReport, Violation,
};
pub use error::{Error, Result};
