//! Fingertip stillness: synthesis of tremor-like micro-movement runs under
//! combined haptic and musical feedback conditions, plus the statistics used
//! to compare them.
//!
//! The crate has three layers:
//!
//! * [`sim`] generates runs: a 1/f tremor model shaped through a forward
//!   simulation of the force-feedback device, one of twelve conditions.
//! * [`stats`], [`spectral`] and [`normality`] compute per-run reports,
//!   amplitude spectra and the group-level tests.
//! * [`io`] and [`cli`] give the formats and the `stillness` binary.

pub mod cli;
pub mod error;
pub mod io;
pub mod normality;
pub mod sim;
pub mod spectral;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use types::{ConditionId, RunRecord, SamplingSpec};
