//! Adaptive FIR channel estimation with LMS filters under three step-size
//! families: invariant (ISS-LMS), iteration-promoting (IPVSS-LMS) and
//! error-driven (VSS-LMS), plus a seeded Monte Carlo harness that averages
//! tap-error learning curves over many independent channel realizations.
//!
//! Module map:
//!
//! - [`filters`]: per-sample update rules and step-size schedules.
//! - [`signals`]: channel, ±1 training sequence, regressors and AWGN.
//! - [`analysis`]: steady-state bound, MSE metric, arithmetic cost.
//! - [`harness`]: paired Monte Carlo trials and learning-curve summaries.
//! - [`cli`]: experiment description, config parsing and artifact output.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod filters;
pub mod harness;
pub mod signals;

pub use error::{Error, Result};
pub use filters::{lms_update, Algorithm, FilterState, Sample, StepSizeSchedule};
pub use harness::{run_experiment, MseTrajectory, NamedSchedule, TrialConfig};

/// Master seed used when none is configured.
pub const DEFAULT_SEED: u64 = 20_160_915;
