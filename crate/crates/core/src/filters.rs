//! Per-sample LMS updates for the three step-size families.
//!
//! Every filter here shares the same stochastic-gradient recursion
//!
//! ```text
//! e(n)     = y(n) - w(n)ᵀ x(n)
//! w(n + 1) = w(n) + μ(n) e(n) x(n)
//! ```
//!
//! and differs only in how μ(n) is produced:
//!
//! - [`StepSizeSchedule::Invariant`]: a constant μ (ISS-LMS).
//! - [`StepSizeSchedule::IterationPromoting`]: `max(μ₀ / n, φ)`, a 1/n decay
//!   clamped at the hard floor φ (IPVSS-LMS).
//! - [`StepSizeSchedule::ErrorDriven`]: `μ₀ pᵀp / (pᵀp + C)` with a smoothed
//!   error-direction vector `p` (VSS-LMS).
//!
//! Transitions are available both as pure functions ([`lms_update`]) and as an
//! in-place method ([`FilterState::advance`]); the two share one code path.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Which adaptive algorithm a schedule belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    IssLms,
    VssLms,
    IpvssLms,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::IssLms, Algorithm::VssLms, Algorithm::IpvssLms];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::IssLms => "ISS-LMS",
            Algorithm::VssLms => "VSS-LMS",
            Algorithm::IpvssLms => "IPVSS-LMS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepSizeSchedule {
    /// Constant step size.
    Invariant { mu: f64 },
    /// `max(mu0 / n, phi)`; non-increasing in `n` and pinned at `phi` from
    /// `n = ceil(mu0 / phi)` on.
    IterationPromoting { mu0: f64, phi: f64 },
    /// `mu0 · pᵀp / (pᵀp + c)` where `p` is smoothed with factor `eta`.
    ErrorDriven { mu0: f64, eta: f64, c: f64 },
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

impl StepSizeSchedule {
    pub fn invariant(mu: f64) -> Result<Self> {
        let s = StepSizeSchedule::Invariant { mu };
        s.validate()?;
        Ok(s)
    }

    pub fn iteration_promoting(mu0: f64, phi: f64) -> Result<Self> {
        let s = StepSizeSchedule::IterationPromoting { mu0, phi };
        s.validate()?;
        Ok(s)
    }

    pub fn error_driven(mu0: f64, eta: f64, c: f64) -> Result<Self> {
        let s = StepSizeSchedule::ErrorDriven { mu0, eta, c };
        s.validate()?;
        Ok(s)
    }

    /// Checks the parameter constraints of each variant. Field names in the
    /// returned error are the bare parameter names (`mu`, `phi`, ...).
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSizeSchedule::Invariant { mu } => positive("mu", mu),
            StepSizeSchedule::IterationPromoting { mu0, phi } => {
                positive("mu0", mu0)?;
                positive("phi", phi)?;
                if phi > mu0 {
                    return Err(Error::config(
                        "phi",
                        format!("hard threshold phi = {phi} must not exceed mu0 = {mu0}"),
                    ));
                }
                Ok(())
            }
            StepSizeSchedule::ErrorDriven { mu0, eta, c } => {
                positive("mu0", mu0)?;
                positive("c", c)?;
                if !(0.0..1.0).contains(&eta) {
                    return Err(Error::config(
                        "eta",
                        format!("smoothing factor must lie in [0, 1), got {eta}"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// The largest step this schedule can ever produce.
    pub fn max_step(&self) -> f64 {
        match *self {
            StepSizeSchedule::Invariant { mu } => mu,
            StepSizeSchedule::IterationPromoting { mu0, .. } => mu0,
            StepSizeSchedule::ErrorDriven { mu0, .. } => mu0,
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            StepSizeSchedule::Invariant { .. } => Algorithm::IssLms,
            StepSizeSchedule::IterationPromoting { .. } => Algorithm::IpvssLms,
            StepSizeSchedule::ErrorDriven { .. } => Algorithm::VssLms,
        }
    }
}

/// Tap estimate w(n), the 1-based iteration counter n, and the VSS momentum
/// vector p(n) (all zeros unless the schedule is error-driven).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    taps: Vec<f64>,
    iteration: u64,
    vss_momentum: Vec<f64>,
}

/// One training observation: the regressor window x(n) and the received y(n).
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub regressor: &'a [f64],
    pub observation: f64,
}

impl<'a> Sample<'a> {
    pub fn new(regressor: &'a [f64], observation: f64) -> Self {
        Sample {
            regressor,
            observation,
        }
    }
}

impl FilterState {
    /// All-zero taps at iteration 1.
    pub fn zeros(n_taps: usize) -> Result<Self> {
        if n_taps == 0 {
            return Err(Error::config("n_taps", "filter length must be >= 1"));
        }
        Ok(FilterState {
            taps: vec![0.0; n_taps],
            iteration: 1,
            vss_momentum: vec![0.0; n_taps],
        })
    }

    /// Starts from the given taps at iteration 1.
    pub fn from_taps(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::config("n_taps", "filter length must be >= 1"));
        }
        let n = taps.len();
        Ok(FilterState {
            taps,
            iteration: 1,
            vss_momentum: vec![0.0; n],
        })
    }

    /// Overrides the momentum vector, e.g. to resume an error-driven filter.
    pub fn with_momentum(mut self, momentum: Vec<f64>) -> Result<Self> {
        check_len(self.taps.len(), momentum.len())?;
        self.vss_momentum = momentum;
        Ok(self)
    }

    /// Overrides the iteration counter (must be >= 1).
    pub fn with_iteration(mut self, iteration: u64) -> Result<Self> {
        if iteration == 0 {
            return Err(Error::config("iteration", "iteration counter starts at 1"));
        }
        self.iteration = iteration;
        Ok(self)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn vss_momentum(&self) -> &[f64] {
        &self.vss_momentum
    }

    pub fn n_taps(&self) -> usize {
        self.taps.len()
    }

    /// Applies one update in place and returns the a-priori error e(n).
    ///
    /// On divergence the state is left untouched.
    pub fn advance(&mut self, sample: Sample<'_>, schedule: &StepSizeSchedule) -> Result<f64> {
        let error = prediction_error(self, sample)?;
        if !error.is_finite() {
            return Err(Error::Divergence {
                iteration: self.iteration,
            });
        }

        let mut momentum = None;
        let step = match *schedule {
            StepSizeSchedule::ErrorDriven { mu0, eta, c } => {
                let p = next_momentum(&self.vss_momentum, sample.regressor, error, eta);
                let step = error_driven_step(mu0, c, &p);
                momentum = Some(p);
                step
            }
            _ => step_size(schedule, self),
        };

        let updated: Vec<f64> = self
            .taps
            .iter()
            .zip(sample.regressor)
            .map(|(w, x)| w + step * error * x)
            .collect();
        if !step.is_finite() || updated.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence {
                iteration: self.iteration,
            });
        }

        self.taps = updated;
        if let Some(p) = momentum {
            self.vss_momentum = p;
        }
        self.iteration += 1;
        Ok(error)
    }
}

/// e(n) = y(n) − w(n)ᵀx(n).
pub fn prediction_error(state: &FilterState, sample: Sample<'_>) -> Result<f64> {
    check_len(state.taps.len(), sample.regressor.len())?;
    let estimate: f64 = state
        .taps
        .iter()
        .zip(sample.regressor)
        .map(|(w, x)| w * x)
        .sum();
    Ok(sample.observation - estimate)
}

/// Step size for the current iteration.
///
/// For the error-driven schedule this reads the momentum already stored in
/// `state`, so [`update_vss_momentum`] must have been applied for this sample.
pub fn step_size(schedule: &StepSizeSchedule, state: &FilterState) -> f64 {
    match *schedule {
        StepSizeSchedule::Invariant { mu } => mu,
        StepSizeSchedule::IterationPromoting { mu0, phi } => {
            iteration_promoting_step(mu0, phi, state.iteration)
        }
        StepSizeSchedule::ErrorDriven { mu0, c, .. } => {
            error_driven_step(mu0, c, &state.vss_momentum)
        }
    }
}

/// `max(mu0 / n, phi)` for a 1-based iteration `n`.
pub fn iteration_promoting_step(mu0: f64, phi: f64, iteration: u64) -> f64 {
    (mu0 / iteration as f64).max(phi)
}

fn error_driven_step(mu0: f64, c: f64, momentum: &[f64]) -> f64 {
    let energy: f64 = momentum.iter().map(|p| p * p).sum();
    mu0 * energy / (energy + c)
}

fn next_momentum(p: &[f64], x: &[f64], error: f64, eta: f64) -> Vec<f64> {
    let norm_sq: f64 = x.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        // degenerate regressor: keep p(n)
        return p.to_vec();
    }
    p.iter()
        .zip(x)
        .map(|(p, x)| eta * p + (1.0 - eta) * x * error / norm_sq)
        .collect()
}

/// p(n+1) = η p(n) + (1 − η) x(n) e(n) / ‖x(n)‖².
///
/// A zero regressor leaves the momentum unchanged.
pub fn update_vss_momentum(
    state: &FilterState,
    sample: Sample<'_>,
    error: f64,
    eta: f64,
) -> Result<FilterState> {
    check_len(state.taps.len(), sample.regressor.len())?;
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::config(
            "eta",
            format!("smoothing factor must lie in [0, 1), got {eta}"),
        ));
    }
    let mut next = state.clone();
    next.vss_momentum = next_momentum(&state.vss_momentum, sample.regressor, error, eta);
    Ok(next)
}

/// Pure form of [`FilterState::advance`]: returns the next state and the
/// a-priori error e(n).
pub fn lms_update(
    state: &FilterState,
    sample: Sample<'_>,
    schedule: &StepSizeSchedule,
) -> Result<(FilterState, f64)> {
    let mut next = state.clone();
    let error = next.advance(sample, schedule)?;
    Ok((next, error))
}
