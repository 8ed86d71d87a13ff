//! C ABI for the `ipvss` crate.
//!
//! Filters and experiment results are exposed as opaque handles created by
//! `*_new`/`*_run` and released with the matching `*_free`. Every fallible
//! call returns an [`IpvssStatus`]; on failure a human-readable message is
//! available from [`ipvss_last_error_message`] on the same thread.
//!
//! The generated header lives at `include/ipvss.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ipvss::analysis::{op_count, steady_state_lower_bound};
use ipvss::harness::{run_experiment, ExperimentResult, NamedSchedule, TrialConfig};
use ipvss::{Algorithm, Error, FilterState, Sample, StepSizeSchedule};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpvssStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    DimensionMismatch = 3,
    IndexOutOfRange = 4,
    Divergence = 5,
    StabilityViolation = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpvssScheduleKind {
    /// Constant step `mu0`.
    Invariant = 0,
    /// `max(mu0 / n, phi)`.
    IterationPromoting = 1,
    /// `mu0 * pᵀp / (pᵀp + c)` with smoothing `eta`.
    ErrorDriven = 2,
}

/// Flat schedule description. Fields a kind does not use are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IpvssSchedule {
    pub kind: IpvssScheduleKind,
    pub mu0: f64,
    pub phi: f64,
    pub eta: f64,
    pub c: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpvssAlgorithm {
    IssLms = 0,
    VssLms = 1,
    IpvssLms = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct IpvssTrialConfig {
    pub n_taps: usize,
    /// Use `INFINITY` for a noiseless run.
    pub snr_db: f64,
    pub iterations: usize,
    pub num_trials: usize,
    pub master_seed: u64,
    pub tail_fraction: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IpvssTrajectoryStats {
    pub steady_state: f64,
    pub steady_state_db: f64,
    pub steady_state_std_error: f64,
    pub convergence_iteration: usize,
    pub convergence_std_error: f64,
    pub completed_trials: usize,
    pub divergent_trials: usize,
}

/// Opaque adaptive filter handle.
pub struct IpvssFilter {
    state: FilterState,
    schedule: StepSizeSchedule,
}

/// Opaque Monte Carlo result handle.
pub struct IpvssExperiment {
    result: ExperimentResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> IpvssStatus {
    match err {
        Error::Config { .. } => IpvssStatus::InvalidConfig,
        Error::Dimension { .. } => IpvssStatus::DimensionMismatch,
        Error::Index { .. } => IpvssStatus::IndexOutOfRange,
        Error::Divergence { .. } => IpvssStatus::Divergence,
        Error::Stability { .. } => IpvssStatus::StabilityViolation,
        Error::Io { .. } => IpvssStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), IpvssStatus>) -> IpvssStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IpvssStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic".into());
            IpvssStatus::Panic
        }
    }
}

fn fail(err: Error) -> IpvssStatus {
    set_last_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> IpvssStatus {
    set_last_error(format!("`{what}` is NULL"));
    IpvssStatus::NullPointer
}

impl IpvssSchedule {
    fn to_schedule(self) -> Result<StepSizeSchedule, Error> {
        let s = match self.kind {
            IpvssScheduleKind::Invariant => StepSizeSchedule::Invariant { mu: self.mu0 },
            IpvssScheduleKind::IterationPromoting => StepSizeSchedule::IterationPromoting {
                mu0: self.mu0,
                phi: self.phi,
            },
            IpvssScheduleKind::ErrorDriven => StepSizeSchedule::ErrorDriven {
                mu0: self.mu0,
                eta: self.eta,
                c: self.c,
            },
        };
        s.validate()?;
        Ok(s)
    }
}

/// Message describing the last failed call on this thread, or NULL. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ipvss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a zero-initialized filter of `n_taps` taps.
///
/// # Safety
/// `schedule` must point to a valid `IpvssSchedule`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipvss_filter_new(
    n_taps: usize,
    schedule: *const IpvssSchedule,
    out: *mut *mut IpvssFilter,
) -> IpvssStatus {
    guard(|| {
        if schedule.is_null() {
            return Err(null("schedule"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let schedule = (*schedule).to_schedule().map_err(fail)?;
        let state = FilterState::zeros(n_taps).map_err(fail)?;
        *out = Box::into_raw(Box::new(IpvssFilter { state, schedule }));
        Ok(())
    })
}

/// # Safety
/// `filter` must be NULL or a handle from `ipvss_filter_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ipvss_filter_free(filter: *mut IpvssFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Applies one update with regressor `x[0..len]` and observation `y`.
/// Writes the a-priori error to `out_error` when it is non-NULL. On
/// divergence the filter is left unchanged.
///
/// # Safety
/// `filter` must be a live handle; `x` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ipvss_filter_update(
    filter: *mut IpvssFilter,
    x: *const f64,
    len: usize,
    y: f64,
    out_error: *mut f64,
) -> IpvssStatus {
    guard(|| {
        let filter = filter.as_mut().ok_or_else(|| null("filter"))?;
        if x.is_null() {
            return Err(null("x"));
        }
        let x = std::slice::from_raw_parts(x, len);
        let schedule = filter.schedule;
        let e = filter
            .state
            .advance(Sample::new(x, y), &schedule)
            .map_err(fail)?;
        if !out_error.is_null() {
            *out_error = e;
        }
        Ok(())
    })
}

/// Copies the current taps into `out[0..len]`; `len` must equal the filter length.
///
/// # Safety
/// `filter` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ipvss_filter_taps(
    filter: *const IpvssFilter,
    out: *mut f64,
    len: usize,
) -> IpvssStatus {
    guard(|| {
        let filter = filter.as_ref().ok_or_else(|| null("filter"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let taps = filter.state.taps();
        if taps.len() != len {
            return Err(fail(Error::Dimension {
                expected: taps.len(),
                found: len,
            }));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(taps);
        Ok(())
    })
}

/// Current 1-based iteration counter, or 0 for a NULL handle.
///
/// # Safety
/// `filter` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ipvss_filter_iteration(filter: *const IpvssFilter) -> u64 {
    filter.as_ref().map_or(0, |f| f.state.iteration())
}

/// Step size the schedule gives at the current state.
///
/// # Safety
/// `filter` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipvss_filter_step_size(
    filter: *const IpvssFilter,
    out: *mut f64,
) -> IpvssStatus {
    guard(|| {
        let filter = filter.as_ref().ok_or_else(|| null("filter"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ipvss::filters::step_size(&filter.schedule, &filter.state);
        Ok(())
    })
}

/// Multiplications and additions per iteration.
///
/// # Safety
/// `out_multiplications` and `out_additions` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipvss_op_count(
    algorithm: IpvssAlgorithm,
    n_taps: usize,
    out_multiplications: *mut u64,
    out_additions: *mut u64,
) -> IpvssStatus {
    guard(|| {
        if out_multiplications.is_null() || out_additions.is_null() {
            return Err(null("out"));
        }
        let algorithm = match algorithm {
            IpvssAlgorithm::IssLms => Algorithm::IssLms,
            IpvssAlgorithm::VssLms => Algorithm::VssLms,
            IpvssAlgorithm::IpvssLms => Algorithm::IpvssLms,
        };
        let c = op_count(algorithm, n_taps).map_err(fail)?;
        *out_multiplications = c.multiplications;
        *out_additions = c.additions;
        Ok(())
    })
}

/// `lambda_max * noise_variance / (2 - 3 * step * noise_variance)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipvss_steady_state_lower_bound(
    lambda_max: f64,
    noise_variance: f64,
    step: f64,
    out: *mut f64,
) -> IpvssStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = steady_state_lower_bound(lambda_max, noise_variance, step).map_err(fail)?;
        Ok(())
    })
}

/// Runs a Monte Carlo experiment over `schedules[0..n_schedules]`, named
/// `algo0`, `algo1`, ... in order.
///
/// # Safety
/// `config` must be valid, `schedules` must point to `n_schedules` entries
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipvss_experiment_run(
    config: *const IpvssTrialConfig,
    schedules: *const IpvssSchedule,
    n_schedules: usize,
    out: *mut *mut IpvssExperiment,
) -> IpvssStatus {
    guard(|| {
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        if schedules.is_null() {
            return Err(null("schedules"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let algorithms = std::slice::from_raw_parts(schedules, n_schedules)
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(NamedSchedule::new(format!("algo{i}"), s.to_schedule()?)))
            .collect::<Result<Vec<_>, Error>>()
            .map_err(fail)?;
        let config = TrialConfig {
            n_taps: config.n_taps,
            snr_db: config.snr_db,
            iterations: config.iterations,
            num_trials: config.num_trials,
            algorithms,
            master_seed: config.master_seed,
            tail_fraction: config.tail_fraction,
        };
        let result = run_experiment(&config).map_err(fail)?;
        *out = Box::into_raw(Box::new(IpvssExperiment { result }));
        Ok(())
    })
}

/// # Safety
/// `experiment` must be NULL or a handle from `ipvss_experiment_run` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ipvss_experiment_free(experiment: *mut IpvssExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// Number of algorithms in the result (0 for NULL).
///
/// # Safety
/// `experiment` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ipvss_experiment_len(experiment: *const IpvssExperiment) -> usize {
    experiment
        .as_ref()
        .map_or(0, |e| e.result.trajectories.len())
}

/// Whether more than 1% of trials diverged for some algorithm.
///
/// # Safety
/// `experiment` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ipvss_experiment_unstable(experiment: *const IpvssExperiment) -> bool {
    experiment.as_ref().is_some_and(|e| e.result.unstable)
}

/// Copies the averaged learning curve of algorithm `index` into `out[0..len]`;
/// `len` must equal the configured iteration count.
///
/// # Safety
/// `experiment` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ipvss_experiment_curve(
    experiment: *const IpvssExperiment,
    index: usize,
    out: *mut f64,
    len: usize,
) -> IpvssStatus {
    guard(|| {
        let experiment = experiment.as_ref().ok_or_else(|| null("experiment"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let trajectories = &experiment.result.trajectories;
        let t = trajectories.get(index).ok_or_else(|| {
            fail(Error::Index {
                index,
                len: trajectories.len(),
            })
        })?;
        if t.per_iteration_mse.len() != len {
            return Err(fail(Error::Dimension {
                expected: t.per_iteration_mse.len(),
                found: len,
            }));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&t.per_iteration_mse);
        Ok(())
    })
}

/// # Safety
/// `experiment` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ipvss_experiment_stats(
    experiment: *const IpvssExperiment,
    index: usize,
    out: *mut IpvssTrajectoryStats,
) -> IpvssStatus {
    guard(|| {
        let experiment = experiment.as_ref().ok_or_else(|| null("experiment"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let trajectories = &experiment.result.trajectories;
        let t = trajectories.get(index).ok_or_else(|| {
            fail(Error::Index {
                index,
                len: trajectories.len(),
            })
        })?;
        *out = IpvssTrajectoryStats {
            steady_state: t.steady_state,
            steady_state_db: t.steady_state_db(),
            steady_state_std_error: t.steady_state_std_error,
            convergence_iteration: t.convergence_iteration,
            convergence_std_error: t.convergence_std_error,
            completed_trials: t.completed_trials,
            divergent_trials: t.divergent_trials.len(),
        };
        Ok(())
    })
}
