//! Closed-form steady-state bound, the Monte Carlo MSE metric, tail-window
//! steady-state estimation and per-iteration arithmetic cost.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::filters::Algorithm;
use crate::signals::TrainingSequence;

/// Default fraction of a learning curve treated as steady state.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;

/// λ_max of the input covariance for white ±1 training (R_xx = I).
pub const WHITE_LAMBDA_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateBound {
    pub lambda_max: f64,
    pub noise_variance: f64,
    pub step: f64,
    pub value: f64,
}

impl SteadyStateBound {
    pub fn new(lambda_max: f64, noise_variance: f64, step: f64) -> Result<Self> {
        let value = steady_state_lower_bound(lambda_max, noise_variance, step)?;
        Ok(SteadyStateBound {
            lambda_max,
            noise_variance,
            step,
            value,
        })
    }
}

/// λ_max σ² / (2 − 3 μ σ²).
///
/// For the iteration-promoting schedule pass `step = phi`, the smallest step
/// the schedule reaches.
pub fn steady_state_lower_bound(lambda_max: f64, noise_variance: f64, step: f64) -> Result<f64> {
    for (field, v) in [
        ("lambda_max", lambda_max),
        ("noise_variance", noise_variance),
        ("step", step),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::config(
                field,
                format!("must be finite and > 0, got {v}"),
            ));
        }
    }
    let denominator = 2.0 - 3.0 * step * noise_variance;
    if denominator <= 0.0 {
        return Err(Error::Stability { denominator });
    }
    Ok(lambda_max * noise_variance / denominator)
}

/// ‖a − b‖².
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// (1/M) Σᵢ ‖w − wᵢ(n)‖² over M estimates of the same channel.
pub fn average_mse<T: AsRef<[f64]>>(truth: &[f64], estimates: &[T]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::config("estimates", "at least one estimate required"));
    }
    let mut total = 0.0;
    for est in estimates {
        let est = est.as_ref();
        check_len(truth.len(), est.len())?;
        total += squared_distance(truth, est);
    }
    Ok(total / estimates.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityCount {
    pub multiplications: u64,
    pub additions: u64,
}

/// Multiplications and additions per iteration for a length-`n_taps` filter.
pub fn op_count(algorithm: Algorithm, n_taps: usize) -> Result<ComplexityCount> {
    if n_taps == 0 {
        return Err(Error::config("n_taps", "filter length must be >= 1"));
    }
    let n = n_taps as u64;
    let (multiplications, additions) = match algorithm {
        Algorithm::IssLms => (2 * n, 2 * n + 1),
        Algorithm::VssLms => (6 * n + 6, 5 * n - 1),
        Algorithm::IpvssLms => (2 * n + 1, 2 * n + 1),
    };
    Ok(ComplexityCount {
        multiplications,
        additions,
    })
}

/// Number of trailing points in a length-`len` curve averaged by
/// [`steady_state_empirical`].
pub fn tail_len(len: usize, tail_fraction: f64) -> usize {
    ((tail_fraction * len as f64).ceil() as usize).clamp(1, len)
}

pub(crate) fn check_tail_fraction(tail_fraction: f64) -> Result<()> {
    if tail_fraction > 0.0 && tail_fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(
            "tail_fraction",
            format!("must lie in (0, 1], got {tail_fraction}"),
        ))
    }
}

/// Mean of the final `ceil(tail_fraction · len)` points of an MSE curve.
pub fn steady_state_empirical(curve: &[f64], tail_fraction: f64) -> Result<f64> {
    if curve.len() < 10 {
        return Err(Error::config(
            "iterations",
            format!("curve needs at least 10 points, got {}", curve.len()),
        ));
    }
    check_tail_fraction(tail_fraction)?;
    let k = tail_len(curve.len(), tail_fraction);
    let tail = &curve[curve.len() - k..];
    Ok(tail.iter().sum::<f64>() / k as f64)
}

/// First 1-based iteration at which `curve` is within 3 dB of `steady_state`.
pub fn convergence_iteration(curve: &[f64], steady_state: f64) -> usize {
    let threshold = steady_state * 10f64.powf(0.3);
    curve
        .iter()
        .position(|&v| v <= threshold)
        .map_or(curve.len(), |i| i + 1)
}

pub fn to_db(value: f64) -> f64 {
    10.0 * value.log10()
}

/// Sample estimate of R_xx = E[x(n)x(n)ᵀ] over the regressor windows of `seq`.
pub fn sample_covariance(seq: &TrainingSequence, n_taps: usize) -> Result<DMatrix<f64>> {
    if n_taps == 0 {
        return Err(Error::config("n_taps", "filter length must be >= 1"));
    }
    let mut cov = DMatrix::zeros(n_taps, n_taps);
    let mut x = vec![0.0; n_taps];
    for n in 1..=seq.len() {
        seq.fill_regressor(n, &mut x)?;
        let v = nalgebra::DVector::from_column_slice(&x);
        cov += &v * v.transpose();
    }
    Ok(cov / seq.len() as f64)
}

/// Largest eigenvalue of a symmetric covariance matrix.
pub fn lambda_max(covariance: &DMatrix<f64>) -> f64 {
    covariance
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}
