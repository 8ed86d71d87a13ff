//! Test-only reference implementations, written independently of the crate's
//! update path: plain index loops over a generic scalar.

#![allow(dead_code, clippy::needless_range_loop)]

use num::{BigRational, FromPrimitive, Signed, Zero};

pub trait Scalar:
    Clone
    + PartialOrd
    + Zero
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
{
    fn lit(v: f64) -> Self;
    fn int(v: u64) -> Self;
}

impl Scalar for f64 {
    fn lit(v: f64) -> Self {
        v
    }
    fn int(v: u64) -> Self {
        v as f64
    }
}

impl Scalar for BigRational {
    fn lit(v: f64) -> Self {
        BigRational::from_float(v).expect("finite literal")
    }
    fn int(v: u64) -> Self {
        BigRational::from_u64(v).unwrap()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum RefSchedule {
    Invariant { mu: f64 },
    IterationPromoting { mu0: f64, phi: f64 },
    ErrorDriven { mu0: f64, eta: f64, c: f64 },
}

/// Tap vectors after each of the `ys.len()` updates, starting from zeros.
pub fn reference_taps<T: Scalar>(
    schedule: RefSchedule,
    xs: &[Vec<f64>],
    ys: &[f64],
) -> Vec<Vec<T>> {
    let n_taps = xs[0].len();
    let mut w: Vec<T> = vec![T::zero(); n_taps];
    let mut p: Vec<T> = vec![T::zero(); n_taps];
    let mut out = Vec::new();
    for n in 0..ys.len() {
        let x: Vec<T> = xs[n].iter().map(|&v| T::lit(v)).collect();
        let y = T::lit(ys[n]);

        let mut dot = T::zero();
        for i in 0..n_taps {
            dot = dot + w[i].clone() * x[i].clone();
        }
        let e = y - dot;

        let mu = match schedule {
            RefSchedule::Invariant { mu } => T::lit(mu),
            RefSchedule::IterationPromoting { mu0, phi } => {
                let decayed = T::lit(mu0) / T::int(n as u64 + 1);
                let floor = T::lit(phi);
                if decayed > floor {
                    decayed
                } else {
                    floor
                }
            }
            RefSchedule::ErrorDriven { mu0, eta, c } => {
                let mut norm = T::zero();
                for i in 0..n_taps {
                    norm = norm + x[i].clone() * x[i].clone();
                }
                if !norm.is_zero() {
                    for i in 0..n_taps {
                        let fresh = x[i].clone() * e.clone() / norm.clone();
                        p[i] = T::lit(eta) * p[i].clone() + (T::int(1) - T::lit(eta)) * fresh;
                    }
                }
                let mut energy = T::zero();
                for i in 0..n_taps {
                    energy = energy + p[i].clone() * p[i].clone();
                }
                T::lit(mu0) * energy.clone() / (energy + T::lit(c))
            }
        };

        for i in 0..n_taps {
            w[i] = w[i].clone() + mu.clone() * e.clone() * x[i].clone();
        }
        out.push(w.clone());
    }
    out
}

pub fn rational_close(a: &BigRational, b: f64, rel: f64) -> bool {
    let b = BigRational::from_float(b).unwrap();
    let diff = (a - &b).abs();
    let scale = a
        .abs()
        .max(BigRational::from_u64(1).unwrap() / BigRational::from_u64(1_000_000).unwrap());
    diff <= scale * BigRational::from_float(rel).unwrap()
}

/// Sliding ±1/0 windows for a short symbol sequence.
pub fn windows(symbols: &[f64], n_taps: usize) -> Vec<Vec<f64>> {
    (0..symbols.len())
        .map(|n| {
            (0..n_taps)
                .map(|k| if k <= n { symbols[n - k] } else { 0.0 })
                .collect()
        })
        .collect()
}
