//! Simulation world: random FIR channel, ±1 training sequence, sliding
//! regressor windows and additive white Gaussian noise at a given SNR.
//!
//! All generators are pure functions of their seed. Noise is indexed by
//! `(seed, n)`: sample `n` of a noise stream can be produced on its own with
//! [`noise_at`], or streamed sequentially with [`NoiseStream`]; both yield the
//! same values.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Received power of the unit-amplitude training symbols.
pub const TRAINING_POWER: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    taps: Vec<f64>,
}

impl Channel {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::config("n_taps", "channel length must be >= 1"));
        }
        if let Some(i) = taps.iter().position(|t| !t.is_finite()) {
            return Err(Error::config(
                format!("channel[{i}]"),
                "channel taps must be finite",
            ));
        }
        Ok(Channel { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Noise-free channel output wᵀx.
    pub fn respond(&self, regressor: &[f64]) -> Result<f64> {
        check_len(self.taps.len(), regressor.len())?;
        Ok(self.taps.iter().zip(regressor).map(|(w, x)| w * x).sum())
    }
}

/// AWGN level derived from a received SNR in dB relative to `signal_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    snr_db: f64,
    signal_power: f64,
    variance: f64,
}

impl NoiseModel {
    /// Noise for unit-power training at `snr_db`. `f64::INFINITY` gives a
    /// noiseless model.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::with_signal_power(snr_db, TRAINING_POWER)
    }

    pub fn with_signal_power(snr_db: f64, signal_power: f64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::config("snr_db", format!("invalid SNR {snr_db} dB")));
        }
        if !(signal_power.is_finite() && signal_power > 0.0) {
            return Err(Error::config(
                "signal_power",
                format!("must be finite and > 0, got {signal_power}"),
            ));
        }
        Ok(NoiseModel {
            snr_db,
            signal_power,
            variance: snr_db_to_variance(snr_db, signal_power),
        })
    }

    pub fn noiseless() -> Self {
        NoiseModel {
            snr_db: f64::INFINITY,
            signal_power: TRAINING_POWER,
            variance: 0.0,
        }
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn signal_power(&self) -> f64 {
        self.signal_power
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// σ² = P₀ · 10^(−SNR/10).
pub fn snr_db_to_variance(snr_db: f64, signal_power: f64) -> f64 {
    signal_power * 10f64.powf(-snr_db / 10.0)
}

/// Inverse of [`snr_db_to_variance`].
pub fn variance_to_snr_db(variance: f64, signal_power: f64) -> f64 {
    10.0 * (signal_power / variance).log10()
}

/// Equiprobable ±1 pseudo-random training symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSequence {
    symbols: Vec<f64>,
}

impl TrainingSequence {
    pub fn new(symbols: Vec<f64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::config("length", "training length must be >= 1"));
        }
        if let Some(i) = symbols.iter().position(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::config(
                format!("training[{i}]"),
                "training symbols must be +1 or -1",
            ));
        }
        Ok(TrainingSequence { symbols })
    }

    pub fn symbols(&self) -> &[f64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Writes [x(n), x(n−1), …, x(n−N+1)] into `out` (N = `out.len()`),
    /// zero-filling indices before the start of the sequence. `n` is 1-based.
    pub fn fill_regressor(&self, n: usize, out: &mut [f64]) -> Result<()> {
        if n == 0 || n > self.symbols.len() {
            return Err(Error::Index {
                index: n,
                len: self.symbols.len(),
            });
        }
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = if k < n { self.symbols[n - 1 - k] } else { 0.0 };
        }
        Ok(())
    }
}

pub fn draw_channel(n_taps: usize, seed: u64) -> Result<Channel> {
    if n_taps == 0 {
        return Err(Error::config("n_taps", "channel length must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taps = (0..n_taps).map(|_| rng.sample(StandardNormal)).collect();
    Channel::new(taps)
}

pub fn draw_training(length: usize, seed: u64) -> Result<TrainingSequence> {
    if length == 0 {
        return Err(Error::config("length", "training length must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = (0..length)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    Ok(TrainingSequence { symbols })
}

pub fn regressor_at(seq: &TrainingSequence, n: usize, n_taps: usize) -> Result<Vec<f64>> {
    if n_taps == 0 {
        return Err(Error::config("n_taps", "regressor length must be >= 1"));
    }
    let mut out = vec![0.0; n_taps];
    seq.fill_regressor(n, &mut out)?;
    Ok(out)
}

// Each standard-normal draw consumes exactly one block of four 32-bit words
// (two u64), which is what makes random access by sample index possible.
const WORDS_PER_DRAW: u128 = 4;

fn unit_open(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sequential standard-normal stream; draw `k` (0-based) equals
/// `noise_at(seed, k + 1)` scaled to unit variance.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        box_muller(&mut self.rng)
    }
}

/// Unit-variance Gaussian for sample `n` (1-based) of the stream keyed by `seed`.
pub fn standard_noise_at(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(WORDS_PER_DRAW * (n as u128).saturating_sub(1));
    box_muller(&mut rng)
}

/// z(n) ~ N(0, σ²) for the stream keyed by `seed`.
pub fn noise_at(noise: &NoiseModel, seed: u64, n: usize) -> f64 {
    if noise.variance == 0.0 {
        return 0.0;
    }
    noise.std_dev() * standard_noise_at(seed, n)
}

/// y(n) = wᵀx(n) + z(n).
pub fn observe(
    channel: &Channel,
    regressor: &[f64],
    noise: &NoiseModel,
    seed: u64,
    n: usize,
) -> Result<f64> {
    Ok(channel.respond(regressor)? + noise_at(noise, seed, n))
}
