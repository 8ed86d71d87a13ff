//! Seeded Monte Carlo experiments.
//!
//! Each trial draws one channel, one training sequence and one noise stream
//! from seeds derived from `(master_seed, trial_index)` and runs every
//! configured algorithm on that same realization, so comparisons between
//! algorithms are paired.
//!
//! Trials are grouped into fixed chunks of [`CHUNK_TRIALS`]. Chunks run in
//! parallel; each chunk sums its trials in index order and the chunk sums are
//! then added in chunk order. The reduction order therefore depends only on
//! the configuration, never on the thread count or scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_tail_fraction, convergence_iteration, squared_distance, steady_state_empirical, to_db,
    DEFAULT_TAIL_FRACTION,
};
use crate::error::{Error, Result};
use crate::filters::{FilterState, Sample, StepSizeSchedule};
use crate::signals::{
    draw_channel, draw_training, Channel, NoiseModel, NoiseStream, TrainingSequence,
};

/// Trials per reduction chunk.
pub const CHUNK_TRIALS: usize = 16;

/// Fraction of divergent trials above which an experiment is unstable.
pub const UNSTABLE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSchedule {
    pub name: String,
    pub schedule: StepSizeSchedule,
}

impl NamedSchedule {
    pub fn new(name: impl Into<String>, schedule: StepSizeSchedule) -> Self {
        NamedSchedule {
            name: name.into(),
            schedule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n_taps: usize,
    /// Received SNR; `f64::INFINITY` runs noiseless.
    pub snr_db: f64,
    pub iterations: usize,
    pub num_trials: usize,
    pub algorithms: Vec<NamedSchedule>,
    pub master_seed: u64,
    pub tail_fraction: f64,
}

impl TrialConfig {
    pub fn new(snr_db: f64, algorithms: Vec<NamedSchedule>) -> Self {
        TrialConfig {
            n_taps: 16,
            snr_db,
            iterations: 5_000,
            num_trials: 1_000,
            algorithms,
            master_seed: crate::DEFAULT_SEED,
            tail_fraction: DEFAULT_TAIL_FRACTION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::config("n_taps", "filter length must be >= 1"));
        }
        if self.iterations < self.n_taps {
            return Err(Error::config(
                "iterations",
                format!(
                    "iterations ({}) must be >= n_taps ({})",
                    self.iterations, self.n_taps
                ),
            ));
        }
        if self.iterations < 10 {
            return Err(Error::config(
                "iterations",
                "at least 10 iterations required",
            ));
        }
        if self.num_trials == 0 {
            return Err(Error::config("num_trials", "at least one trial required"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config(
                "algorithms",
                "at least one algorithm required",
            ));
        }
        check_tail_fraction(self.tail_fraction)?;
        self.noise_model()?;
        for (i, a) in self.algorithms.iter().enumerate() {
            a.schedule.validate().map_err(|e| match e {
                Error::Config { field, reason } => {
                    Error::config(format!("algorithms[{i}].{field}"), reason)
                }
                other => other,
            })?;
            if self.algorithms[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::config(
                    format!("algorithms[{i}].name"),
                    format!("duplicate algorithm name `{}`", a.name),
                ));
            }
        }
        Ok(())
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        if self.snr_db == f64::INFINITY {
            Ok(NoiseModel::noiseless())
        } else {
            NoiseModel::from_snr_db(self.snr_db)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub channel: u64,
    pub training: u64,
    pub noise: u64,
}

/// Seeds for trial `trial_index`: stream `trial_index` of a ChaCha generator
/// keyed by `master_seed`.
pub fn trial_seeds(master_seed: u64, trial_index: usize) -> TrialSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index as u64);
    TrialSeeds {
        channel: rng.next_u64(),
        training: rng.next_u64(),
        noise: rng.next_u64(),
    }
}

/// One trial's channel, training sequence and received samples y(1..=T).
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub channel: Channel,
    pub training: TrainingSequence,
    pub observations: Vec<f64>,
}

/// Supplies the per-trial realization. The harness asks for each trial
/// exactly once and runs every algorithm on the result.
pub trait RealizationSource: Sync {
    fn realize(&self, config: &TrialConfig, trial_index: usize) -> Result<Realization>;
}

/// Default source: everything drawn from [`trial_seeds`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SeededSource;

impl RealizationSource for SeededSource {
    fn realize(&self, config: &TrialConfig, trial_index: usize) -> Result<Realization> {
        let seeds = trial_seeds(config.master_seed, trial_index);
        let channel = draw_channel(config.n_taps, seeds.channel)?;
        let training = draw_training(config.iterations, seeds.training)?;
        let noise = config.noise_model()?;
        let sigma = noise.std_dev();
        let mut stream = NoiseStream::new(seeds.noise);
        let mut x = vec![0.0; config.n_taps];
        let mut observations = Vec::with_capacity(config.iterations);
        for n in 1..=config.iterations {
            training.fill_regressor(n, &mut x)?;
            let z = stream.next_standard();
            let clean = channel.respond(&x)?;
            observations.push(if sigma == 0.0 {
                clean
            } else {
                clean + sigma * z
            });
        }
        Ok(Realization {
            channel,
            training,
            observations,
        })
    }
}

/// Runs `schedule` from zero taps over a realization and returns
/// ‖w − w(n+1)‖² after each of the T updates.
pub fn run_on_realization(
    realization: &Realization,
    schedule: &StepSizeSchedule,
) -> Result<Vec<f64>> {
    let n_taps = realization.channel.len();
    let mut state = FilterState::zeros(n_taps)?;
    let mut x = vec![0.0; n_taps];
    let mut curve = Vec::with_capacity(realization.observations.len());
    for (i, &y) in realization.observations.iter().enumerate() {
        realization.training.fill_regressor(i + 1, &mut x)?;
        state.advance(Sample::new(&x, y), schedule)?;
        let mse = squared_distance(realization.channel.taps(), state.taps());
        if !mse.is_finite() {
            return Err(Error::Divergence {
                iteration: state.iteration() - 1,
            });
        }
        curve.push(mse);
    }
    Ok(curve)
}

pub fn run_trial(
    config: &TrialConfig,
    algorithm_index: usize,
    trial_index: usize,
) -> Result<Vec<f64>> {
    run_trial_with(&SeededSource, config, algorithm_index, trial_index)
}

pub fn run_trial_with(
    source: &dyn RealizationSource,
    config: &TrialConfig,
    algorithm_index: usize,
    trial_index: usize,
) -> Result<Vec<f64>> {
    config.validate()?;
    let algo = config.algorithms.get(algorithm_index).ok_or(Error::Index {
        index: algorithm_index,
        len: config.algorithms.len(),
    })?;
    if trial_index >= config.num_trials {
        return Err(Error::Index {
            index: trial_index,
            len: config.num_trials,
        });
    }
    let realization = source.realize(config, trial_index)?;
    run_on_realization(&realization, &algo.schedule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivergentTrial {
    pub trial_index: usize,
    pub iteration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseTrajectory {
    pub algorithm: String,
    /// Average of ‖w − wᵢ(n)‖² over the completed trials.
    pub per_iteration_mse: Vec<f64>,
    pub steady_state: f64,
    /// First 1-based iteration within 3 dB of `steady_state`.
    pub convergence_iteration: usize,
    /// Standard error of the per-trial tail means.
    pub steady_state_std_error: f64,
    /// Standard error of the per-trial convergence iterations.
    pub convergence_std_error: f64,
    pub completed_trials: usize,
    pub divergent_trials: Vec<DivergentTrial>,
}

impl MseTrajectory {
    pub fn steady_state_db(&self) -> f64 {
        to_db(self.steady_state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub trajectories: Vec<MseTrajectory>,
    /// More than [`UNSTABLE_FRACTION`] of trials diverged for some algorithm.
    pub unstable: bool,
}

#[derive(Default)]
struct Accumulator {
    sum: Vec<f64>,
    tail_means: Vec<f64>,
    convergence: Vec<f64>,
    divergent: Vec<DivergentTrial>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Accumulator {
            sum: vec![0.0; len],
            ..Default::default()
        }
    }

    fn merge(&mut self, other: Accumulator) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        self.tail_means.extend(other.tail_means);
        self.convergence.extend(other.convergence);
        self.divergent.extend(other.divergent);
    }
}

fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

fn run_chunk(
    source: &dyn RealizationSource,
    config: &TrialConfig,
    trials: std::ops::Range<usize>,
) -> Result<Vec<Accumulator>> {
    let mut accs: Vec<Accumulator> = config
        .algorithms
        .iter()
        .map(|_| Accumulator::new(config.iterations))
        .collect();
    for trial_index in trials {
        let realization = source.realize(config, trial_index)?;
        for (algo, acc) in config.algorithms.iter().zip(accs.iter_mut()) {
            match run_on_realization(&realization, &algo.schedule) {
                Ok(curve) => {
                    for (s, v) in acc.sum.iter_mut().zip(&curve) {
                        *s += v;
                    }
                    let tail = steady_state_empirical(&curve, config.tail_fraction)?;
                    acc.tail_means.push(tail);
                    acc.convergence
                        .push(convergence_iteration(&curve, tail) as f64);
                }
                Err(Error::Divergence { iteration }) => acc.divergent.push(DivergentTrial {
                    trial_index,
                    iteration,
                }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(accs)
}

pub fn run_experiment(config: &TrialConfig) -> Result<ExperimentResult> {
    run_experiment_with(&SeededSource, config)
}

pub fn run_experiment_with(
    source: &dyn RealizationSource,
    config: &TrialConfig,
) -> Result<ExperimentResult> {
    config.validate()?;
    let n_chunks = config.num_trials.div_ceil(CHUNK_TRIALS);
    let chunks: Vec<Vec<Accumulator>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK_TRIALS;
            let end = (start + CHUNK_TRIALS).min(config.num_trials);
            run_chunk(source, config, start..end)
        })
        .collect::<Result<_>>()?;

    let mut totals: Vec<Accumulator> = config
        .algorithms
        .iter()
        .map(|_| Accumulator::new(config.iterations))
        .collect();
    for chunk in chunks {
        for (total, acc) in totals.iter_mut().zip(chunk) {
            total.merge(acc);
        }
    }

    let mut unstable = false;
    let mut trajectories = Vec::with_capacity(totals.len());
    for (algo, total) in config.algorithms.iter().zip(totals) {
        let completed = total.tail_means.len();
        if total.divergent.len() as f64 > UNSTABLE_FRACTION * config.num_trials as f64 {
            unstable = true;
        }
        let (per_iteration_mse, steady_state, convergence) = if completed == 0 {
            (
                vec![f64::INFINITY; config.iterations],
                f64::INFINITY,
                config.iterations,
            )
        } else {
            let curve: Vec<f64> = total.sum.iter().map(|s| s / completed as f64).collect();
            let ss = steady_state_empirical(&curve, config.tail_fraction)?;
            let conv = convergence_iteration(&curve, ss);
            (curve, ss, conv)
        };
        let (_, ss_se) = mean_and_std_error(&total.tail_means);
        let (_, conv_se) = mean_and_std_error(&total.convergence);
        trajectories.push(MseTrajectory {
            algorithm: algo.name.clone(),
            per_iteration_mse,
            steady_state,
            convergence_iteration: convergence,
            steady_state_std_error: ss_se,
            convergence_std_error: conv_se,
            completed_trials: completed,
            divergent_trials: total.divergent,
        });
    }
    Ok(ExperimentResult {
        trajectories,
        unstable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub algorithm: String,
    pub steady_state: f64,
    pub steady_state_db: f64,
    pub convergence_iteration: usize,
}

/// `gap_db = steady_state_db(first) − steady_state_db(second)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGap {
    pub first: String,
    pub second: String,
    pub gap_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub entries: Vec<SummaryEntry>,
    pub gaps: Vec<PairGap>,
}

impl ComparisonTable {
    pub fn gap(&self, first: &str, second: &str) -> Option<f64> {
        self.gaps.iter().find_map(|g| {
            if g.first == first && g.second == second {
                Some(g.gap_db)
            } else if g.first == second && g.second == first {
                Some(-g.gap_db)
            } else {
                None
            }
        })
    }
}

pub fn compare_summary(trajectories: &[MseTrajectory]) -> Result<ComparisonTable> {
    if trajectories.len() < 2 {
        return Err(Error::config(
            "trajectories",
            format!("need at least 2 trajectories, got {}", trajectories.len()),
        ));
    }
    let len = trajectories[0].per_iteration_mse.len();
    if let Some(t) = trajectories
        .iter()
        .find(|t| t.per_iteration_mse.len() != len)
    {
        return Err(Error::config(
            format!("trajectories.{}", t.algorithm),
            format!("length {} differs from {len}", t.per_iteration_mse.len()),
        ));
    }
    let entries: Vec<SummaryEntry> = trajectories
        .iter()
        .map(|t| SummaryEntry {
            algorithm: t.algorithm.clone(),
            steady_state: t.steady_state,
            steady_state_db: t.steady_state_db(),
            convergence_iteration: t.convergence_iteration,
        })
        .collect();
    let mut gaps = Vec::new();
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            gaps.push(PairGap {
                first: a.algorithm.clone(),
                second: b.algorithm.clone(),
                gap_db: a.steady_state_db - b.steady_state_db,
            });
        }
    }
    Ok(ComparisonTable { entries, gaps })
}
