//! Experiment description, config-file/flag merging and artifact output.
//!
//! # Config file
//!
//! A flat TOML document. Every key is optional; missing keys take the
//! defaults listed below, and command-line flags override file values.
//!
//! ```toml
//! taps = 16                      # channel / filter length N
//! snr_db = [0, 5, 10, 15, 20]    # one run per SNR point (a bare number also works)
//! iterations = 5000              # T
//! trials = 1000                  # M
//! algorithms = ["iss:mu=0.05", "iss:mu=0.005", "ipvss:mu0=0.05,phi=0.005"]
//! seed = 20160915
//! tail_fraction = 0.2
//! out_dir = "ipvss-out"
//! format = "csv"                 # or "json"
//! figures = false
//! ```
//!
//! Algorithm strings are `kind:param=value,...` with
//!
//! - `iss:mu=<f>`
//! - `ipvss:mu0=<f>,phi=<f>`
//! - `vss:mu0=<f>[,eta=<f>][,c=<f>]` (eta defaults to 0.97, c to 1/SNR)
//!
//! and an optional `name=<label>` parameter that sets the output file stem.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::analysis::{op_count, to_db, DEFAULT_TAIL_FRACTION, WHITE_LAMBDA_MAX};
use crate::error::{Error, Result};
use crate::filters::{Algorithm, StepSizeSchedule};
use crate::harness::{
    compare_summary, run_experiment, ComparisonTable, DivergentTrial, ExperimentResult,
    MseTrajectory, NamedSchedule, TrialConfig,
};
use crate::signals::snr_db_to_variance;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_UNSTABLE: u8 = 3;

/// Smoothing factor used by `vss` when `eta` is not given.
pub const DEFAULT_VSS_ETA: f64 = 0.97;

/// Step size of the ISS reference curves and the starting step of IPVSS.
pub const DEFAULT_MU: f64 = 0.05;
pub const SMALL_MU: f64 = 0.005;
pub const DEFAULT_SNR_SWEEP: [f64; 5] = [0.0, 5.0, 10.0, 15.0, 20.0];
pub const THRESHOLD_SWEEP: [f64; 5] = [0.005, 0.01, 0.015, 0.02, 0.025];
/// Hard threshold of the IPVSS vs VSS comparison figure.
pub const FIG8_PHI: f64 = 0.035;
/// SNR at which the IPVSS vs VSS comparison figure is run.
pub const FIG8_SNR_DB: f64 = 15.0;

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlgorithmKind {
    Iss {
        mu: f64,
    },
    Ipvss {
        mu0: f64,
        phi: f64,
    },
    Vss {
        mu0: f64,
        eta: Option<f64>,
        c: Option<f64>,
    },
}

/// One algorithm entry as written in a config file or `--algo` flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AlgorithmSpec {
    pub name: Option<String>,
    pub kind: AlgorithmKind,
}

impl AlgorithmSpec {
    pub fn iss(mu: f64) -> Self {
        AlgorithmSpec {
            name: None,
            kind: AlgorithmKind::Iss { mu },
        }
    }

    pub fn ipvss(mu0: f64, phi: f64) -> Self {
        AlgorithmSpec {
            name: None,
            kind: AlgorithmKind::Ipvss { mu0, phi },
        }
    }

    pub fn vss(mu0: f64) -> Self {
        AlgorithmSpec {
            name: None,
            kind: AlgorithmKind::Vss {
                mu0,
                eta: None,
                c: None,
            },
        }
    }

    /// Explicit name, or one derived from the parameters (`ipvss-mu0.05-phi0.005`).
    pub fn label(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        match self.kind {
            AlgorithmKind::Iss { mu } => format!("iss-mu{mu}"),
            AlgorithmKind::Ipvss { mu0, phi } => format!("ipvss-mu{mu0}-phi{phi}"),
            AlgorithmKind::Vss { mu0, eta, c } => {
                let mut s = format!("vss-mu{mu0}");
                if let Some(eta) = eta {
                    s.push_str(&format!("-eta{eta}"));
                }
                if let Some(c) = c {
                    s.push_str(&format!("-c{c}"));
                }
                s
            }
        }
    }

    /// Concrete schedule at a given SNR (VSS's default `c` is 1/SNR).
    pub fn resolve(&self, snr_db: f64) -> Result<StepSizeSchedule> {
        let schedule = match self.kind {
            AlgorithmKind::Iss { mu } => StepSizeSchedule::Invariant { mu },
            AlgorithmKind::Ipvss { mu0, phi } => StepSizeSchedule::IterationPromoting { mu0, phi },
            AlgorithmKind::Vss { mu0, eta, c } => StepSizeSchedule::ErrorDriven {
                mu0,
                eta: eta.unwrap_or(DEFAULT_VSS_ETA),
                c: c.unwrap_or_else(|| snr_db_to_variance(snr_db, 1.0)),
            },
        };
        schedule.validate()?;
        if schedule.max_step() >= 1.0 / WHITE_LAMBDA_MAX {
            let field = match schedule {
                StepSizeSchedule::Invariant { .. } => "mu",
                _ => "mu0",
            };
            return Err(Error::config(
                field,
                format!(
                    "step size {} must be < 1/lambda_max = {}",
                    schedule.max_step(),
                    1.0 / WHITE_LAMBDA_MAX
                ),
            ));
        }
        Ok(schedule)
    }
}

impl fmt::Display for AlgorithmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            AlgorithmKind::Iss { mu } => write!(f, "iss:mu={mu}")?,
            AlgorithmKind::Ipvss { mu0, phi } => write!(f, "ipvss:mu0={mu0},phi={phi}")?,
            AlgorithmKind::Vss { mu0, eta, c } => {
                write!(f, "vss:mu0={mu0}")?;
                if let Some(eta) = eta {
                    write!(f, ",eta={eta}")?;
                }
                if let Some(c) = c {
                    write!(f, ",c={c}")?;
                }
            }
        }
        if let Some(name) = &self.name {
            write!(f, ",name={name}")?;
        }
        Ok(())
    }
}

impl FromStr for AlgorithmSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::config("algorithms", reason);
        let (kind, params) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("`{s}`: expected `kind:param=value,...`")))?;
        let mut name = None;
        let mut values: Vec<(&str, f64)> = Vec::new();
        for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("`{part}`: expected param=value")))?;
            let key = key.trim();
            let value = value.trim();
            if key == "name" {
                if value.is_empty() || value.contains(['/', '\\', ',', ':']) {
                    return Err(bad(format!("invalid algorithm name `{value}`")));
                }
                name = Some(value.to_string());
                continue;
            }
            if values.iter().any(|(k, _)| *k == key) {
                return Err(bad(format!("`{s}`: parameter `{key}` given twice")));
            }
            let v: f64 = value
                .parse()
                .map_err(|_| bad(format!("`{key}={value}`: not a number")))?;
            values.push((key, v));
        }
        let allowed: &[&str] = match kind.trim() {
            "iss" => &["mu"],
            "ipvss" => &["mu0", "phi"],
            "vss" => &["mu0", "eta", "c"],
            other => {
                return Err(bad(format!(
                    "unknown algorithm `{other}` (expected iss, ipvss or vss)"
                )))
            }
        };
        if let Some((k, _)) = values.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(bad(format!("`{kind}` does not take parameter `{k}`")));
        }
        let get = |k: &str| values.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);
        let need = |k: &str| get(k).ok_or_else(|| bad(format!("`{kind}` requires `{k}`")));
        let kind = match kind.trim() {
            "iss" => AlgorithmKind::Iss { mu: need("mu")? },
            "ipvss" => AlgorithmKind::Ipvss {
                mu0: need("mu0")?,
                phi: need("phi")?,
            },
            _ => AlgorithmKind::Vss {
                mu0: need("mu0")?,
                eta: get("eta"),
                c: get("c"),
            },
        };
        Ok(AlgorithmSpec { name, kind })
    }
}

impl TryFrom<String> for AlgorithmSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AlgorithmSpec> for String {
    fn from(a: AlgorithmSpec) -> String {
        a.to_string()
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub taps: usize,
    pub snr_db: Vec<f64>,
    pub iterations: usize,
    pub trials: usize,
    pub algorithms: Vec<AlgorithmSpec>,
    pub seed: u64,
    pub tail_fraction: f64,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub figures: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            taps: 16,
            snr_db: DEFAULT_SNR_SWEEP.to_vec(),
            iterations: 5_000,
            trials: 1_000,
            algorithms: vec![
                AlgorithmSpec::iss(DEFAULT_MU),
                AlgorithmSpec::iss(SMALL_MU),
                AlgorithmSpec::ipvss(DEFAULT_MU, SMALL_MU),
            ],
            seed: crate::DEFAULT_SEED,
            tail_fraction: DEFAULT_TAIL_FRACTION,
            out_dir: PathBuf::from("ipvss-out"),
            format: OutputFormat::Csv,
            figures: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    taps: Option<usize>,
    snr_db: Option<OneOrMany>,
    iterations: Option<usize>,
    trials: Option<usize>,
    algorithms: Option<Vec<AlgorithmSpec>>,
    seed: Option<u64>,
    tail_fraction: Option<f64>,
    out_dir: Option<PathBuf>,
    format: Option<OutputFormat>,
    figures: Option<bool>,
}

/// Command-line flags.
#[derive(Debug, Clone, Default, Parser)]
#[command(
    name = "ipvss",
    version,
    about = "IPVSS-LMS channel estimation experiments"
)]
pub struct CliArgs {
    /// TOML config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Received SNR in dB (repeat for a sweep)
    #[arg(long = "snr-db", allow_negative_numbers = true)]
    pub snr_db: Vec<f64>,
    /// Channel / filter length N
    #[arg(long)]
    pub taps: Option<usize>,
    /// Monte Carlo trials M
    #[arg(long)]
    pub trials: Option<usize>,
    /// Iterations T per trial
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Algorithm `kind:param=value,...` (repeatable, replaces the config list)
    #[arg(long = "algo")]
    pub algo: Vec<String>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Curve file format
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Run the figure preset (SNR sweep plus the IPVSS vs VSS comparison)
    #[arg(long)]
    pub figures: bool,
    /// Print the per-iteration arithmetic cost table and exit
    #[arg(long)]
    pub complexity: bool,
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))
}

/// Defaults, then the config file (if any), then flags.
pub fn parse_config(args: &CliArgs) -> Result<ExperimentSpec> {
    let file = match &args.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    let mut spec = ExperimentSpec::default();

    if let Some(v) = file.taps {
        spec.taps = v;
    }
    match file.snr_db {
        Some(OneOrMany::One(v)) => spec.snr_db = vec![v],
        Some(OneOrMany::Many(v)) => spec.snr_db = v,
        None => {}
    }
    if let Some(v) = file.iterations {
        spec.iterations = v;
    }
    if let Some(v) = file.trials {
        spec.trials = v;
    }
    if let Some(v) = file.algorithms {
        spec.algorithms = v;
    }
    if let Some(v) = file.seed {
        spec.seed = v;
    }
    if let Some(v) = file.tail_fraction {
        spec.tail_fraction = v;
    }
    if let Some(v) = file.out_dir {
        spec.out_dir = v;
    }
    if let Some(v) = file.format {
        spec.format = v;
    }
    if let Some(v) = file.figures {
        spec.figures = v;
    }

    if !args.snr_db.is_empty() {
        spec.snr_db = args.snr_db.clone();
    }
    if let Some(v) = args.taps {
        spec.taps = v;
    }
    if let Some(v) = args.trials {
        spec.trials = v;
    }
    if let Some(v) = args.iterations {
        spec.iterations = v;
    }
    if !args.algo.is_empty() {
        spec.algorithms = args.algo.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = &args.out_dir {
        spec.out_dir = v.clone();
    }
    if let Some(v) = args.format {
        spec.format = v;
    }
    spec.figures |= args.figures;

    spec.validate()?;
    Ok(spec)
}

/// Parses a complete spec previously written by [`ExperimentSpec::to_toml`].
pub fn spec_from_toml(text: &str) -> Result<ExperimentSpec> {
    let spec: ExperimentSpec =
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

/// One SNR point of a run: a label, an SNR and the algorithms to compare.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunPoint {
    pub label: String,
    pub snr_db: f64,
    pub algorithms: Vec<AlgorithmSpec>,
}

fn snr_label(snr_db: f64) -> String {
    format!("snr{snr_db}db")
}

impl ExperimentSpec {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::config("taps", "must be >= 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.seed > i64::MAX as u64 {
            return Err(Error::config(
                "seed",
                "must be <= 2^63 - 1 (TOML integer range)",
            ));
        }
        if self.iterations < self.taps.max(10) {
            return Err(Error::config(
                "iterations",
                format!("must be >= max(taps, 10), got {}", self.iterations),
            ));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::config("tail_fraction", "must lie in (0, 1]"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("snr_db", "at least one SNR point required"));
        }
        for (i, s) in self.snr_db.iter().enumerate() {
            if s.is_nan() || *s == f64::NEG_INFINITY {
                return Err(Error::config(
                    format!("snr_db[{i}]"),
                    format!("invalid SNR {s}"),
                ));
            }
        }
        if self.algorithms.is_empty() && !self.figures {
            return Err(Error::config(
                "algorithms",
                "at least one algorithm required",
            ));
        }
        for point in self.points() {
            for (i, a) in point.algorithms.iter().enumerate() {
                let prefix = if self.figures {
                    format!("figures.{}.algorithms[{i}]", point.label)
                } else {
                    format!("algorithms[{i}]")
                };
                a.resolve(point.snr_db).map_err(|e| match e {
                    Error::Config { field, reason } => {
                        Error::config(format!("{prefix}.{field}"), reason)
                    }
                    other => other,
                })?;
                if point.algorithms[..i].iter().any(|b| b.label() == a.label()) {
                    return Err(Error::config(
                        format!("{prefix}.name"),
                        format!("duplicate algorithm name `{}`", a.label()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The SNR points this spec runs. With `figures` set this is the figure
    /// preset and `snr_db`/`algorithms` are ignored.
    pub fn points(&self) -> Vec<RunPoint> {
        if self.figures {
            let sweep_algos = vec![
                AlgorithmSpec::iss(DEFAULT_MU),
                AlgorithmSpec::iss(SMALL_MU),
                AlgorithmSpec::ipvss(DEFAULT_MU, SMALL_MU),
                AlgorithmSpec::ipvss(DEFAULT_MU, THRESHOLD_SWEEP[4]),
            ];
            let mut points: Vec<RunPoint> = DEFAULT_SNR_SWEEP
                .iter()
                .enumerate()
                .map(|(i, &snr)| RunPoint {
                    label: format!("fig{}_{}", i + 3, snr_label(snr)),
                    snr_db: snr,
                    algorithms: sweep_algos.clone(),
                })
                .collect();
            points.push(RunPoint {
                label: format!("fig8_{}", snr_label(FIG8_SNR_DB)),
                snr_db: FIG8_SNR_DB,
                algorithms: vec![
                    AlgorithmSpec::vss(DEFAULT_MU),
                    AlgorithmSpec::ipvss(DEFAULT_MU, FIG8_PHI),
                ],
            });
            points
        } else {
            self.snr_db
                .iter()
                .map(|&snr| RunPoint {
                    label: snr_label(snr),
                    snr_db: snr,
                    algorithms: self.algorithms.clone(),
                })
                .collect()
        }
    }

    pub fn trial_config(&self, point: &RunPoint) -> Result<TrialConfig> {
        let algorithms = point
            .algorithms
            .iter()
            .map(|a| Ok(NamedSchedule::new(a.label(), a.resolve(point.snr_db)?)))
            .collect::<Result<_>>()?;
        Ok(TrialConfig {
            n_taps: self.taps,
            snr_db: point.snr_db,
            iterations: self.iterations,
            num_trials: self.trials,
            algorithms,
            master_seed: self.seed,
            tail_fraction: self.tail_fraction,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
struct TrajectorySummary<'a> {
    algorithm: &'a str,
    steady_state: f64,
    steady_state_db: f64,
    steady_state_std_error: f64,
    convergence_iteration: usize,
    convergence_std_error: f64,
    completed_trials: usize,
    divergent_trials: &'a [DivergentTrial],
}

#[derive(Debug, Clone, Serialize)]
struct PointSummary<'a> {
    label: &'a str,
    snr_db: f64,
    unstable: bool,
    trajectories: Vec<TrajectorySummary<'a>>,
    comparison: Option<ComparisonTable>,
}

#[derive(Debug, Clone, Serialize)]
struct ResolvedPoint {
    label: String,
    snr_db: f64,
    noise_variance: f64,
    algorithms: Vec<NamedSchedule>,
}

#[derive(Debug, Clone, Serialize)]
struct Provenance {
    artifact: &'static str,
    version: &'static str,
    master_seed: u64,
    /// The resolved spec minus `out_dir`, so output trees compare equal
    /// wherever they were written.
    spec: serde_json::Value,
    points: Vec<ResolvedPoint>,
}

/// What [`run`] produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub unstable: bool,
    pub files: Vec<PathBuf>,
    pub results: Vec<(RunPoint, ExperimentResult)>,
}

impl RunReport {
    pub fn exit_code(&self) -> u8 {
        if self.unstable {
            EXIT_UNSTABLE
        } else {
            EXIT_OK
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents).map_err(|e| Error::io(path, e))
}

fn curve_csv(t: &MseTrajectory) -> String {
    let mut out = String::with_capacity(t.per_iteration_mse.len() * 48);
    out.push_str("iteration,mse,mse_db\n");
    for (i, &mse) in t.per_iteration_mse.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, mse, to_db(mse)));
    }
    out
}

#[derive(Serialize)]
struct CurveJson<'a> {
    algorithm: &'a str,
    iteration: Vec<usize>,
    mse: &'a [f64],
    mse_db: Vec<f64>,
}

fn curve_json(t: &MseTrajectory) -> String {
    let doc = CurveJson {
        algorithm: &t.algorithm,
        iteration: (1..=t.per_iteration_mse.len()).collect(),
        mse: &t.per_iteration_mse,
        mse_db: t.per_iteration_mse.iter().map(|&m| to_db(m)).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("curve serializes")
}

fn trajectory_summary(t: &MseTrajectory) -> TrajectorySummary<'_> {
    TrajectorySummary {
        algorithm: &t.algorithm,
        steady_state: t.steady_state,
        steady_state_db: t.steady_state_db(),
        steady_state_std_error: t.steady_state_std_error,
        convergence_iteration: t.convergence_iteration,
        convergence_std_error: t.convergence_std_error,
        completed_trials: t.completed_trials,
        divergent_trials: &t.divergent_trials,
    }
}

/// Runs every point of `spec` and writes curves, `summary.json` and
/// `provenance.json` under `spec.out_dir`.
pub fn run(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    let points = spec.points();
    let mut results = Vec::with_capacity(points.len());
    for point in &points {
        let config = spec.trial_config(point)?;
        results.push((point.clone(), run_experiment(&config)?));
    }

    fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    let mut files = Vec::new();
    let mut summaries = Vec::with_capacity(results.len());
    for (point, result) in &results {
        let dir = spec.out_dir.join(&point.label);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for t in &result.trajectories {
            let (ext, body) = match spec.format {
                OutputFormat::Csv => ("csv", curve_csv(t)),
                OutputFormat::Json => ("json", curve_json(t)),
            };
            let path = dir.join(format!("{}.{ext}", t.algorithm));
            write_file(&path, body.as_bytes())?;
            files.push(path);
        }
        let comparison = if result.trajectories.len() >= 2 {
            Some(compare_summary(&result.trajectories)?)
        } else {
            None
        };
        summaries.push(PointSummary {
            label: &point.label,
            snr_db: point.snr_db,
            unstable: result.unstable,
            trajectories: result.trajectories.iter().map(trajectory_summary).collect(),
            comparison,
        });
    }

    let unstable = results.iter().any(|(_, r)| r.unstable);
    let summary = serde_json::json!({ "unstable": unstable, "points": summaries });
    let path = spec.out_dir.join("summary.json");
    write_file(
        &path,
        serde_json::to_string_pretty(&summary)
            .expect("summary")
            .as_bytes(),
    )?;
    files.push(path);

    let provenance = Provenance {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        master_seed: spec.seed,
        spec: {
            let mut v = serde_json::to_value(spec).expect("spec serializes");
            v.as_object_mut()
                .expect("spec is a table")
                .remove("out_dir");
            v
        },
        points: points
            .iter()
            .map(|p| {
                Ok(ResolvedPoint {
                    label: p.label.clone(),
                    snr_db: p.snr_db,
                    noise_variance: snr_db_to_variance(p.snr_db, 1.0),
                    algorithms: spec.trial_config(p)?.algorithms,
                })
            })
            .collect::<Result<_>>()?,
    };
    let path = spec.out_dir.join("provenance.json");
    write_file(
        &path,
        serde_json::to_string_pretty(&provenance)
            .expect("provenance")
            .as_bytes(),
    )?;
    files.push(path);

    Ok(RunReport {
        unstable,
        files,
        results,
    })
}

/// Multiplication/addition counts per iteration for all three algorithms.
pub fn report_complexity(n_taps: usize) -> Result<String> {
    if n_taps == 0 {
        return Err(Error::config("taps", "must be >= 1"));
    }
    let mut out = format!(
        "{:<10} {:>15} {:>10}\n",
        "algorithm", "multiplications", "additions"
    );
    for algo in [Algorithm::IssLms, Algorithm::VssLms, Algorithm::IpvssLms] {
        let c = op_count(algo, n_taps)?;
        out.push_str(&format!(
            "{:<10} {:>15} {:>10}\n",
            algo.label(),
            c.multiplications,
            c.additions
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn args(f: impl FnOnce(&mut CliArgs)) -> CliArgs {
        let mut a = CliArgs::default();
        f(&mut a);
        a
    }

    #[test]
    fn empty_config_gives_defaults() {
        let spec = parse_config(&CliArgs::default()).unwrap();
        assert_eq!(spec, ExperimentSpec::default());
        assert_eq!(spec.taps, 16);
        assert_eq!(spec.trials, 1000);
        assert_eq!(spec.snr_db, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        let labels: Vec<_> = spec.algorithms.iter().map(|a| a.label()).collect();
        assert_eq!(
            labels,
            ["iss-mu0.05", "iss-mu0.005", "ipvss-mu0.05-phi0.005"]
        );
    }

    #[test]
    fn flag_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(&path, "snr_db = 10\ntrials = 7\n").unwrap();
        let spec = parse_config(&args(|a| {
            a.config = Some(path.clone());
            a.snr_db = vec![15.0];
        }))
        .unwrap();
        assert_eq!(spec.snr_db, vec![15.0]);
        assert_eq!(spec.trials, 7);
    }

    #[test]
    fn unknown_file_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(&path, "tapz = 4\n").unwrap();
        let err = parse_config(&args(|a| a.config = Some(path.clone()))).unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err =
            parse_config(&args(|a| a.config = Some("/nonexistent/x.toml".into()))).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_IO);
    }

    #[test]
    fn phi_above_mu0_names_field() {
        let err =
            parse_config(&args(|a| a.algo = vec!["ipvss:mu0=0.05,phi=0.1".into()])).unwrap_err();
        match err {
            Error::Config { field, reason } => {
                assert_eq!(field, "algorithms[0].phi");
                assert!(reason.contains("mu0"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_at_or_above_inverse_lambda_rejected() {
        let err = parse_config(&args(|a| a.algo = vec!["iss:mu=1.0".into()])).unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "algorithms[0].mu"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn algorithm_strings() {
        let a: AlgorithmSpec = "vss:mu0=0.05,eta=0.9,name=ref".parse().unwrap();
        assert_eq!(a.label(), "ref");
        assert_eq!(
            a.resolve(10.0).unwrap(),
            StepSizeSchedule::ErrorDriven {
                mu0: 0.05,
                eta: 0.9,
                c: 0.1
            }
        );
        let d: AlgorithmSpec = "vss:mu0=0.05".parse().unwrap();
        match d.resolve(20.0).unwrap() {
            StepSizeSchedule::ErrorDriven { eta, c, .. } => {
                assert_eq!(eta, DEFAULT_VSS_ETA);
                assert!((c - 0.01).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        assert!("iss".parse::<AlgorithmSpec>().is_err());
        assert!("iss:phi=0.1".parse::<AlgorithmSpec>().is_err());
        assert!("lms:mu=0.1".parse::<AlgorithmSpec>().is_err());
        assert!("iss:mu=abc".parse::<AlgorithmSpec>().is_err());
        assert!("ipvss:mu0=0.05".parse::<AlgorithmSpec>().is_err());
        assert!("iss:mu=0.1,mu=0.2".parse::<AlgorithmSpec>().is_err());
    }

    #[test]
    fn complexity_report_rows() {
        let t = report_complexity(16).unwrap();
        let rows: Vec<Vec<&str>> = t
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().collect())
            .collect();
        assert_eq!(rows[0], ["ISS-LMS", "32", "33"]);
        assert_eq!(rows[1], ["VSS-LMS", "102", "79"]);
        assert_eq!(rows[2], ["IPVSS-LMS", "33", "33"]);
        let t1 = report_complexity(1).unwrap();
        let rows: Vec<Vec<&str>> = t1
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().collect())
            .collect();
        assert_eq!(rows[0][1..], ["2", "3"]);
        assert_eq!(rows[1][1..], ["12", "4"]);
        assert_eq!(rows[2][1..], ["3", "3"]);
        assert!(report_complexity(0).is_err());
    }

    #[test]
    fn figures_preset_points() {
        let spec = ExperimentSpec {
            figures: true,
            ..Default::default()
        };
        let points = spec.points();
        assert_eq!(points.len(), 6);
        assert_eq!(points[3].label, "fig6_snr15db");
        assert_eq!(points[5].algorithms.len(), 2);
        spec.validate().unwrap();
    }

    fn arb_algorithm() -> impl Strategy<Value = AlgorithmSpec> {
        prop_oneof![
            (1e-4f64..0.9).prop_map(AlgorithmSpec::iss),
            (1e-3f64..0.9, 0.01f64..=1.0).prop_map(|(m, r)| AlgorithmSpec::ipvss(m, m * r)),
            (
                1e-3f64..0.9,
                proptest::option::of(0.0f64..0.999),
                proptest::option::of(1e-4f64..10.0)
            )
                .prop_map(|(mu0, eta, c)| AlgorithmSpec {
                    name: None,
                    kind: AlgorithmKind::Vss { mu0, eta, c }
                }),
        ]
    }

    proptest! {
        #[test]
        fn spec_round_trips_through_toml(
            taps in 1usize..64,
            snr in proptest::collection::vec(-10.0f64..40.0, 1..6),
            trials in 1usize..5000,
            seed in 0..=i64::MAX as u64,
            tail in 0.01f64..=1.0,
            algos in proptest::collection::vec(arb_algorithm(), 1..4),
            json in any::<bool>(),
        ) {
            // labels must be unique per point
            let algorithms: Vec<AlgorithmSpec> = algos
                .into_iter()
                .enumerate()
                .map(|(i, mut a)| { a.name = Some(format!("a{i}")); a })
                .collect();
            let spec = ExperimentSpec {
                taps,
                snr_db: snr,
                iterations: taps.max(10) + 100,
                trials,
                algorithms,
                seed,
                tail_fraction: tail,
                out_dir: PathBuf::from("out/dir"),
                format: if json { OutputFormat::Json } else { OutputFormat::Csv },
                figures: false,
            };
            let text = spec.to_toml();
            let back = spec_from_toml(&text).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
