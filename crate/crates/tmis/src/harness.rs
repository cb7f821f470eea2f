//! Macro-replicated estimator sweeps.
//!
//! Every `(estimator, n, H)` cell draws `K` independent datasets under the
//! logging policy. Replication `r` samples from the key
//! `derive_key(master_seed, [estimator id, n, H, r])`, so a cell's numbers do
//! not depend on which other cells are in the grid or on scheduling.
//! Estimates land in an indexed buffer and are reduced in index order.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tmis_core::dp::exact_value;
use tmis_core::env::{build_paper_mdp, DEFAULT_P_SEED};
use tmis_core::estimators::{evaluate, EstimatorKind, SplitConfig};
use tmis_core::rng::derive_key;
use tmis_core::sample::sample_dataset;
use tmis_core::stats::{mean, pairwise_sum};
use tmis_core::uniform::uniform_evaluate;
use tmis_core::{Policy, TabularMdp};

use crate::io;

pub const CSV_HEADER: [&str; 9] =
    ["estimator", "H", "n", "K", "mean_estimate", "true_value", "rmse", "relative_rmse", "wall_seconds"];

/// Where each horizon's model and policies come from.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Environment {
    /// The two-state benchmark, rebuilt for every `H` in the grid.
    Paper { p_seed: u64 },
    /// One fixed model; the `H` grid must contain only its horizon.
    /// `mu_known = false` withholds the logging policy from the estimators.
    Fixed { mdp: TabularMdp, mu: Policy, pi: Policy, mu_known: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub estimators: Vec<EstimatorKind>,
    pub n_grid: Vec<usize>,
    pub h_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    pub split: SplitConfig,
    pub environment: Environment,
    pub output: Option<PathBuf>,
    /// When false, `wall_seconds` is written as 0 so artifacts are
    /// byte-identical across runs.
    pub record_timing: bool,
}

impl SweepConfig {
    /// Convergence in `n` at `H = 100`.
    pub fn figure_n() -> Self {
        SweepConfig {
            estimators: vec![EstimatorKind::Tmis, EstimatorKind::Smis],
            n_grid: (7..=13).map(|k| 1usize << k).collect(),
            h_grid: vec![100],
            replications: 100,
            master_seed: 0,
            split: SplitConfig::default(),
            environment: Environment::Paper { p_seed: DEFAULT_P_SEED },
            output: None,
            record_timing: true,
        }
    }

    /// Horizon scaling at `n = 1024`.
    pub fn figure_h() -> Self {
        SweepConfig {
            n_grid: vec![1024],
            h_grid: (3..=8).map(|k| 1usize << k).collect(),
            ..Self::figure_n()
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.estimators.is_empty() || self.n_grid.is_empty() || self.h_grid.is_empty() {
            bail!("estimators, n_grid and h_grid must be nonempty");
        }
        if self.replications == 0 {
            bail!("replications must be at least 1");
        }
        if self.n_grid.contains(&0) {
            bail!("n_grid entries must be positive");
        }
        if let Environment::Fixed { mdp, .. } = &self.environment {
            if let Some(h) = self.h_grid.iter().find(|&&h| h != mdp.horizon()) {
                bail!("h_grid entry {h} does not match the fixed model horizon {}", mdp.horizon());
            }
        }
        Ok(())
    }
}

/// JSON form of a split rule: `{"folds": N}`, `{"fold_size": M}` or `"sqrt"`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SplitDoc {
    Folds(usize),
    FoldSize(usize),
    Sqrt,
}

impl From<SplitDoc> for SplitConfig {
    fn from(s: SplitDoc) -> Self {
        match s {
            SplitDoc::Folds(k) => SplitConfig::Folds(k),
            SplitDoc::FoldSize(m) => SplitConfig::FoldSize(m),
            SplitDoc::Sqrt => SplitConfig::SqrtFoldSize,
        }
    }
}

impl From<SplitConfig> for SplitDoc {
    fn from(s: SplitConfig) -> Self {
        match s {
            SplitConfig::Folds(k) => SplitDoc::Folds(k),
            SplitConfig::FoldSize(m) => SplitDoc::FoldSize(m),
            SplitConfig::SqrtFoldSize => SplitDoc::Sqrt,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentDoc {
    Paper {
        #[serde(default = "default_p_seed")]
        p_seed: u64,
    },
    /// Paths are resolved relative to the config file.
    Files {
        model: PathBuf,
        mu: PathBuf,
        pi: PathBuf,
        #[serde(default = "yes")]
        mu_known: bool,
    },
}

fn default_p_seed() -> u64 {
    DEFAULT_P_SEED
}

fn yes() -> bool {
    true
}

fn default_split() -> SplitDoc {
    SplitDoc::Folds(1)
}

fn default_environment() -> EnvironmentDoc {
    EnvironmentDoc::Paper { p_seed: DEFAULT_P_SEED }
}

/// On-disk sweep configuration.
///
/// ```json
/// {
///   "estimators": ["tmis", "smis"],
///   "n_grid": [128, 256, 512],
///   "h_grid": [100],
///   "replications": 100,
///   "master_seed": 0,
///   "split": {"folds": 1},
///   "environment": {"kind": "paper", "p_seed": 100},
///   "output": "sweep.csv",
///   "record_timing": true
/// }
/// ```
///
/// `split`, `environment`, `output` and `record_timing` are optional.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfigDoc {
    pub estimators: Vec<String>,
    pub n_grid: Vec<usize>,
    pub h_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default = "default_split")]
    pub split: SplitDoc,
    #[serde(default = "default_environment")]
    pub environment: EnvironmentDoc,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "yes")]
    pub record_timing: bool,
}

impl SweepConfigDoc {
    pub fn into_config(self, base_dir: &Path) -> anyhow::Result<SweepConfig> {
        let estimators = self
            .estimators
            .iter()
            .map(|s| s.parse::<EstimatorKind>())
            .collect::<Result<Vec<_>, _>>()?;
        let environment = match self.environment {
            EnvironmentDoc::Paper { p_seed } => Environment::Paper { p_seed },
            EnvironmentDoc::Files { model, mu, pi, mu_known } => Environment::Fixed {
                mdp: io::read_model(&base_dir.join(model))?,
                mu: io::read_policy(&base_dir.join(mu))?,
                pi: io::read_policy(&base_dir.join(pi))?,
                mu_known,
            },
        };
        let config = SweepConfig {
            estimators,
            n_grid: self.n_grid,
            h_grid: self.h_grid,
            replications: self.replications,
            master_seed: self.master_seed,
            split: self.split.into(),
            environment,
            output: self.output.map(|p| base_dir.join(p)),
            record_timing: self.record_timing,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> anyhow::Result<SweepConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let doc: SweepConfigDoc =
            serde_json::from_str(&text).with_context(|| format!("parsing sweep config {}", path.display()))?;
        doc.into_config(path.parent().unwrap_or(Path::new(".")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub estimator: EstimatorKind,
    pub horizon: usize,
    pub n: usize,
    pub replications: usize,
    pub mean_estimate: f64,
    pub true_value: f64,
    pub rmse: f64,
    /// `rmse / true_value`; NaN when the true value is not positive.
    pub relative_rmse: f64,
    pub wall_seconds: f64,
    /// Set when the estimator failed on some replication; the numeric
    /// fields are then NaN.
    pub error: Option<RowError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, estimator: EstimatorKind, horizon: usize, n: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.estimator == estimator && r.horizon == horizon && r.n == n)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> anyhow::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.estimator.name().to_string(),
                r.horizon.to_string(),
                r.n.to_string(),
                r.replications.to_string(),
                r.mean_estimate.to_string(),
                r.true_value.to_string(),
                r.rmse.to_string(),
                r.relative_rmse.to_string(),
                r.wall_seconds.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Aggregate of `K` estimates against a known truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean_estimate: f64,
    pub rmse: f64,
    pub relative_rmse: f64,
}

pub fn aggregate(estimates: &[f64], truth: f64) -> Aggregate {
    let sq: Vec<f64> = estimates.iter().map(|v| (v - truth) * (v - truth)).collect();
    let rmse = (pairwise_sum(&sq) / sq.len() as f64).sqrt();
    Aggregate {
        mean_estimate: mean(estimates),
        rmse,
        relative_rmse: if truth > 0.0 { rmse / truth } else { f64::NAN },
    }
}

/// Seed for replication `r` of a cell identified by `coords`.
pub fn replication_seed(master_seed: u64, coords: &[u64], r: usize) -> u64 {
    let mut key = coords.to_vec();
    key.push(r as u64);
    derive_key(master_seed, &key)
}

/// Runs `f(seed_r)` for `r in 0..k` in parallel and returns the results in
/// replication order.
pub fn replicate<T, F>(k: usize, master_seed: u64, coords: &[u64], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..k).into_par_iter().map(|r| f(replication_seed(master_seed, coords, r))).collect()
}

struct Instance {
    mdp: TabularMdp,
    mu: Policy,
    pi: Policy,
    mu_known: bool,
    truth: f64,
}

fn instance(env: &Environment, horizon: usize) -> anyhow::Result<Instance> {
    let (mdp, mu, pi, mu_known) = match env {
        Environment::Paper { p_seed } => {
            let e = build_paper_mdp(horizon, *p_seed)?;
            (e.mdp, e.mu, e.pi, true)
        }
        Environment::Fixed { mdp, mu, pi, mu_known } => (mdp.clone(), mu.clone(), pi.clone(), *mu_known),
    };
    let truth = exact_value(&mdp, &pi)?.policy_value;
    Ok(Instance { mdp, mu, pi, mu_known, truth })
}

fn run_cell(config: &SweepConfig, inst: &Instance, kind: EstimatorKind, horizon: usize, n: usize) -> SweepRow {
    let start = Instant::now();
    let coords = [kind.id(), n as u64, horizon as u64];
    let mu = inst.mu_known.then_some(&inst.mu);
    let results: Vec<tmis_core::Result<f64>> = replicate(config.replications, config.master_seed, &coords, |seed| {
        let data = sample_dataset(&inst.mdp, &inst.mu, n, seed)?;
        evaluate(kind, &data, &inst.pi, mu, config.split)
    });
    let wall_seconds = if config.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let mut row = SweepRow {
        estimator: kind,
        horizon,
        n,
        replications: config.replications,
        mean_estimate: f64::NAN,
        true_value: inst.truth,
        rmse: f64::NAN,
        relative_rmse: f64::NAN,
        wall_seconds,
        error: None,
    };
    match results.into_iter().collect::<tmis_core::Result<Vec<f64>>>() {
        Ok(estimates) => {
            let agg = aggregate(&estimates, inst.truth);
            row.mean_estimate = agg.mean_estimate;
            row.rmse = agg.rmse;
            row.relative_rmse = agg.relative_rmse;
        }
        Err(e) => row.error = Some(RowError { kind: e.kind().into(), message: e.to_string() }),
    }
    row
}

/// Runs the sweep on the current rayon pool. Rows are ordered by `H`, then
/// estimator, then `n`, following the config's list order.
pub fn run_sweep(config: &SweepConfig) -> anyhow::Result<SweepResult> {
    config.validate()?;
    let mut rows = Vec::new();
    for &horizon in &config.h_grid {
        let inst = instance(&config.environment, horizon).with_context(|| format!("building H = {horizon}"))?;
        for &kind in &config.estimators {
            for &n in &config.n_grid {
                rows.push(run_cell(config, &inst, kind, horizon, n));
            }
        }
    }
    Ok(SweepResult { rows })
}

/// [`run_sweep`] on a dedicated pool of `workers` threads.
pub fn run_sweep_with_workers(config: &SweepConfig, workers: usize) -> anyhow::Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(|| run_sweep(config))
}

/// Mean sup-error of uniform evaluation at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformRow {
    pub n: usize,
    pub replications: usize,
    pub mean_sup_error: f64,
}

/// Uniform evaluation of every deterministic policy over an `n` grid, `K`
/// datasets per size drawn under `mu`.
pub fn uniform_sweep(
    mdp: &TabularMdp,
    mu: &Policy,
    n_grid: &[usize],
    replications: usize,
    master_seed: u64,
    split: SplitConfig,
    cap: u64,
) -> anyhow::Result<Vec<UniformRow>> {
    n_grid
        .iter()
        .map(|&n| {
            let errors = replicate(replications, master_seed, &[0, n as u64, mdp.horizon() as u64], |seed| {
                let data = sample_dataset(mdp, mu, n, seed)?;
                Ok(uniform_evaluate(&data, mdp, split, cap)?.sup_error)
            })
            .into_iter()
            .collect::<anyhow::Result<Vec<f64>>>()?;
            Ok(UniformRow { n, replications, mean_sup_error: mean(&errors) })
        })
        .collect()
}
