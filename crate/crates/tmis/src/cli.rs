//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tmis_core::analysis::tmis_mse_bound;
use tmis_core::env::{build_paper_mdp, DEFAULT_P_SEED};
use tmis_core::estimators::{evaluate, estimate_tmis_with_diagnostics, EmpiricalModel, EstimatorKind, SplitConfig};
use tmis_core::sample::sample_dataset;
use tmis_core::uniform::{uniform_evaluate, DEFAULT_POLICY_CAP};
use tmis_core::{Policy, TabularMdp};

use crate::harness::{run_sweep, run_sweep_with_workers, SweepConfig, SweepConfigDoc};
use crate::io::{self as fio, PolicyDoc, VarianceReportDoc};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "tmis", version, about = "Tabular off-policy evaluation: simulate, estimate, sweep, bound")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample episodes under a logging policy and write a dataset.
    Simulate(SimulateArgs),
    /// Run one estimator on a dataset; prints the estimate, then a diagnostics JSON line.
    Evaluate(EvaluateArgs),
    /// Run a macro-replicated sweep and write CSV.
    Sweep(SweepArgs),
    /// Print the variance report (CR bound, SMIS asymptotic MSE, TMIS bound) as JSON.
    Bounds(BoundsArgs),
    /// Uniform evaluation over every deterministic policy.
    SelectPolicy(SelectPolicyArgs),
    /// Write the benchmark model, logging and target policies as JSON files.
    MakeEnv(MakeEnvArgs),
}

/// Source of a model: a JSON file or the built-in benchmark.
#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model JSON file.
    #[arg(long, conflicts_with = "paper_h")]
    pub model: Option<PathBuf>,
    /// Use the built-in benchmark with this (even) horizon instead of --model.
    #[arg(long)]
    pub paper_h: Option<usize>,
    /// Coin seed of the built-in benchmark.
    #[arg(long, default_value_t = DEFAULT_P_SEED)]
    pub p_seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: ModelArgs,
    /// Logging policy JSON; defaults to the benchmark's logging policy with --paper-h.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Number of episodes.
    #[arg(short, long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; `.csv` writes CSV, anything else JSON lines.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// One of: is, step-is, smis, tmis, split-tmis.
    #[arg(long, default_value = "tmis")]
    pub estimator: String,
    /// Dataset (`.csv` or JSON lines).
    #[arg(long)]
    pub data: PathBuf,
    /// Target policy JSON; also fixes S, A and H for reading the dataset.
    #[arg(long)]
    pub policy: PathBuf,
    /// Logging policy JSON; required by is, step-is and smis, rejected by tmis and split-tmis.
    #[arg(long)]
    pub mu: Option<PathBuf>,
    /// Number of folds for split-tmis.
    #[arg(long, default_value_t = 1)]
    pub folds: usize,
    /// Accepted for uniformity; evaluation is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep config JSON; without it the n-convergence preset runs.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in config: `n` (H = 100, n = 2^7..2^13) or `h` (n = 1024, H = 2^3..2^8).
    #[arg(long, default_value = "n")]
    pub preset: String,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output CSV; overrides the config. Without either, CSV goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's replication count K.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Write wall_seconds as 0 for byte-identical output.
    #[arg(long, default_value_t = false)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub source: ModelArgs,
    /// Logging policy JSON (default with --paper-h: the benchmark's).
    #[arg(long)]
    pub mu: Option<PathBuf>,
    /// Target policy JSON (default with --paper-h: the benchmark's).
    #[arg(long)]
    pub pi: Option<PathBuf>,
    /// Number of episodes the bound is evaluated at.
    #[arg(short, long, default_value_t = 1024)]
    pub n: u64,
    /// Output JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Accepted for uniformity; the report is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SelectPolicyArgs {
    #[command(flatten)]
    pub source: ModelArgs,
    /// Dataset to evaluate on; when absent, one is sampled under the logging policy.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Logging policy JSON used for sampling (default with --paper-h: the benchmark's).
    #[arg(long)]
    pub mu: Option<PathBuf>,
    /// Episodes to sample when --data is absent.
    #[arg(short, long, default_value_t = 1024)]
    pub n: usize,
    /// Number of split-tmis folds.
    #[arg(long, default_value_t = 1)]
    pub folds: usize,
    /// Largest policy class that will be enumerated.
    #[arg(long, default_value_t = DEFAULT_POLICY_CAP)]
    pub cap: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MakeEnvArgs {
    /// Even horizon, at least 2.
    #[arg(long)]
    pub horizon: usize,
    #[arg(long, default_value_t = DEFAULT_P_SEED)]
    pub p_seed: u64,
    /// Directory receiving model.json, mu.json and pi.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Model plus the benchmark's policies when the benchmark was requested.
struct Loaded {
    mdp: TabularMdp,
    mu: Option<Policy>,
    pi: Option<Policy>,
}

fn load_model(src: &ModelArgs) -> anyhow::Result<Loaded> {
    match (&src.model, src.paper_h) {
        (Some(path), None) => Ok(Loaded { mdp: fio::read_model(path)?, mu: None, pi: None }),
        (None, Some(h)) => {
            let env = build_paper_mdp(h, src.p_seed)?;
            Ok(Loaded { mdp: env.mdp, mu: Some(env.mu), pi: Some(env.pi) })
        }
        _ => Err(CliError::Usage("give exactly one of --model and --paper-h".into()).into()),
    }
}

fn pick_policy(path: Option<&Path>, fallback: Option<Policy>, flag: &str) -> anyhow::Result<Policy> {
    match (path, fallback) {
        (Some(p), _) => fio::read_policy(p),
        (None, Some(pi)) => Ok(pi),
        (None, None) => Err(CliError::Usage(format!("{flag} is required with --model")).into()),
    }
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let loaded = load_model(&args.source)?;
    let mu = pick_policy(args.policy.as_deref(), loaded.mu, "--policy")?;
    let data = sample_dataset(&loaded.mdp, &mu, args.n, args.seed)?;
    fio::write_dataset(&args.out, &data)
}

#[derive(Serialize)]
struct EvaluateDiagnostics {
    estimator: &'static str,
    n: usize,
    #[serde(rename = "H")]
    horizon: usize,
    #[serde(rename = "S")]
    num_states: usize,
    #[serde(rename = "A")]
    num_actions: usize,
    folds: Option<usize>,
    empty_cells: usize,
    state_mass: Option<Vec<f64>>,
}

fn evaluate_cmd(args: EvaluateArgs) -> anyhow::Result<()> {
    let kind: EstimatorKind = args.estimator.parse()?;
    match (kind.needs_logging_policy(), &args.mu) {
        (true, None) => return Err(CliError::Usage(format!("--mu is required for estimator '{kind}'")).into()),
        (false, Some(_)) => {
            return Err(CliError::Usage(format!("estimator '{kind}' does not use the logging policy; drop --mu")).into())
        }
        _ => {}
    }
    let pi = fio::read_policy(&args.policy)?;
    let data = fio::read_dataset(&args.data, pi.num_states(), pi.num_actions())?;
    let mu = args.mu.as_deref().map(fio::read_policy).transpose()?;
    let split = SplitConfig::Folds(args.folds);
    let estimate = evaluate(kind, &data, &pi, mu.as_ref(), split)?;
    let diagnostics = EvaluateDiagnostics {
        estimator: kind.name(),
        n: data.len(),
        horizon: data.horizon(),
        num_states: data.num_states(),
        num_actions: data.num_actions(),
        folds: (kind == EstimatorKind::SplitTmis).then_some(args.folds),
        empty_cells: EmpiricalModel::from_dataset(&data).empty_cells(),
        state_mass: match kind {
            EstimatorKind::Tmis => Some(estimate_tmis_with_diagnostics(&data, &pi)?.1.state_mass),
            _ => None,
        },
    };
    let mut out = io::stdout().lock();
    writeln!(out, "{estimate}")?;
    writeln!(out, "{}", serde_json::to_string(&diagnostics)?)?;
    Ok(())
}

fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let mut config = match &args.config {
        Some(path) => SweepConfigDoc::load(path)?,
        None => match args.preset.as_str() {
            "n" => SweepConfig::figure_n(),
            "h" => SweepConfig::figure_h(),
            other => return Err(CliError::Usage(format!("unknown preset '{other}'; expected n or h")).into()),
        },
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(k) = args.replications {
        config.replications = k;
    }
    if args.no_timing {
        config.record_timing = false;
    }
    if args.out.is_some() {
        config.output = args.out.clone();
    }
    let result = if args.workers == 0 { run_sweep(&config)? } else { run_sweep_with_workers(&config, args.workers)? };
    let mut stderr = io::stderr().lock();
    for row in &result.rows {
        if let Some(err) = &row.error {
            let marker = serde_json::json!({
                "row_error": {"estimator": row.estimator.name(), "H": row.horizon, "n": row.n,
                              "kind": err.kind, "message": err.message}
            });
            writeln!(stderr, "{marker}")?;
        }
    }
    let mut out = output(config.output.as_deref())?;
    result.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn bounds(args: BoundsArgs) -> anyhow::Result<()> {
    let loaded = load_model(&args.source)?;
    let mu = pick_policy(args.mu.as_deref(), loaded.mu, "--mu")?;
    let pi = pick_policy(args.pi.as_deref(), loaded.pi, "--pi")?;
    let report = tmis_mse_bound(&loaded.mdp, &mu, &pi, args.n)?;
    let mut out = output(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &VarianceReportDoc::from(&report))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Selection {
    sup_error: f64,
    best_code: u64,
    best_estimate: f64,
    num_policies: u64,
    best_policy: PolicyDoc,
}

fn select_policy(args: SelectPolicyArgs) -> anyhow::Result<()> {
    let loaded = load_model(&args.source)?;
    let data = match &args.data {
        Some(path) => fio::read_dataset(path, loaded.mdp.num_states(), loaded.mdp.num_actions())?,
        None => {
            let mu = pick_policy(args.mu.as_deref(), loaded.mu, "--mu or --data")?;
            sample_dataset(&loaded.mdp, &mu, args.n, args.seed)?
        }
    };
    let result = uniform_evaluate(&data, &loaded.mdp, SplitConfig::Folds(args.folds), args.cap)?;
    let selection = Selection {
        sup_error: result.sup_error,
        best_code: result.best_code,
        best_estimate: result.best_estimate,
        num_policies: result.num_policies,
        best_policy: PolicyDoc::from_policy(&result.best_policy),
    };
    println!("{}", serde_json::to_string(&selection)?);
    Ok(())
}

fn make_env(args: MakeEnvArgs) -> anyhow::Result<()> {
    let env = build_paper_mdp(args.horizon, args.p_seed)?;
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    fio::write_model(&args.out_dir.join("model.json"), &env.mdp)?;
    fio::write_policy(&args.out_dir.join("mu.json"), &env.mu)?;
    fio::write_policy(&args.out_dir.join("pi.json"), &env.pi)?;
    Ok(())
}

pub fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Bounds(a) => bounds(a),
        Command::SelectPolicy(a) => select_policy(a),
        Command::MakeEnv(a) => make_env(a),
    }
}

/// Machine-readable kind of an error, taken from the first recognised cause.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<tmis_core::Error>() {
            return e.kind();
        }
        if cause.is::<CliError>() {
            return "usage";
        }
        if cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return "parse";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "config"
}

pub fn error_json(err: &anyhow::Error) -> String {
    serde_json::json!({"error": {"kind": error_kind(err), "message": format!("{err:#}")}}).to_string()
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let msg = serde_json::json!({"error": {"kind": "usage", "message": e.to_string().trim_end()}});
            eprintln!("{msg}");
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", error_json(&err));
            1
        }
    }
}
