//! `gwtree`: sample conditioned Galton–Watson trees and run the limit-law checks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gwtree::experiments::{self, Experiment, ExperimentConfig, ExtremeStatistic, RunOutput, RunStatus};
use gwtree::oracle::enumerate_trees;
use gwtree::{OmegaSet, SamplingMode};

/// Environment variable holding the default worker count.
const WORKERS_ENV: &str = "GWTREE_WORKERS";

const EXIT_PASS: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_TEST_FAILURE: u8 = 2;
const EXIT_INVALID_RATE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "gwtree", version, about = "Conditioned Galton–Watson trees with power-law offspring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print one conditioned tree as its DFS outdegree list.
    Sample(SampleArgs),
    /// Run a Monte Carlo experiment and print its JSON summary.
    Exp(ExpArgs),
    /// Check the sampler against the exact law of small trees.
    Oracle(OracleArgs),
    /// Stable law numerics.
    Stable {
        #[command(subcommand)]
        command: StableCommand,
    },
}

#[derive(Subcommand, Debug)]
enum StableCommand {
    /// Tabulate the density as `x,h` rows.
    Density(DensityArgs),
}

#[derive(Args, Debug, Default)]
struct LawArgs {
    /// Tail exponent of the offspring law.
    #[arg(long)]
    alpha: Option<f64>,
    /// Offspring mean, below 1.
    #[arg(long)]
    mean: Option<f64>,
    /// Outdegree set: `all`, `0,2` or `all-1,3`.
    #[arg(long)]
    omega: Option<OmegaSet>,
    /// Number of vertices with outdegree in the set.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sampler; defaults to exact up to n = 500.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SamplingMode>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    law: LawArgs,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML file with experiment settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads (default: $GWTREE_WORKERS, then one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Main CSV path; the summary goes next to it as `.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExpArgs {
    /// maxdeg, height, extremes, size, fringe, segments, shape, lukasiewicz, crossval, scaling or oracle.
    name: Experiment,
    #[command(flatten)]
    law: LawArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma separated sizes for height and fringe runs.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,
    /// second-degree, max-fringe or kth-degree:<i>.
    #[arg(long)]
    statistic: Option<ExtremeStatistic>,
    /// Fringe pattern as a DFS outdegree list, e.g. "2 0 0".
    #[arg(long)]
    pattern: Option<String>,
    /// Size cap for shape and oracle runs.
    #[arg(long)]
    cap: Option<usize>,
    /// Comma separated points of (0, 1] for the Łukasiewicz run.
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    law: LawArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Largest enumerated tree size.
    #[arg(long)]
    cap: Option<usize>,
    /// Also write the enumerated `degrees,weight` table here.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[arg(long)]
    theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long)]
    step: f64,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mode(text: &str) -> std::result::Result<SamplingMode, String> {
    match text {
        "exact" => Ok(SamplingMode::Exact),
        "bigjump" => Ok(SamplingMode::Bigjump),
        _ => Err(format!("unknown mode '{text}', expected exact or bigjump")),
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn apply_law(cfg: &mut ExperimentConfig, law: &LawArgs) {
    if let Some(v) = law.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = law.mean {
        cfg.mean = v;
    }
    if let Some(v) = &law.omega {
        cfg.omega = v.clone();
    }
    if let Some(v) = law.n {
        cfg.n = v;
    }
    if let Some(v) = law.seed {
        cfg.seed = v;
    }
    if law.mode.is_some() {
        cfg.mode = law.mode;
    }
}

fn apply_run(cfg: &mut ExperimentConfig, run: &RunArgs) -> Result<()> {
    if let Some(v) = run.reps {
        cfg.reps = v;
    }
    if let Some(v) = &run.out {
        cfg.out = Some(v.clone());
    }
    if run.workers.is_some() {
        cfg.workers = run.workers;
    } else if cfg.workers.is_none()
        && let Ok(text) = std::env::var(WORKERS_ENV)
    {
        let w = text.trim().parse().with_context(|| format!("{WORKERS_ENV} must be a positive integer, got '{text}'"))?;
        cfg.workers = Some(w);
    }
    Ok(())
}

fn exp_config(args: &ExpArgs) -> Result<ExperimentConfig> {
    let mut cfg = load_config(args.run.config.as_deref())?;
    cfg.experiment = args.name;
    apply_law(&mut cfg, &args.law);
    apply_run(&mut cfg, &args.run)?;
    if let Some(v) = &args.n_grid {
        cfg.n_grid = v.clone();
    }
    if let Some(v) = args.statistic {
        cfg.statistic = v;
    }
    if let Some(v) = &args.pattern {
        cfg.pattern = v.clone();
    }
    if let Some(v) = args.cap {
        cfg.cap = v;
    }
    if let Some(v) = &args.t_grid {
        cfg.t_grid = v.clone();
    }
    Ok(cfg)
}

/// Writes the artifacts, prints the summary and maps the status to an exit code.
fn report(output: &RunOutput) -> Result<u8> {
    if let Some(out) = &output.summary.config.out {
        experiments::write_outputs(output, out).with_context(|| format!("cannot write outputs next to {}", out.display()))?;
    }
    println!("{}", serde_json::to_string_pretty(&output.summary)?);
    Ok(match output.summary.status {
        RunStatus::Pass => EXIT_PASS,
        RunStatus::TestFailure => EXIT_TEST_FAILURE,
        RunStatus::InvalidRate => EXIT_INVALID_RATE,
    })
}

fn sample(args: &SampleArgs) -> Result<u8> {
    let mut cfg = ExperimentConfig::default();
    apply_law(&mut cfg, &args.law);
    cfg.validate()?;
    match experiments::sample_one(&cfg)? {
        Some(tree) => {
            println!("{tree}");
            Ok(EXIT_PASS)
        }
        None => {
            eprintln!("the big-jump sampler returned INVALID for this seed; try another seed or --mode exact");
            Ok(EXIT_INVALID_RATE)
        }
    }
}

fn oracle(args: &OracleArgs) -> Result<u8> {
    let mut cfg = load_config(args.run.config.as_deref())?;
    cfg.experiment = Experiment::Oracle;
    apply_law(&mut cfg, &args.law);
    apply_run(&mut cfg, &args.run)?;
    if let Some(v) = args.cap {
        cfg.cap = v;
    }
    cfg.validate()?;
    if let Some(path) = &args.dump {
        let table = enumerate_trees(&cfg.law()?, cfg.cap)?;
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        experiments::write_atomic(path, &buf).with_context(|| format!("cannot write {}", path.display()))?;
    }
    report(&experiments::run(&cfg)?)
}

fn density(args: &DensityArgs) -> Result<u8> {
    let table = experiments::stable_density_table(args.theta, args.from, args.to, args.step)?;
    let text = table.to_csv_string();
    match &args.out {
        Some(path) => experiments::write_atomic(path, text.as_bytes()).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(EXIT_PASS)
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Sample(args) => sample(&args),
        Command::Exp(args) => {
            let cfg = exp_config(&args)?;
            cfg.validate()?;
            report(&experiments::run(&cfg)?)
        }
        Command::Oracle(args) => oracle(&args),
        Command::Stable { command: StableCommand::Density(args) } => density(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
