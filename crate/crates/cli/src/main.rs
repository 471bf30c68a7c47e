//! `bench`: runs solver grids, generates synthetic libsvm data and computes
//! reference solutions.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;
use svrda_core::data::{
    generate_synthetic, normalize_features, parse_libsvm_with, write_libsvm, LabelKind, ParseOptions, SyntheticSpec,
};
use svrda_core::experiment::{compute_reference, nnz, run_experiment, ExperimentConfig};
use svrda_core::{CompositeProblem, Regularizer, SmoothLoss};

/// Thread count for the run grid; defaults to rayon's choice.
const THREADS_ENV: &str = "SVRDA_BENCH_THREADS";

#[derive(Parser)]
#[command(
    name = "bench",
    version,
    about = "Benchmark driver for variance-reduced dual averaging solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (solver, seed) pair of an experiment config.
    Run(RunArgs),
    /// Write a synthetic sparse-ground-truth dataset in libsvm format.
    Synth(SynthArgs),
    /// Compute a high-precision reference solution.
    Reference(ReferenceArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Replace the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
    /// Also count coordinates with |x_j| above this threshold.
    #[arg(long)]
    nnz_threshold: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Ground-truth support size.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Emit ±1 labels instead of regression targets.
    #[arg(long)]
    binary: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Squared,
    Logistic,
}

impl From<LossArg> for SmoothLoss {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Squared => SmoothLoss::SquaredError,
            LossArg::Logistic => SmoothLoss::Logistic,
        }
    }
}

#[derive(Args)]
struct ReferenceArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    l1: f64,
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "squared")]
    loss: LossArg,
    #[arg(long)]
    normalize: bool,
    /// Feature dimension; inferred from the data when absent.
    #[arg(long)]
    dim: Option<usize>,
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
        if threads == 0 {
            bail!("{THREADS_ENV} must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// Returns whether every run succeeded.
fn cmd_run(args: RunArgs) -> anyhow::Result<bool> {
    let mut cfg = ExperimentConfig::from_json_file(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(budget) = args.budget {
        cfg.budget = budget;
    }
    if args.checkpoint_every.is_some() {
        cfg.checkpoint_every = args.checkpoint_every;
    }
    if args.nnz_threshold.is_some() {
        cfg.nnz_threshold = args.nnz_threshold;
    }
    configure_threads()?;
    let manifest = run_experiment(&cfg, &args.out_dir)?;
    for run in &manifest.runs {
        match &run.error {
            None => info!(
                "{} seed {}: gap {:e}, nnz {}",
                run.solver,
                run.seed,
                run.final_gap.unwrap_or(f64::NAN),
                run.final_nnz.unwrap_or(0)
            ),
            Some(e) => eprintln!("{} seed {} failed: {e}", run.solver, run.seed),
        }
    }
    println!(
        "{} runs written to {} ({} failed)",
        manifest.runs.len(),
        args.out_dir.display(),
        manifest.runs.iter().filter(|r| r.error.is_some()).count()
    );
    Ok(manifest.all_ok())
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    let spec = SyntheticSpec {
        n: args.n,
        d: args.d,
        k: args.k,
        noise_std: args.noise,
        label_kind: if args.binary {
            LabelKind::Binary
        } else {
            LabelKind::Regression
        },
        seed: args.seed,
    };
    let (ds, _) = generate_synthetic(&spec)?;
    ensure_parent(&args.out)?;
    let mut w = BufWriter::new(File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?);
    write_libsvm(&ds, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_reference(args: ReferenceArgs) -> anyhow::Result<()> {
    let loss = SmoothLoss::from(args.loss);
    let file = File::open(&args.data).with_context(|| format!("opening {}", args.data.display()))?;
    let opts = ParseOptions {
        dim: args.dim,
        binary: loss == SmoothLoss::Logistic,
    };
    let mut ds = parse_libsvm_with(BufReader::new(file), opts)?;
    if args.normalize {
        ds = normalize_features(&ds);
    }
    let problem = CompositeProblem::from_dataset(&ds, loss, Regularizer::from_weights(args.l1, args.l2)?)?;
    let reference = compute_reference(&problem, args.tol)?;
    let out = json!({
        "p_star": reference.p_star,
        "x_star": reference.x_star,
        "nnz": nnz(&reference.x_star),
        "iterations": reference.iterations,
        "tol": reference.tol,
        "n": problem.n(),
        "d": problem.dim(),
    });
    ensure_parent(&args.out)?;
    let mut w = BufWriter::new(File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?);
    serde_json::to_writer_pretty(&mut w, &out)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Synth(args) => cmd_synth(args).map(|()| true),
        Command::Reference(args) => cmd_reference(args).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
