//! `mbsvm`: train linear SVMs with mini-batch Pegasos/SDCA and write CSV traces.
//!
//! Exit codes: 0 success, 1 usage/config/I-O error, 2 target not reached.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mbsvm::dataset::{read_libsvm_file, rescale};
use mbsvm::harness::{
    estimate_sigma, lambda_preset, run_solve, run_sweep, SigmaSource, SolveSpec, SweepSpec, Target,
    LAMBDA_PRESETS,
};
use mbsvm::synth::{generate_synthetic, SyntheticKind};
use mbsvm::{normalize, Averaging, Dataset, PowerIterationOptions, SolverConfig, SolverKind};

#[derive(Parser)]
#[command(
    name = "mbsvm",
    version,
    about = "Mini-batch primal and dual solvers for linear SVMs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and write its checkpoint trace.
    Solve(SolveArgs),
    /// Iterations-to-target for every (solver, batch size) pair.
    Sweep(SweepArgs),
    /// Estimate the spectral norm and print the β_b table.
    Sigma(SigmaArgs),
    /// Write a synthetic LIBSVM dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Training data in LIBSVM format.
    #[arg(long)]
    train: PathBuf,
    /// Skip rescaling to max ‖x_i‖ = 1.
    #[arg(long)]
    no_normalize: bool,
}

#[derive(Args)]
struct RunArgs {
    /// λ as a number or a preset name (cov, rcv1, astro-ph, news20).
    #[arg(long, value_parser = parse_lambda)]
    lambda: f64,
    /// Iteration budget T.
    #[arg(long, default_value_t = 10_000)]
    iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Replace β_b for the safe and aggressive solvers.
    #[arg(long)]
    beta_override: Option<f64>,
    /// Adaptation rate of aggressive SDCA.
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iterations between checkpoints [default: ceil(n/b)].
    #[arg(long)]
    checkpoint_every: Option<usize>,
    /// Use this σ² instead of estimating it.
    #[arg(long, conflicts_with = "exact_sigma")]
    sigma_sq: Option<f64>,
    /// Compute σ² from a dense eigendecomposition (small n only).
    #[arg(long)]
    exact_sigma: bool,
    /// Fixed-order reductions and zero timings: byte-identical reruns.
    #[arg(long)]
    deterministic_reduction: bool,
    /// Output CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Held-out data for the test_error column.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value = "sdca_safe")]
    solver: SolverKind,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// tail, decaying, final or schedule (window and T derived from --epsilon).
    #[arg(long, default_value = "final")]
    averaging: Averaging,
    /// gap or primal (primal suboptimality; always used by pegasos).
    #[arg(long, default_value = "gap")]
    target: Target,
    /// Stop at the first checkpoint meeting the target; exit 2 if none does.
    #[arg(long)]
    stop_on_target: bool,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "pegasos,sdca_naive,sdca_safe,sdca_aggressive"
    )]
    solver: Vec<SolverKind>,
    /// Batch sizes [default: powers of two up to n].
    #[arg(long, value_delimiter = ',')]
    batch_list: Vec<usize>,
    #[arg(long, default_value = "decaying")]
    averaging: Averaging,
    #[arg(long, default_value = "primal")]
    target: Target,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SigmaArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',')]
    batch_list: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also report the exact value (small n only).
    #[arg(long)]
    exact_sigma: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// orthogonal, duplicated or gaussian.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    /// Feature dimension [default: n].
    #[arg(long)]
    dim: Option<usize>,
    /// Target σ² for gaussian data.
    #[arg(long, default_value_t = 0.1)]
    sigma_target: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_lambda(s: &str) -> Result<f64, String> {
    if let Some(v) = lambda_preset(s) {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("lambda must be positive, got {v}")),
        Err(_) => {
            let names: Vec<&str> = LAMBDA_PRESETS.iter().map(|p| p.0).collect();
            Err(format!("expected a number or one of {}", names.join(", ")))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Sigma(a) => sigma(a),
        Command::Synth(a) => synth(a),
    }
}

fn load_train(data: &DataArgs) -> Result<Dataset> {
    let ds = read_libsvm_file(&data.train)
        .with_context(|| format!("reading {}", data.train.display()))?;
    if data.no_normalize {
        Ok(ds)
    } else {
        normalize(&ds).with_context(|| format!("normalizing {}", data.train.display()))
    }
}

fn sigma_source(run: &RunArgs) -> SigmaSource {
    match (run.sigma_sq, run.exact_sigma) {
        (Some(v), _) => SigmaSource::Override(v),
        (None, true) => SigmaSource::Exact,
        (None, false) => SigmaSource::Estimate,
    }
}

fn base_spec(
    kind: SolverKind,
    batch: usize,
    averaging: Averaging,
    target: Target,
    run: &RunArgs,
) -> SolveSpec {
    let config = SolverConfig {
        beta_override: run.beta_override,
        gamma: run.gamma,
        averaging,
        seed: run.seed,
        checkpoint_every: run.checkpoint_every,
        ..SolverConfig::new(kind, run.lambda, batch, run.iters)
    };
    SolveSpec {
        epsilon: run.epsilon,
        target,
        sigma: sigma_source(run),
        deterministic: run.deterministic_reduction,
        schedule_from_epsilon: matches!(averaging, Averaging::Schedule { .. }),
        ..SolveSpec::new(config)
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

fn data_header(data: &DataArgs, test: Option<&Path>, ds: &Dataset) -> String {
    let mut h = format!("# train: {}\n", data.train.display());
    if let Some(t) = test {
        h.push_str(&format!("# test: {}\n", t.display()));
    }
    h.push_str(&format!(
        "# normalized: {} (scale factor {})\n",
        !data.no_normalize,
        ds.scale_factor()
    ));
    h
}

fn solve(a: SolveArgs) -> Result<ExitCode> {
    let train = load_train(&a.data)?;
    let test = match &a.test {
        Some(path) => {
            let t =
                read_libsvm_file(path).with_context(|| format!("reading {}", path.display()))?;
            // apply the training set's scaling so train and test stay comparable
            Some(rescale(&t, train.scale_factor())?)
        }
        None => None,
    };
    let mut spec = base_spec(a.solver, a.batch, a.averaging, a.target, &a.run);
    spec.stop_on_target = a.stop_on_target;
    let outcome = run_solve(&train, test.as_ref(), &spec)?;

    let mut text = data_header(&a.data, a.test.as_deref(), &train);
    text.push_str(&outcome.to_csv());
    write_output(a.run.out.as_deref(), &text)?;
    eprintln!("{}", outcome.summary());

    if a.stop_on_target && !outcome.reached() {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(a: SweepArgs) -> Result<ExitCode> {
    let train = load_train(&a.data)?;
    let b_values = if a.batch_list.is_empty() {
        mbsvm::harness::default_b_values(train.n())
    } else {
        a.batch_list.clone()
    };
    if a.solver.is_empty() {
        bail!("--solver needs at least one solver name");
    }
    let base = base_spec(a.solver[0], 1, a.averaging, a.target, &a.run);
    let spec = SweepSpec {
        kinds: a.solver.clone(),
        b_values,
        base,
    };
    let outcome = run_sweep(&train, &spec)?;

    let mut text = data_header(&a.data, None, &train);
    text.push_str(&outcome.to_csv());
    write_output(a.run.out.as_deref(), &text)?;
    for row in &outcome.rows {
        let iters = row
            .iterations
            .map_or_else(|| "not reached".to_string(), |t| t.to_string());
        eprintln!(
            "{} b={} beta_b/b={:.4} iterations={}",
            row.kind,
            row.b,
            row.beta_b_over_b(),
            iters
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn sigma(a: SigmaArgs) -> Result<ExitCode> {
    let ds = load_train(&a.data)?;
    let opts = PowerIterationOptions {
        seed: a.seed,
        ..Default::default()
    };
    let report = estimate_sigma(&ds, &a.batch_list, &opts, a.exact_sigma)?;
    print!("{report}");
    Ok(ExitCode::SUCCESS)
}

fn synth(a: SynthArgs) -> Result<ExitCode> {
    let kind = match a.kind.as_str() {
        "gaussian" => SyntheticKind::Gaussian {
            sigma_target: a.sigma_target,
        },
        other => other.parse::<SyntheticKind>().map_err(anyhow::Error::msg)?,
    };
    let dim = a.dim.unwrap_or(a.n);
    let ds = generate_synthetic(kind, a.n, dim, a.seed)?;
    write_output(a.out.as_deref(), &ds.to_libsvm_string())?;
    Ok(ExitCode::SUCCESS)
}
