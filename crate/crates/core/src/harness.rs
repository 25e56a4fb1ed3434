//! Experiment driver: single solves, batch-size sweeps and spectral reports,
//! all with reproducible CSV output.

use std::borrow::Cow;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::linalg::{
    beta_b, exact_sigma_sq, spectral_norm_sq, PowerIterationOptions, SpectralEstimate,
};
use crate::objectives::{ObjectiveError, Reduction};
use crate::sampler::GENERATOR_NAME;
use crate::solvers::{compute_schedule, Averaging, Solver, SolverConfig, SolverError, SolverKind};
use crate::VERSION;

/// Certified accuracy of the reference optimum used for primal suboptimality.
pub const REFERENCE_GAP: f64 = 1e-7;

/// Serial SDCA epochs allowed when computing the reference optimum.
pub const REFERENCE_MAX_EPOCHS: usize = 100_000;

/// Largest `n` accepted by the dense eigendecomposition route.
pub const EXACT_SIGMA_MAX_N: usize = 4000;

/// Regularization used for the standard benchmark datasets.
pub const LAMBDA_PRESETS: [(&str, f64); 4] = [
    ("cov", 1e-5),
    ("rcv1", 1e-4),
    ("astro-ph", 5e-5),
    ("news20", 1.25e-4),
];

pub fn lambda_preset(name: &str) -> Option<f64> {
    LAMBDA_PRESETS
        .iter()
        .find(|(k, _)| *k == name)
        .map(|&(_, v)| v)
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Where `σ²` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSource {
    /// Seeded power iteration with the default inflation.
    Estimate,
    Override(f64),
    /// Dense eigendecomposition; only for `n ≤ EXACT_SIGMA_MAX_N`.
    Exact,
}

impl fmt::Display for SigmaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaSource::Estimate => f.write_str("power_iteration"),
            SigmaSource::Override(v) => write!(f, "override({v})"),
            SigmaSource::Exact => f.write_str("exact"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaInfo {
    pub sigma_sq: f64,
    pub source: SigmaSource,
    /// Power-iteration diagnostics, when that route was taken.
    pub estimate: Option<SpectralEstimate>,
}

pub fn resolve_sigma(
    ds: &Dataset,
    source: SigmaSource,
    seed: u64,
) -> Result<SigmaInfo, HarnessError> {
    let n = ds.n() as f64;
    match source {
        SigmaSource::Override(v) => {
            if !(v >= 1.0 / n - 1e-9 && v <= 1.0 + 1e-9) {
                return Err(HarnessError::Config(format!(
                    "sigma^2 override {v} outside [1/n, 1] = [{}, 1]",
                    1.0 / n
                )));
            }
            Ok(SigmaInfo {
                sigma_sq: v,
                source,
                estimate: None,
            })
        }
        SigmaSource::Exact => {
            if ds.n() > EXACT_SIGMA_MAX_N {
                return Err(HarnessError::Config(format!(
                    "exact sigma^2 limited to n <= {EXACT_SIGMA_MAX_N}, got n = {}",
                    ds.n()
                )));
            }
            Ok(SigmaInfo {
                sigma_sq: exact_sigma_sq(ds),
                source,
                estimate: None,
            })
        }
        SigmaSource::Estimate => {
            let opts = PowerIterationOptions {
                seed,
                ..Default::default()
            };
            let est =
                spectral_norm_sq(ds, &opts).map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(SigmaInfo {
                sigma_sq: est.sigma_sq,
                source,
                estimate: Some(est),
            })
        }
    }
}

/// What "reaching epsilon" means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Duality gap of the reported iterate.
    Gap,
    /// `P(w) − P*` against the serial-SDCA reference.
    Primal,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Gap => "gap",
            Target::Primal => "primal",
        })
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gap" => Ok(Target::Gap),
            "primal" => Ok(Target::Primal),
            _ => Err(format!("unknown target {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptimum {
    pub primal: f64,
    pub dual: f64,
    pub iterations: usize,
}

impl ReferenceOptimum {
    pub fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

/// Runs serial SDCA until the duality gap is at most [`REFERENCE_GAP`].
///
/// The dual value lower-bounds `P*`, so `primal` is within the gap of optimal.
pub fn reference_optimum(
    ds: &Dataset,
    lambda: f64,
    seed: u64,
) -> Result<ReferenceOptimum, HarnessError> {
    let n = ds.n();
    let max_iters = n.saturating_mul(REFERENCE_MAX_EPOCHS);
    let cfg = SolverConfig {
        seed,
        ..SolverConfig::new(SolverKind::SdcaSerial, lambda, 1, max_iters)
    };
    let mut solver = Solver::new(ds, cfg, None)?;
    while !solver.is_done() {
        for _ in 0..n {
            solver.step();
        }
        let ev = solver.evaluate(None, Reduction::Ordered)?;
        let dual = ev.dual.expect("serial SDCA has a dual");
        if ev.primal - dual <= REFERENCE_GAP {
            return Ok(ReferenceOptimum {
                primal: ev.primal,
                dual,
                iterations: solver.iterations(),
            });
        }
    }
    Err(HarnessError::Config(format!(
        "reference optimum did not reach gap {REFERENCE_GAP} within {REFERENCE_MAX_EPOCHS} epochs"
    )))
}

/// Everything needed for one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveSpec {
    pub config: SolverConfig,
    pub epsilon: f64,
    /// Ignored for Pegasos, which has no dual and always targets primal suboptimality.
    pub target: Target,
    pub stop_on_target: bool,
    pub sigma: SigmaSource,
    /// Fixed-order reductions and zeroed timings, for byte-stable traces.
    pub deterministic: bool,
    /// Derive the averaging window and `T` from `epsilon` via the convergence schedule.
    pub schedule_from_epsilon: bool,
}

impl SolveSpec {
    pub fn new(config: SolverConfig) -> Self {
        SolveSpec {
            config,
            epsilon: 1e-3,
            target: Target::Gap,
            stop_on_target: false,
            sigma: SigmaSource::Estimate,
            deterministic: false,
            schedule_from_epsilon: false,
        }
    }

    fn effective_target(&self) -> Target {
        if self.config.kind.is_dual() {
            self.target
        } else {
            Target::Primal
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(HarnessError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// One checkpoint of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    /// `iter · b / n`.
    pub epoch_equiv: f64,
    pub primal: f64,
    pub dual: Option<f64>,
    pub gap: Option<f64>,
    pub test_error: Option<f64>,
    /// `β^(t)` for aggressive SDCA, the fixed `β` for safe SDCA.
    pub beta_t: Option<f64>,
    pub elapsed_s: f64,
}

impl TraceRecord {
    pub const CSV_COLUMNS: &'static str =
        "iter,epoch_equiv,primal,dual,gap,test_error,beta_t,elapsed_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.iter,
            fmt_f64(self.epoch_equiv),
            fmt_f64(self.primal),
            fmt_opt(self.dual),
            fmt_opt(self.gap),
            fmt_opt(self.test_error),
            fmt_opt(self.beta_t),
            fmt_f64(self.elapsed_s),
        )
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// The configuration actually run, after any schedule adjustment.
    pub config: SolverConfig,
    pub n: usize,
    pub dim: usize,
    pub records: Vec<TraceRecord>,
    pub sigma: SigmaInfo,
    /// `β_b` from `σ²`, whether or not the solver uses it.
    pub beta_b: f64,
    /// The step constant the solver used.
    pub beta: f64,
    pub epsilon: f64,
    pub target: Target,
    pub stop_on_target: bool,
    pub reference: Option<ReferenceOptimum>,
    /// First checkpoint iteration at which the target held.
    pub reached_at: Option<usize>,
    pub rejected_steps: usize,
    pub checkpoint_every: usize,
}

impl SolveOutcome {
    pub fn reached(&self) -> bool {
        self.reached_at.is_some()
    }

    pub fn last(&self) -> &TraceRecord {
        self.records
            .last()
            .expect("a trace holds at least the t = 0 record")
    }

    pub fn header_lines(&self) -> Vec<String> {
        let c = &self.config;
        let mut h = vec![
            "mbsvm trace".to_string(),
            format!("version: {VERSION}"),
            format!("generator: {GENERATOR_NAME}"),
            format!("solver: {}", c.kind),
            format!("lambda: {}", fmt_f64(c.lambda)),
            format!("batch_size: {}", c.batch_size),
            format!("max_iters: {}", c.max_iters),
            format!("averaging: {}", c.averaging),
            format!("seed: {}", c.seed),
            format!("stream: {}", c.stream),
            format!("n: {}", self.n),
            format!("dim: {}", self.dim),
            format!("sigma_sq: {}", fmt_f64(self.sigma.sigma_sq)),
            format!("sigma_source: {}", self.sigma.source),
            format!("beta_b: {}", fmt_f64(self.beta_b)),
            format!("beta_used: {}", fmt_f64(self.beta)),
        ];
        if let Some(b) = c.beta_override {
            h.push(format!("beta_override: {}", fmt_f64(b)));
        }
        if c.kind == SolverKind::SdcaAggressive {
            h.push(format!("gamma: {}", fmt_f64(c.gamma)));
        }
        h.push(format!(
            "checkpoint_every: {} iterations (same cadence for every solver)",
            self.checkpoint_every
        ));
        h.push(format!(
            "target: {} <= {}",
            self.target,
            fmt_f64(self.epsilon)
        ));
        h.push(format!("stop_on_target: {}", self.stop_on_target));
        if let Some(r) = &self.reference {
            h.push(format!(
                "reference_primal: {} (serial sdca, gap {})",
                fmt_f64(r.primal),
                fmt_f64(r.gap())
            ));
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in self.header_lines() {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(&self.csv_body());
        out
    }

    /// Column line and data rows, without the `#` header.
    pub fn csv_body(&self) -> String {
        let mut out = String::new();
        out.push_str(TraceRecord::CSV_COLUMNS);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    /// Human-readable summary of the final checkpoint.
    pub fn summary(&self) -> String {
        let last = self.last();
        let mut s = format!(
            "{} b={} iters={} primal={}",
            self.config.kind,
            self.config.batch_size,
            last.iter,
            fmt_f64(last.primal)
        );
        if let (Some(d), Some(g)) = (last.dual, last.gap) {
            let _ = write!(s, " dual={} gap={}", fmt_f64(d), fmt_f64(g));
        }
        if let Some(r) = &self.reference {
            let _ = write!(s, " primal_subopt={}", fmt_f64(last.primal - r.primal));
        }
        if let Some(e) = last.test_error {
            let _ = write!(s, " test_error={}", fmt_f64(e));
        }
        match self.reached_at {
            Some(t) => {
                let _ = write!(s, " target reached at iter {t}");
            }
            None => s.push_str(" target not reached"),
        }
        s
    }
}

/// Runs one solver with checkpoints at `t = 0`, every `checkpoint_every`
/// iterations and at the final iteration.
pub fn run_solve(
    train: &Dataset,
    test: Option<&Dataset>,
    spec: &SolveSpec,
) -> Result<SolveOutcome, HarnessError> {
    spec.validate()?;
    let sigma = resolve_sigma(train, spec.sigma, spec.config.seed)?;
    let reference = if spec.effective_target() == Target::Primal
        && (spec.stop_on_target || spec.target == Target::Primal)
    {
        Some(reference_optimum(
            train,
            spec.config.lambda,
            spec.config.seed,
        )?)
    } else {
        None
    };
    run_solve_prepared(train, test, spec, sigma, reference)
}

fn run_solve_prepared(
    train: &Dataset,
    test: Option<&Dataset>,
    spec: &SolveSpec,
    sigma: SigmaInfo,
    reference: Option<ReferenceOptimum>,
) -> Result<SolveOutcome, HarnessError> {
    let mut cfg = spec.config.clone();
    let n = train.n();
    cfg.validate(n)?;
    let beta_b = beta_b(n, cfg.batch_size, sigma.sigma_sq)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    if spec.schedule_from_epsilon {
        let sched = compute_schedule(n, cfg.batch_size, cfg.lambda, spec.epsilon, beta_b)?;
        cfg.averaging = Averaging::Schedule {
            start: sched.averaging_start,
        };
        cfg.max_iters = sched.total;
    }
    let target = spec.effective_target();
    if target == Target::Primal && reference.is_none() && spec.stop_on_target {
        return Err(HarnessError::Config(
            "primal target needs a reference optimum".into(),
        ));
    }

    // The weight vector must cover every feature the test set uses.
    let train: Cow<'_, Dataset> = match test {
        Some(t) if t.dim() > train.dim() => Cow::Owned(train.with_dim(t.dim())),
        _ => Cow::Borrowed(train),
    };
    let reduction = if spec.deterministic {
        Reduction::Ordered
    } else {
        Reduction::Parallel
    };
    let interval = cfg.checkpoint_interval(n);
    let mut solver = Solver::new(&train, cfg.clone(), Some(sigma.sigma_sq))?;
    let beta = solver.beta();
    let start = Instant::now();

    let mut records = Vec::new();
    let mut reached_at = None;
    let mut record = |solver: &Solver<'_>| -> Result<bool, HarnessError> {
        let ev = solver.evaluate(test, reduction)?;
        let t = solver.iterations();
        let gap = ev.dual.map(|d| ev.primal - d);
        let beta_t = match cfg.kind {
            SolverKind::SdcaAggressive => solver.state().beta_t,
            SolverKind::SdcaSafe => Some(beta),
            _ => None,
        };
        records.push(TraceRecord {
            iter: t,
            epoch_equiv: t as f64 * cfg.batch_size as f64 / n as f64,
            primal: ev.primal,
            dual: ev.dual,
            gap,
            test_error: ev.test_error,
            beta_t,
            elapsed_s: if spec.deterministic {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            },
        });
        let hit = match target {
            Target::Gap => gap.is_some_and(|g| g <= spec.epsilon),
            Target::Primal => reference.is_some_and(|r| ev.primal - r.primal <= spec.epsilon),
        };
        if hit && reached_at.is_none() {
            reached_at = Some(t);
        }
        Ok(hit)
    };

    let mut hit = record(&solver)?;
    while !(hit && spec.stop_on_target) && !solver.is_done() {
        solver.step();
        let t = solver.iterations();
        if t % interval == 0 || solver.is_done() {
            solver.checkpoint();
            hit = record(&solver)?;
        }
    }

    Ok(SolveOutcome {
        config: cfg,
        n,
        dim: train.dim(),
        records,
        sigma,
        beta_b,
        beta,
        epsilon: spec.epsilon,
        target,
        stop_on_target: spec.stop_on_target,
        reference,
        reached_at,
        rejected_steps: solver.state().rejected_steps,
        checkpoint_every: interval,
    })
}

/// A grid of solvers and batch sizes sharing one dataset, `σ²` and reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kinds: Vec<SolverKind>,
    pub b_values: Vec<usize>,
    /// Template for every cell; `kind`, `batch_size` and `stream` are overwritten.
    pub base: SolveSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: SolverKind,
    pub b: usize,
    pub beta_b: f64,
    pub iterations: Option<usize>,
    pub final_iter: usize,
    pub final_primal: f64,
    pub final_gap: Option<f64>,
    pub rejected_steps: usize,
}

impl SweepRow {
    pub const CSV_COLUMNS: &'static str =
        "solver,b,beta_b,beta_b_over_b,iterations_to_target,epochs_to_target,final_iter,final_primal,final_gap,rejected_steps";

    pub fn beta_b_over_b(&self) -> f64 {
        self.beta_b / self.b as f64
    }

    fn csv_row(&self, n: usize) -> String {
        let (iters, epochs) = match self.iterations {
            Some(t) => (t.to_string(), fmt_f64(t as f64 * self.b as f64 / n as f64)),
            None => ("not_reached".to_string(), "not_reached".to_string()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.kind,
            self.b,
            fmt_f64(self.beta_b),
            fmt_f64(self.beta_b_over_b()),
            iters,
            epochs,
            self.final_iter,
            fmt_f64(self.final_primal),
            fmt_opt(self.final_gap),
            self.rejected_steps,
        )
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub spec: SweepSpec,
    pub n: usize,
    pub dim: usize,
    pub sigma: SigmaInfo,
    pub reference: Option<ReferenceOptimum>,
    pub rows: Vec<SweepRow>,
    /// Full traces, in the same order as `rows`.
    pub cells: Vec<SolveOutcome>,
}

impl SweepOutcome {
    pub fn header_lines(&self) -> Vec<String> {
        let c = &self.spec.base.config;
        let mut h = vec![
            "mbsvm sweep".to_string(),
            format!("version: {VERSION}"),
            format!("generator: {GENERATOR_NAME}"),
            format!(
                "solvers: {}",
                self.spec
                    .kinds
                    .iter()
                    .map(|k| k.name())
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
            format!(
                "b_values: {}",
                self.spec
                    .b_values
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
            format!("lambda: {}", fmt_f64(c.lambda)),
            format!("max_iters: {}", c.max_iters),
            format!("averaging: {}", c.averaging),
            format!("seed: {} (stream = b, shared across solvers)", c.seed),
            format!("n: {}", self.n),
            format!("dim: {}", self.dim),
            format!("sigma_sq: {}", fmt_f64(self.sigma.sigma_sq)),
            format!("sigma_source: {}", self.sigma.source),
        ];
        if let Some(b) = c.beta_override {
            h.push(format!("beta_override: {}", fmt_f64(b)));
        }
        h.push(format!("gamma: {}", fmt_f64(c.gamma)));
        h.push(match c.checkpoint_every {
            Some(k) => format!("checkpoint_every: {k} iterations (same cadence for every solver)"),
            None => "checkpoint_every: ceil(n/b) iterations (same cadence for every solver)".into(),
        });
        h.push(format!(
            "target: {} <= {}",
            self.spec.base.target,
            fmt_f64(self.spec.base.epsilon)
        ));
        if let Some(r) = &self.reference {
            h.push(format!(
                "reference_primal: {} (serial sdca, gap {})",
                fmt_f64(r.primal),
                fmt_f64(r.gap())
            ));
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in self.header_lines() {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(&self.csv_body());
        out
    }

    pub fn csv_body(&self) -> String {
        let mut out = String::new();
        out.push_str(SweepRow::CSV_COLUMNS);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_row(self.n));
            out.push('\n');
        }
        out
    }
}

/// Runs every `(solver, b)` cell until its target or `max_iters`.
///
/// Cells run in parallel and are reported in `kinds × b_values` order. All
/// solvers at the same `b` draw the same batches. Pegasos cells, and every
/// cell under [`Target::Primal`], measure suboptimality against one shared
/// reference optimum.
pub fn run_sweep(train: &Dataset, spec: &SweepSpec) -> Result<SweepOutcome, HarnessError> {
    if spec.b_values.is_empty() {
        return Err(HarnessError::Config(
            "sweep needs at least one batch size".into(),
        ));
    }
    if spec.kinds.is_empty() {
        return Err(HarnessError::Config(
            "sweep needs at least one solver".into(),
        ));
    }
    spec.base.validate()?;
    let n = train.n();
    if let Some(&b) = spec.b_values.iter().find(|&&b| b == 0 || b > n) {
        return Err(HarnessError::Config(format!(
            "batch size {b} not in [1, {n}]"
        )));
    }
    if spec.kinds.contains(&SolverKind::SdcaSerial) && spec.b_values.iter().any(|&b| b != 1) {
        return Err(HarnessError::Config(
            "sdca_serial only runs at b = 1; use sdca_naive for larger batches".into(),
        ));
    }

    let base = &spec.base;
    let sigma = resolve_sigma(train, base.sigma, base.config.seed)?;
    let needs_reference = base.target == Target::Primal || spec.kinds.iter().any(|k| !k.is_dual());
    let reference = if needs_reference {
        Some(reference_optimum(
            train,
            base.config.lambda,
            base.config.seed,
        )?)
    } else {
        None
    };

    let cells: Vec<(SolverKind, usize)> = spec
        .kinds
        .iter()
        .flat_map(|&k| spec.b_values.iter().map(move |&b| (k, b)))
        .collect();
    let outcomes = cells
        .par_iter()
        .map(|&(kind, b)| {
            let mut cell = base.clone();
            cell.config.kind = kind;
            cell.config.batch_size = b;
            cell.config.stream = b as u64;
            cell.stop_on_target = true;
            run_solve_prepared(train, None, &cell, sigma, reference)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rows = outcomes
        .iter()
        .map(|o| {
            let last = o.last();
            SweepRow {
                kind: o.config.kind,
                b: o.config.batch_size,
                beta_b: o.beta_b,
                iterations: o.reached_at,
                final_iter: last.iter,
                final_primal: last.primal,
                final_gap: last.gap,
                rejected_steps: o.rejected_steps,
            }
        })
        .collect();

    Ok(SweepOutcome {
        spec: spec.clone(),
        n,
        dim: train.dim(),
        sigma,
        reference,
        rows,
        cells: outcomes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaReport {
    pub n: usize,
    pub dim: usize,
    pub nnz: usize,
    pub estimate: SpectralEstimate,
    pub exact: Option<f64>,
    /// `(b, β_b)` from the power-iteration estimate.
    pub betas: Vec<(usize, f64)>,
}

impl fmt::Display for SigmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n: {}", self.n)?;
        writeln!(f, "dim: {}", self.dim)?;
        writeln!(f, "nnz: {}", self.nnz)?;
        writeln!(
            f,
            "sigma_sq: {} (power iteration, {} iterations, converged: {}, inflation {})",
            fmt_f64(self.estimate.sigma_sq),
            self.estimate.iterations_used,
            self.estimate.converged,
            self.estimate.inflation
        )?;
        if let Some(e) = self.exact {
            writeln!(f, "sigma_sq_exact: {}", fmt_f64(e))?;
        }
        writeln!(f, "b,beta_b,beta_b_over_b")?;
        for &(b, beta) in &self.betas {
            writeln!(f, "{},{},{}", b, fmt_f64(beta), fmt_f64(beta / b as f64))?;
        }
        Ok(())
    }
}

/// Powers of two up to `n`, plus `n` itself.
pub fn default_b_values(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |&b| b.checked_mul(2))
        .take_while(|&b| b <= n)
        .collect();
    if out.last() != Some(&n) {
        out.push(n);
    }
    out
}

pub fn estimate_sigma(
    ds: &Dataset,
    b_values: &[usize],
    opts: &PowerIterationOptions,
    exact: bool,
) -> Result<SigmaReport, HarnessError> {
    let n = ds.n();
    let estimate = spectral_norm_sq(ds, opts).map_err(|e| HarnessError::Config(e.to_string()))?;
    let exact = if exact {
        Some(resolve_sigma(ds, SigmaSource::Exact, opts.seed)?.sigma_sq)
    } else {
        None
    };
    let b_values = if b_values.is_empty() {
        default_b_values(n)
    } else {
        b_values.to_vec()
    };
    let betas = b_values
        .into_iter()
        .map(|b| {
            beta_b(n, b, estimate.sigma_sq)
                .map(|beta| (b, beta))
                .map_err(|e| HarnessError::Config(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    Ok(SigmaReport {
        n,
        dim: ds.dim(),
        nnz: ds.nnz(),
        estimate,
        exact,
        betas,
    })
}
