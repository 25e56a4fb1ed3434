//! Mini-batch Pegasos and mini-batch SDCA (naive, safe, aggressive, serial).
//!
//! The step functions are free functions over [`SolverState`]; [`Solver`]
//! wires them to a sampler, a step-size policy and an averaging mode.

mod averaging;
mod pegasos;
mod schedule;
mod sdca;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::linalg::{beta_b, sparse_dot, spectral_norm_sq, DenseVector, PowerIterationOptions};
use crate::objectives::{
    dual_objective, primal_objective_with, test_error, DualVector, ObjectiveError, Reduction,
};
use crate::sampler::{seeded_rng, MiniBatch, Sampler};

pub use averaging::{Averaging, DECAY};
pub use pegasos::pegasos_step;
pub use schedule::{compute_schedule, Schedule};
pub use sdca::{sdca_aggressive_step, sdca_coordinate_delta, sdca_naive_step, sdca_safe_step};

use averaging::Averager;

/// Batches at least this large compute their margins on the rayon pool.
const PARALLEL_MARGIN_THRESHOLD: usize = 256;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Pegasos,
    SdcaNaive,
    SdcaSafe,
    SdcaAggressive,
    SdcaSerial,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Pegasos,
        SolverKind::SdcaNaive,
        SolverKind::SdcaSafe,
        SolverKind::SdcaAggressive,
        SolverKind::SdcaSerial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Pegasos => "pegasos",
            SolverKind::SdcaNaive => "sdca_naive",
            SolverKind::SdcaSafe => "sdca_safe",
            SolverKind::SdcaAggressive => "sdca_aggressive",
            SolverKind::SdcaSerial => "sdca_serial",
        }
    }

    pub fn is_dual(self) -> bool {
        self != SolverKind::Pegasos
    }

    /// Whether the step size depends on `β_b` (and therefore on `σ²`).
    pub fn uses_beta(self) -> bool {
        matches!(self, SolverKind::SdcaSafe | SolverKind::SdcaAggressive)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown solver {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub lambda: f64,
    pub batch_size: usize,
    pub max_iters: usize,
    /// Replaces `β_b` for the safe and aggressive variants.
    pub beta_override: Option<f64>,
    pub gamma: f64,
    pub averaging: Averaging,
    pub seed: u64,
    /// Stream index for runs sharing one master seed.
    pub stream: u64,
    /// Defaults to `⌈n/b⌉` (about one epoch).
    pub checkpoint_every: Option<usize>,
}

impl SolverConfig {
    pub fn new(kind: SolverKind, lambda: f64, batch_size: usize, max_iters: usize) -> Self {
        SolverConfig {
            kind,
            lambda,
            batch_size,
            max_iters,
            beta_override: None,
            gamma: 0.95,
            averaging: Averaging::Final,
            seed: 0,
            stream: 0,
            checkpoint_every: None,
        }
    }

    pub fn checkpoint_interval(&self, n: usize) -> usize {
        self.checkpoint_every
            .unwrap_or_else(|| n.div_ceil(self.batch_size.max(1)))
            .max(1)
    }

    pub fn validate(&self, n: usize) -> Result<(), SolverError> {
        let fail = |m: String| Err(SolverError::Config(m));
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.batch_size == 0 || self.batch_size > n {
            return fail(format!("batch size {} not in [1, {n}]", self.batch_size));
        }
        if self.kind == SolverKind::SdcaSerial && self.batch_size != 1 {
            return fail("sdca_serial requires batch size 1".into());
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if let Some(b) = self.beta_override {
            if !(b > 0.0 && b.is_finite()) {
                return fail(format!("beta override must be positive, got {b}"));
            }
            if self.kind == SolverKind::SdcaAggressive && b < 1.0 {
                return fail(format!("aggressive SDCA needs beta >= 1, got {b}"));
            }
        }
        if self.checkpoint_every == Some(0) {
            return fail("checkpoint interval must be positive".into());
        }
        Ok(())
    }
}

/// Iterates and bookkeeping shared by all solvers.
///
/// Dual solvers keep `w = w(α)` up to round-off after every step.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub w: DenseVector,
    pub alpha: Option<DualVector>,
    /// Current step denominator of aggressive SDCA.
    pub beta_t: Option<f64>,
    /// Completed iterations.
    pub t: usize,
    pub rejected_steps: usize,
    margins: Vec<f64>,
    deltas: Vec<f64>,
    // all zeros between steps
    scratch: Vec<f64>,
}

impl SolverState {
    pub fn new(dim: usize, n_dual: Option<usize>) -> Self {
        SolverState {
            w: DenseVector::zeros(dim),
            alpha: n_dual.map(DualVector::zeros),
            beta_t: None,
            t: 0,
            rejected_steps: 0,
            margins: Vec::new(),
            deltas: Vec::new(),
            scratch: vec![0.0; dim],
        }
    }
}

/// `y_i⟨w, x_i⟩` for each batch member, in batch order.
pub(crate) fn batch_margins(ds: &Dataset, w: &[f64], batch: &MiniBatch, out: &mut Vec<f64>) {
    let margin = |&i: &usize| {
        let ex = ds.example(i);
        ex.label() * sparse_dot(ex, w)
    };
    out.clear();
    if batch.len() >= PARALLEL_MARGIN_THRESHOLD {
        batch.indices().par_iter().map(margin).collect_into_vec(out);
    } else {
        out.extend(batch.indices().iter().map(margin));
    }
}

/// Objective values at the reported (possibly averaged) iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub primal: f64,
    /// Absent for Pegasos, which has no dual iterate.
    pub dual: Option<f64>,
    pub test_error: Option<f64>,
}

impl Evaluation {
    pub fn gap(&self) -> Option<f64> {
        self.dual.map(|d| self.primal - d)
    }
}

/// A configured run over one dataset.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    ds: &'a Dataset,
    cfg: SolverConfig,
    beta: f64,
    state: SolverState,
    sampler: Sampler,
    averager: Averager,
}

impl<'a> Solver<'a> {
    /// `sigma_sq` feeds `β_b` for the safe and aggressive variants; when it is
    /// `None` and no override is set, it is estimated by power iteration.
    pub fn new(
        ds: &'a Dataset,
        cfg: SolverConfig,
        sigma_sq: Option<f64>,
    ) -> Result<Self, SolverError> {
        let n = ds.n();
        cfg.validate(n)?;
        let beta = match (cfg.kind.uses_beta(), cfg.beta_override) {
            (false, _) => 1.0,
            (true, Some(b)) => b,
            (true, None) => {
                let sigma_sq = match sigma_sq {
                    Some(s) => s,
                    None => {
                        let opts = PowerIterationOptions {
                            seed: cfg.seed,
                            ..Default::default()
                        };
                        spectral_norm_sq(ds, &opts)
                            .map_err(|e| SolverError::Config(e.to_string()))?
                            .sigma_sq
                    }
                };
                beta_b(n, cfg.batch_size, sigma_sq)
                    .map_err(|e| SolverError::Config(e.to_string()))?
            }
        };
        let n_dual = cfg.kind.is_dual().then_some(n);
        let mut state = SolverState::new(ds.dim(), n_dual);
        if cfg.kind == SolverKind::SdcaAggressive {
            state.beta_t = Some(beta);
        }
        let averager = Averager::new(cfg.averaging, cfg.max_iters, ds.dim(), n_dual);
        let sampler = Sampler::new(n, seeded_rng(cfg.seed, cfg.stream));
        Ok(Solver {
            ds,
            cfg,
            beta,
            state,
            sampler,
            averager,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn dataset(&self) -> &Dataset {
        self.ds
    }

    /// The fixed step denominator (`β_b` or the override); 1 for Pegasos and naive/serial SDCA.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn iterations(&self) -> usize {
        self.state.t
    }

    pub fn is_done(&self) -> bool {
        self.state.t >= self.cfg.max_iters
    }

    /// Draws a batch and takes one step.
    pub fn step(&mut self) {
        let batch = self
            .sampler
            .draw(self.cfg.batch_size)
            .expect("batch size validated at construction");
        self.step_with(&batch);
    }

    /// Takes one step on a caller-chosen batch.
    pub fn step_with(&mut self, batch: &MiniBatch) {
        self.averager.before_step(&self.state);
        let lambda = self.cfg.lambda;
        match self.cfg.kind {
            SolverKind::Pegasos => pegasos_step(&mut self.state, self.ds, lambda, batch),
            SolverKind::SdcaNaive | SolverKind::SdcaSerial => {
                sdca_naive_step(&mut self.state, self.ds, lambda, batch)
            }
            SolverKind::SdcaSafe => {
                sdca_safe_step(&mut self.state, self.ds, lambda, self.beta, batch)
            }
            SolverKind::SdcaAggressive => sdca_aggressive_step(
                &mut self.state,
                self.ds,
                lambda,
                self.beta,
                self.cfg.gamma,
                batch,
            ),
        }
    }

    /// Advances the decaying average; call once per checkpoint.
    pub fn checkpoint(&mut self) {
        self.averager.on_checkpoint(&self.state);
    }

    /// The reported iterate `(w, α)` under the configured averaging mode.
    pub fn output(&self) -> (DenseVector, Option<DualVector>) {
        self.averager
            .averaged()
            .unwrap_or_else(|| (self.state.w.clone(), self.state.alpha.clone()))
    }

    pub fn evaluate(
        &self,
        test: Option<&Dataset>,
        reduction: Reduction,
    ) -> Result<Evaluation, SolverError> {
        let (w, alpha) = self.output();
        let primal = primal_objective_with(self.ds, &w, self.cfg.lambda, reduction)?;
        let dual = alpha
            .as_ref()
            .map(|a| dual_objective(self.ds, a, &w, self.cfg.lambda))
            .transpose()?;
        let test_error = test.map(|t| test_error(t, &w)).transpose()?;
        Ok(Evaluation {
            primal,
            dual,
            test_error,
        })
    }
}
