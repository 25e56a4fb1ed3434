//! Primal and dual SVM objectives, the duality gap, and mini-batch losses.
//!
//! With `w(α) = (1/(λn)) Σ α_i y_i x_i` maintained alongside `α`, the dual
//! `D(α) = −αᵀQα/(2λn²) + (1/n)Σα_i` collapses to
//! `(1/n)Σα_i − (λ/2)‖w(α)‖²`, which costs `O(d)` instead of `O(n²)`.

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::linalg::{sparse_axpy, sparse_dot, DenseVector};
use crate::sampler::MiniBatch;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("dual infeasible: alpha[{index}] = {value} outside [0, 1]")]
    Infeasible { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// How per-example sums are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Serial, ascending example order: bit-stable across thread counts.
    #[default]
    Ordered,
    /// Rayon parallel sum; association order may vary between runs.
    Parallel,
}

/// Dual variables with a cached `Σ α_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    alpha: Vec<f64>,
    l1_sum: f64,
}

impl DualVector {
    pub fn zeros(n: usize) -> Self {
        DualVector {
            alpha: vec![0.0; n],
            l1_sum: 0.0,
        }
    }

    pub fn from_vec(alpha: Vec<f64>) -> Self {
        let l1_sum = alpha.iter().sum();
        DualVector { alpha, l1_sum }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.alpha[i]
    }

    pub fn l1_sum(&self) -> f64 {
        self.l1_sum
    }

    /// `α_i += delta`.
    pub fn add(&mut self, i: usize, delta: f64) {
        self.alpha[i] += delta;
        self.l1_sum += delta;
    }

    /// Recomputes the cached sum from scratch.
    pub fn resync(&mut self) {
        self.l1_sum = self.alpha.iter().sum();
    }

    pub fn check_feasible(&self) -> Result<(), ObjectiveError> {
        match self
            .alpha
            .iter()
            .enumerate()
            .find(|(_, &a)| !(0.0..=1.0).contains(&a))
        {
            Some((index, &value)) => Err(ObjectiveError::Infeasible { index, value }),
            None => Ok(()),
        }
    }
}

/// Primal value, dual value, and their difference at one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub test_error: Option<f64>,
}

#[inline]
pub fn hinge(z: f64) -> f64 {
    (1.0 - z).max(0.0)
}

fn check_dim(ds: &Dataset, w: &[f64]) -> Result<(), ObjectiveError> {
    if w.len() != ds.dim() {
        return Err(ObjectiveError::Dimension {
            expected: ds.dim(),
            got: w.len(),
        });
    }
    Ok(())
}

fn example_sum<F>(ds: &Dataset, reduction: Reduction, f: F) -> f64
where
    F: Fn(&crate::dataset::SparseExample) -> f64 + Sync + Send,
{
    match reduction {
        Reduction::Ordered => ds.examples().iter().map(f).sum(),
        Reduction::Parallel => ds.examples().par_iter().map(f).sum(),
    }
}

/// Average hinge loss over the whole dataset.
pub fn average_hinge(ds: &Dataset, w: &[f64], reduction: Reduction) -> Result<f64, ObjectiveError> {
    check_dim(ds, w)?;
    let total = example_sum(ds, reduction, |ex| hinge(ex.label() * sparse_dot(ex, w)));
    Ok(total / ds.n() as f64)
}

/// `P(w) = (1/n) Σ hinge(y_i⟨w, x_i⟩) + (λ/2)‖w‖²`.
pub fn primal_objective(ds: &Dataset, w: &[f64], lambda: f64) -> Result<f64, ObjectiveError> {
    primal_objective_with(ds, w, lambda, Reduction::Ordered)
}

pub fn primal_objective_with(
    ds: &Dataset,
    w: &[f64],
    lambda: f64,
    reduction: Reduction,
) -> Result<f64, ObjectiveError> {
    let loss = average_hinge(ds, w, reduction)?;
    let norm_sq: f64 = w.iter().map(|v| v * v).sum();
    Ok(loss + 0.5 * lambda * norm_sq)
}

/// `D(α)` evaluated through the maintained `w(α)`.
pub fn dual_objective(
    ds: &Dataset,
    alpha: &DualVector,
    w_of_alpha: &[f64],
    lambda: f64,
) -> Result<f64, ObjectiveError> {
    check_dim(ds, w_of_alpha)?;
    alpha.check_feasible()?;
    Ok(dual_value(ds.n(), alpha.l1_sum(), w_of_alpha, lambda))
}

/// The maintained-form dual without feasibility checks.
pub fn dual_value(n: usize, l1_sum: f64, w_of_alpha: &[f64], lambda: f64) -> f64 {
    let norm_sq: f64 = w_of_alpha.iter().map(|v| v * v).sum();
    l1_sum / n as f64 - 0.5 * lambda * norm_sq
}

/// Fraction of misclassified examples; a zero decision value counts as an error.
pub fn test_error(ds: &Dataset, w: &[f64]) -> Result<f64, ObjectiveError> {
    if w.len() < ds.dim() {
        return Err(ObjectiveError::Dimension {
            expected: ds.dim(),
            got: w.len(),
        });
    }
    let wrong = ds
        .examples()
        .iter()
        .filter(|ex| ex.label() * sparse_dot(ex, w) <= 0.0)
        .count();
    Ok(wrong as f64 / ds.n() as f64)
}

/// Primal, dual and gap at the same `w(α)`, plus test error when a test set is given.
pub fn duality_gap(
    ds: &Dataset,
    alpha: &DualVector,
    w_of_alpha: &[f64],
    lambda: f64,
    test: Option<&Dataset>,
) -> Result<GapReport, ObjectiveError> {
    duality_gap_with(ds, alpha, w_of_alpha, lambda, test, Reduction::Ordered)
}

pub fn duality_gap_with(
    ds: &Dataset,
    alpha: &DualVector,
    w_of_alpha: &[f64],
    lambda: f64,
    test: Option<&Dataset>,
    reduction: Reduction,
) -> Result<GapReport, ObjectiveError> {
    let primal = primal_objective_with(ds, w_of_alpha, lambda, reduction)?;
    let dual = dual_objective(ds, alpha, w_of_alpha, lambda)?;
    let test_error = test.map(|t| test_error(t, w_of_alpha)).transpose()?;
    Ok(GapReport {
        primal,
        dual,
        gap: primal - dual,
        test_error,
    })
}

/// `L̂_A(w) = (1/b) Σ_{i∈A} hinge(y_i⟨w, x_i⟩)`.
pub fn minibatch_loss(ds: &Dataset, batch: &MiniBatch, w: &[f64]) -> Result<f64, ObjectiveError> {
    check_dim(ds, w)?;
    let total: f64 = batch
        .indices()
        .iter()
        .map(|&i| {
            let ex = ds.example(i);
            hinge(ex.label() * sparse_dot(ex, w))
        })
        .sum();
    Ok(total / batch.len() as f64)
}

/// Subgradient `∇L̂_A(w) = −(1/b) Σ_{i∈A} χ_i(w) y_i x_i`, with
/// `χ_i = 1` iff `y_i⟨w, x_i⟩ < 1`.
pub fn minibatch_subgradient(
    ds: &Dataset,
    batch: &MiniBatch,
    w: &[f64],
) -> Result<DenseVector, ObjectiveError> {
    check_dim(ds, w)?;
    let mut g = DenseVector::zeros(ds.dim());
    let scale = -1.0 / batch.len() as f64;
    for &i in batch.indices() {
        let ex = ds.example(i);
        if ex.label() * sparse_dot(ex, w) < 1.0 {
            sparse_axpy(scale * ex.label(), ex, &mut g);
        }
    }
    Ok(g)
}

/// `w(α) = (1/(λn)) Σ α_i y_i x_i`, recomputed from scratch.
pub fn primal_from_dual(ds: &Dataset, alpha: &[f64], lambda: f64) -> DenseVector {
    let mut w = DenseVector::zeros(ds.dim());
    let scale = 1.0 / (lambda * ds.n() as f64);
    for (ex, &a) in ds.examples().iter().zip(alpha) {
        if a != 0.0 {
            sparse_axpy(scale * a * ex.label(), ex, &mut w);
        }
    }
    w
}

/// Separable surrogate of `D(α + δ)` with `δᵀQδ` replaced by `β‖δ‖²`:
///
/// `H(δ, α) = −(αᵀQα + 2αᵀQδ + β‖δ‖²)/(2λn²) + (1/n)Σ(α_i + δ_i)`.
///
/// `δ` is a full-length vector; `w_of_alpha` must equal `w(α)`.
pub fn separable_surrogate(
    ds: &Dataset,
    alpha: &[f64],
    delta: &[f64],
    w_of_alpha: &[f64],
    lambda: f64,
    beta: f64,
) -> f64 {
    let n = ds.n() as f64;
    let l1: f64 = alpha.iter().zip(delta).map(|(a, d)| a + d).sum();
    let w_sq: f64 = w_of_alpha.iter().map(|v| v * v).sum();
    // αᵀQδ = λn Σ_i δ_i y_i ⟨w(α), x_i⟩
    let cross: f64 = ds
        .examples()
        .iter()
        .zip(delta)
        .map(|(ex, &d)| d * ex.label() * sparse_dot(ex, w_of_alpha))
        .sum();
    let delta_sq: f64 = delta.iter().map(|d| d * d).sum();
    l1 / n - 0.5 * lambda * w_sq - cross / n - beta * delta_sq / (2.0 * lambda * n * n)
}
