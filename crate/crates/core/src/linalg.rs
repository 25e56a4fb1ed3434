//! Vector primitives, the spectral-norm bound `σ² ≥ ‖X‖²/n`, and `β_b`.

use std::ops::{Deref, DerefMut};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{Dataset, SparseExample};

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: index {index} out of range for length {len}")]
    Dimension { index: usize, len: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("duplicate index {0}")]
    DuplicateIndex(usize),
}

/// A dense real vector, used for `w`, `w(α)` and averaged iterates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn zeros(len: usize) -> Self {
        DenseVector(vec![0.0; len])
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&mut self, a: f64) {
        self.0.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a · other`.
    pub fn add_scaled(&mut self, a: f64, other: &DenseVector) {
        debug_assert_eq!(self.len(), other.len());
        for (s, o) in self.0.iter_mut().zip(&other.0) {
            *s += a * o;
        }
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        DenseVector(v)
    }
}

impl Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

fn check_range(x: &SparseExample, len: usize) -> Result<(), LinalgError> {
    // Indices are sorted, so the last one is the largest.
    match x.indices().last() {
        Some(&index) if index >= len => Err(LinalgError::Dimension { index, len }),
        _ => Ok(()),
    }
}

/// `⟨x, w⟩`.
pub fn dot(x: &SparseExample, w: &[f64]) -> Result<f64, LinalgError> {
    check_range(x, w.len())?;
    Ok(sparse_dot(x, w))
}

/// `w += a · x`.
pub fn axpy(a: f64, x: &SparseExample, w: &mut [f64]) -> Result<(), LinalgError> {
    check_range(x, w.len())?;
    sparse_axpy(a, x, w);
    Ok(())
}

#[inline]
pub(crate) fn sparse_dot(x: &SparseExample, w: &[f64]) -> f64 {
    x.iter().map(|(i, v)| v * w[i]).sum()
}

#[inline]
pub(crate) fn sparse_axpy(a: f64, x: &SparseExample, w: &mut [f64]) {
    for (i, v) in x.iter() {
        w[i] += a * v;
    }
}

/// Power-iteration settings for [`spectral_norm_sq`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIterationOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Multiplicative safety margin, `≥ 1`.
    pub inflation: f64,
    pub seed: u64,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        PowerIterationOptions {
            tol: 1e-6,
            max_iter: 1000,
            inflation: 1.02,
            seed: 0,
        }
    }
}

/// An upper-bound estimate of `σ² = ‖X‖²/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub sigma_sq: f64,
    pub iterations_used: usize,
    pub converged: bool,
    pub inflation: f64,
}

/// Estimates `σ²` by power iteration on `v ↦ XᵀX v` in example space.
///
/// Each application is two sparse passes (`z = Xv`, then `Xᵀz`); the Gram
/// matrix is never formed. The result is `inflation · λ_max / n` clamped to
/// `[1/n, 1]`. When `max_iter` is exhausted the best Rayleigh quotient is
/// still returned with `converged = false`.
pub fn spectral_norm_sq(
    ds: &Dataset,
    opts: &PowerIterationOptions,
) -> Result<SpectralEstimate, LinalgError> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(LinalgError::Domain(format!(
            "tol must be positive, got {}",
            opts.tol
        )));
    }
    if opts.inflation.is_nan() || opts.inflation < 1.0 {
        return Err(LinalgError::Domain(format!(
            "inflation must be >= 1, got {}",
            opts.inflation
        )));
    }
    let n = ds.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut z = vec![0.0; ds.dim()];

    let mut lambda = 0.0f64;
    let mut iterations_used = 0;
    let mut converged = false;
    for it in 1..=opts.max_iter.max(1) {
        iterations_used = it;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // v landed in the null space of X (or X = 0)
            converged = true;
            break;
        }
        v.iter_mut().for_each(|x| *x /= norm);

        z.iter_mut().for_each(|x| *x = 0.0);
        for (ex, &vi) in ds.examples().iter().zip(&v) {
            sparse_axpy(vi, ex, &mut z);
        }
        let rq: f64 = z.iter().map(|x| x * x).sum();
        for (ex, vi) in ds.examples().iter().zip(v.iter_mut()) {
            *vi = sparse_dot(ex, &z);
        }
        let prev = lambda;
        lambda = lambda.max(rq);
        if it > 1 && (rq - prev).abs() <= opts.tol * rq.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    let n_f = n as f64;
    let sigma_sq = (opts.inflation * lambda / n_f).clamp(1.0 / n_f, 1.0);
    Ok(SpectralEstimate {
        sigma_sq,
        iterations_used,
        converged,
        inflation: opts.inflation,
    })
}

/// Exact `‖X‖²/n` from a dense eigendecomposition of `XᵀX`, clamped to `[1/n, 1]`.
///
/// Quadratic memory in `n`; meant for small problems and as a cross-check.
pub fn exact_sigma_sq(ds: &Dataset) -> f64 {
    let n = ds.n();
    let dense = to_dense_columns(ds);
    let gram = dense.transpose() * &dense;
    let top = gram
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    (top / n as f64).clamp(1.0 / n as f64, 1.0)
}

/// `X` as a dense `d × n` matrix.
pub fn to_dense_columns(ds: &Dataset) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(ds.dim(), ds.n());
    for (j, ex) in ds.examples().iter().enumerate() {
        for (i, v) in ex.iter() {
            m[(i, j)] = v;
        }
    }
    m
}

/// `β_b = 1 + (b−1)(nσ² − 1)/(n−1)`, which lies in `[1, b]`.
pub fn beta_b(n: usize, b: usize, sigma_sq: f64) -> Result<f64, LinalgError> {
    if b == 0 || b > n {
        return Err(LinalgError::Domain(format!(
            "batch size {b} not in [1, {n}]"
        )));
    }
    let n_f = n as f64;
    let slack = 1e-9;
    if !(sigma_sq >= 1.0 / n_f - slack && sigma_sq <= 1.0 + slack) {
        return Err(LinalgError::Domain(format!(
            "sigma^2 = {sigma_sq} outside [1/n, 1] for n = {n}"
        )));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let beta = 1.0 + (b as f64 - 1.0) * (n_f * sigma_sq - 1.0) / (n_f - 1.0);
    Ok(beta.clamp(1.0, b as f64))
}

/// Closed form of `E_A[v_[A]ᵀ Q̃ v_[A]]` over uniform `b`-subsets of `n`:
/// `(b/n)[(1 − (b−1)/(n−1)) Σ Q̃_ii v_i² + ((b−1)/(n−1)) vᵀQ̃v]`.
///
/// `diag_term` is `Σ Q̃_ii v_i²` and `full_term` is `vᵀQ̃v`.
pub fn subset_quadratic_expectation(n: usize, b: usize, diag_term: f64, full_term: f64) -> f64 {
    let n_f = n as f64;
    let b_f = b as f64;
    let mix = if n > 1 {
        (b_f - 1.0) / (n_f - 1.0)
    } else {
        0.0
    };
    (b_f / n_f) * ((1.0 - mix) * diag_term + mix * full_term)
}

/// `δ_[A]ᵀ Q δ_[A] = ‖Σ_{i∈A} δ_i y_i x_i‖²` via one dense accumulation.
pub fn subset_quadratic(ds: &Dataset, delta: &[(usize, f64)]) -> Result<f64, LinalgError> {
    let mut seen = std::collections::HashSet::with_capacity(delta.len());
    for &(i, _) in delta {
        if i >= ds.n() {
            return Err(LinalgError::Dimension {
                index: i,
                len: ds.n(),
            });
        }
        if !seen.insert(i) {
            return Err(LinalgError::DuplicateIndex(i));
        }
    }
    let mut u = vec![0.0; ds.dim()];
    for &(i, d) in delta {
        let ex = ds.example(i);
        sparse_axpy(d * ex.label(), ex, &mut u);
    }
    Ok(u.iter().map(|x| x * x).sum())
}
