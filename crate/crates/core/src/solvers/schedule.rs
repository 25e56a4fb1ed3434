//! Iteration schedule `(t0, T0, T)` for safe mini-batch SDCA with averaging.

use super::SolverError;

/// `t0 ≤ T0 < T`; the averaged dual iterate uses `α^(t)` for `t ∈ [T0, T−1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub t0: usize,
    pub averaging_start: usize,
    pub total: usize,
}

/// Smallest integer `≥ x`, ignoring round-off of a few ulps above an integer.
fn ceil_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Smallest integers satisfying
///
/// ```text
/// t0 ≥ max{0, ⌈(n/b) ln(2λn/β_b)⌉}
/// T0 ≥ t0 + (β_b/b) [4/(λε) − 2n/β_b]_+
/// T  ≥ T0 + max{⌈n/b⌉, (β_b/b) / (λε)}
/// ```
///
/// for the hinge loss (unit Lipschitz constant, initial dual suboptimality ≤ 1).
pub fn compute_schedule(
    n: usize,
    b: usize,
    lambda: f64,
    epsilon: f64,
    beta_b: f64,
) -> Result<Schedule, SolverError> {
    if n == 0 || b == 0 || b > n {
        return Err(SolverError::Config(format!(
            "batch size {b} not in [1, {n}]"
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SolverError::Config(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SolverError::Config(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(beta_b > 0.0 && beta_b.is_finite()) {
        return Err(SolverError::Config(format!(
            "beta_b must be positive, got {beta_b}"
        )));
    }
    let n_f = n as f64;
    let b_f = b as f64;

    let t0 = ceil_tolerant((n_f / b_f) * (2.0 * lambda * n_f / beta_b).ln()).max(0.0);
    let burn_in = (4.0 / (lambda * epsilon) - 2.0 * n_f / beta_b).max(0.0);
    let averaging_start = t0 + ceil_tolerant((beta_b / b_f) * burn_in);
    let window = ceil_tolerant(n_f / b_f).max(ceil_tolerant((beta_b / b_f) / (lambda * epsilon)));
    let total = averaging_start + window;

    Ok(Schedule {
        t0: t0 as usize,
        averaging_start: averaging_start as usize,
        total: total as usize,
    })
}
