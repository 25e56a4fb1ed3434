//! Mini-batch stochastic dual coordinate ascent: naive, safe and aggressive.
//!
//! Every variant computes all batch margins against the same pre-update
//! `w(α)` and then commits the batch jointly.

use crate::dataset::Dataset;
use crate::linalg::sparse_axpy;
use crate::sampler::MiniBatch;

use super::{batch_margins, SolverState};

/// `δ_i = clip_[−α_i, 1−α_i](λn(1 − margin) / denominator)`.
///
/// The denominator is `‖x_i‖²` for serial/naive steps and `β` for the
/// mini-batch variants. A zero denominator makes the coordinate objective
/// linear, so the maximizer sits at a box endpoint.
pub fn sdca_coordinate_delta(
    alpha_i: f64,
    margin: f64,
    lambda: f64,
    n: usize,
    denominator: f64,
) -> f64 {
    let slope = 1.0 - margin;
    if denominator == 0.0 {
        return if slope > 0.0 { 1.0 - alpha_i } else { -alpha_i };
    }
    let raw = lambda * n as f64 * slope / denominator;
    raw.clamp(-alpha_i, 1.0 - alpha_i)
}

fn compute_deltas<F>(
    state: &mut SolverState,
    ds: &Dataset,
    lambda: f64,
    batch: &MiniBatch,
    denom: F,
) where
    F: Fn(usize) -> f64,
{
    let n = ds.n();
    let alpha = state
        .alpha
        .as_ref()
        .expect("dual step on a state without dual variables");
    state.deltas.clear();
    state.deltas.extend(
        batch
            .indices()
            .iter()
            .zip(&state.margins)
            .map(|(&i, &m)| sdca_coordinate_delta(alpha.get(i), m, lambda, n, denom(i))),
    );
}

/// Commits `α_i += δ_i` and `w += δ_i y_i x_i / (λn)` in ascending index order.
fn apply_deltas(state: &mut SolverState, ds: &Dataset, lambda: f64, batch: &MiniBatch) {
    let scale = 1.0 / (lambda * ds.n() as f64);
    let alpha = state.alpha.as_mut().expect("dual state");
    for (&i, &d) in batch.indices().iter().zip(&state.deltas) {
        if d != 0.0 {
            let ex = ds.example(i);
            alpha.add(i, d);
            sparse_axpy(scale * d * ex.label(), ex, &mut state.w);
        }
    }
}

/// `‖Σ_{i∈A} δ_i y_i x_i‖²` using the zeroed scratch buffer; leaves it zeroed.
fn aggregate_norm_sq(state: &mut SolverState, ds: &Dataset, batch: &MiniBatch) -> f64 {
    for (&i, &d) in batch.indices().iter().zip(&state.deltas) {
        if d != 0.0 {
            let ex = ds.example(i);
            sparse_axpy(d * ex.label(), ex, &mut state.scratch);
        }
    }
    // Each touched coordinate is read once, then cleared, so shared
    // features across examples are not double counted.
    let mut total = 0.0;
    for (&i, &d) in batch.indices().iter().zip(&state.deltas) {
        if d != 0.0 {
            for &j in ds.example(i).indices() {
                let v = std::mem::take(&mut state.scratch[j]);
                total += v * v;
            }
        }
    }
    total
}

/// Naive mini-batching: every coordinate takes its own serial-optimal step.
///
/// Offers no monotonicity guarantee; with correlated examples the joint
/// update overshoots.
pub fn sdca_naive_step(state: &mut SolverState, ds: &Dataset, lambda: f64, batch: &MiniBatch) {
    batch_margins(ds, &state.w, batch, &mut state.margins);
    compute_deltas(state, ds, lambda, batch, |i| ds.example(i).sq_norm());
    apply_deltas(state, ds, lambda, batch);
    state.t += 1;
}

/// Safe mini-batching: all coordinates use the common denominator `β`.
pub fn sdca_safe_step(
    state: &mut SolverState,
    ds: &Dataset,
    lambda: f64,
    beta: f64,
    batch: &MiniBatch,
) {
    batch_margins(ds, &state.w, batch, &mut state.margins);
    compute_deltas(state, ds, lambda, batch, |_| beta);
    apply_deltas(state, ds, lambda, batch);
    state.t += 1;
}

/// Aggressive mini-batching with an adaptive step denominator.
///
/// 1. tentative `δ̃` with the current `β^(t)`
/// 2. `ρ = clip_[1, β_max](‖Σ δ̃_i y_i x_i‖² / Σ δ̃_i²)`
/// 3. final `δ` with `β = ρ`
/// 4. `β^(t+1) = (β^(t))^γ ρ^(1−γ)`
/// 5. commit only if the dual strictly increases
///
/// The dual change is evaluated in closed form from the batch margins:
/// `ΔD = (1/n) Σ δ_i (1 − m_i) − ‖Σ δ_i y_i x_i‖² / (2λn²)`.
pub fn sdca_aggressive_step(
    state: &mut SolverState,
    ds: &Dataset,
    lambda: f64,
    beta_max: f64,
    gamma: f64,
    batch: &MiniBatch,
) {
    let n = ds.n() as f64;
    let beta_t = state.beta_t.expect("aggressive state needs beta_t");
    batch_margins(ds, &state.w, batch, &mut state.margins);

    compute_deltas(state, ds, lambda, batch, |_| beta_t);
    let zeta: f64 = state.deltas.iter().map(|d| d * d).sum();
    if zeta == 0.0 {
        state.t += 1;
        return;
    }
    let spread = aggregate_norm_sq(state, ds, batch);
    let rho = (spread / zeta).clamp(1.0, beta_max);

    compute_deltas(state, ds, lambda, batch, |_| rho);
    state.beta_t = Some(beta_t.powf(gamma) * rho.powf(1.0 - gamma));

    let linear: f64 = state
        .deltas
        .iter()
        .zip(&state.margins)
        .map(|(d, m)| d * (1.0 - m))
        .sum();
    let quad = aggregate_norm_sq(state, ds, batch);
    let gain = linear / n - quad / (2.0 * lambda * n * n);
    if gain > 0.0 {
        apply_deltas(state, ds, lambda, batch);
    } else {
        state.rejected_steps += 1;
    }
    state.t += 1;
}
