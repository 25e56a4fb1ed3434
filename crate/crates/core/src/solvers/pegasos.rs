use crate::dataset::Dataset;
use crate::linalg::sparse_axpy;
use crate::sampler::MiniBatch;

use super::{batch_margins, SolverState};

/// One mini-batch Pegasos step with `η_t = 1/(λt)`:
///
/// `w ← (1 − η_t λ) w + (η_t/b) Σ_{i∈A⁺} y_i x_i`, where `A⁺` holds the batch
/// members with margin `< 1` under the pre-update `w`.
pub fn pegasos_step(state: &mut SolverState, ds: &Dataset, lambda: f64, batch: &MiniBatch) {
    let t = (state.t + 1) as f64;
    let eta = 1.0 / (lambda * t);
    batch_margins(ds, &state.w, batch, &mut state.margins);

    let shrink = 1.0 - eta * lambda;
    if shrink == 0.0 {
        // t = 1: the previous iterate is wiped out entirely
        state.w.iter_mut().for_each(|v| *v = 0.0);
    } else {
        state.w.scale(shrink);
    }
    let step = eta / batch.len() as f64;
    for (&i, &m) in batch.indices().iter().zip(&state.margins) {
        if m < 1.0 {
            let ex = ds.example(i);
            sparse_axpy(step * ex.label(), ex, &mut state.w);
        }
    }
    state.t += 1;
}
