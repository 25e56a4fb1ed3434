//! Iterate averaging: tail, decaying (0.9/0.1), schedule window, or none.

use std::fmt;
use std::str::FromStr;

use crate::linalg::DenseVector;
use crate::objectives::DualVector;

use super::SolverState;

/// Weight kept on the previous average by decaying averaging.
pub const DECAY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// Mean of the pre-step iterates of steps `⌊T/2⌋+1 ..= T`.
    Tail,
    /// `w̄ ← 0.9 w̄ + 0.1 w` at every checkpoint, starting from `w̄ = 0`.
    Decaying,
    /// The last iterate.
    Final,
    /// Mean of the pre-step iterates of steps `start+1 ..= T`, i.e. `α^(t)` for `t ∈ [start, T−1]`.
    Schedule { start: usize },
}

impl fmt::Display for Averaging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Averaging::Tail => f.write_str("tail"),
            Averaging::Decaying => f.write_str("decaying"),
            Averaging::Final => f.write_str("final"),
            Averaging::Schedule { start } => write!(f, "schedule({start})"),
        }
    }
}

impl FromStr for Averaging {
    type Err = String;

    /// Parses `tail`, `decaying`, `final`; `schedule` yields a start of 0 to be filled in later.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tail" => Ok(Averaging::Tail),
            "decaying" => Ok(Averaging::Decaying),
            "final" => Ok(Averaging::Final),
            "schedule" => Ok(Averaging::Schedule { start: 0 }),
            _ => Err(format!("unknown averaging mode {s:?}")),
        }
    }
}

/// Running state for one averaging mode.
#[derive(Debug, Clone)]
pub(crate) struct Averager {
    mode: Averaging,
    window_start: usize,
    w: DenseVector,
    alpha: Option<Vec<f64>>,
    count: usize,
}

impl Averager {
    pub(crate) fn new(
        mode: Averaging,
        total_iters: usize,
        dim: usize,
        n_dual: Option<usize>,
    ) -> Self {
        let window_start = match mode {
            Averaging::Tail => total_iters / 2,
            Averaging::Schedule { start } => start,
            _ => usize::MAX,
        };
        Averager {
            mode,
            window_start,
            w: DenseVector::zeros(dim),
            alpha: n_dual.map(|n| vec![0.0; n]),
            count: 0,
        }
    }

    /// Called with the iterate about to be updated by step `state.t + 1`.
    pub(crate) fn before_step(&mut self, state: &SolverState) {
        if state.t < self.window_start {
            return;
        }
        self.w.add_scaled(1.0, &state.w);
        if let (Some(sum), Some(alpha)) = (self.alpha.as_mut(), state.alpha.as_ref()) {
            for (s, a) in sum.iter_mut().zip(alpha.as_slice()) {
                *s += a;
            }
        }
        self.count += 1;
    }

    pub(crate) fn on_checkpoint(&mut self, state: &SolverState) {
        if self.mode != Averaging::Decaying {
            return;
        }
        self.w.scale(DECAY);
        self.w.add_scaled(1.0 - DECAY, &state.w);
        if let (Some(avg), Some(alpha)) = (self.alpha.as_mut(), state.alpha.as_ref()) {
            for (s, a) in avg.iter_mut().zip(alpha.as_slice()) {
                *s = DECAY * *s + (1.0 - DECAY) * a;
            }
        }
        self.count += 1;
    }

    /// The reported iterate, or `None` when it is the current state.
    pub(crate) fn averaged(&self) -> Option<(DenseVector, Option<DualVector>)> {
        match self.mode {
            Averaging::Final => None,
            Averaging::Decaying => Some((
                self.w.clone(),
                self.alpha
                    .as_ref()
                    .map(|a| DualVector::from_vec(clamp_box(a.clone()))),
            )),
            Averaging::Tail | Averaging::Schedule { .. } => {
                if self.count == 0 {
                    return None;
                }
                let inv = 1.0 / self.count as f64;
                let mut w = self.w.clone();
                w.scale(inv);
                let alpha = self
                    .alpha
                    .as_ref()
                    .map(|a| DualVector::from_vec(clamp_box(a.iter().map(|v| v * inv).collect())));
                Some((w, alpha))
            }
        }
    }
}

// Convex combinations of points in [0, 1] can drift out by an ulp.
fn clamp_box(mut a: Vec<f64>) -> Vec<f64> {
    a.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    a
}
