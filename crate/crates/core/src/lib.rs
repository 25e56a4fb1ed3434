//! Mini-batch primal (Pegasos) and dual (SDCA) solvers for the linear SVM
//!
//! ```text
//! min_w  P(w) = (1/n) Σ [1 − y_i⟨w, x_i⟩]_+ + (λ/2)‖w‖²
//! ```
//!
//! together with exact primal/dual/gap evaluation, the spectral-norm bound
//! that sets safe mini-batch step sizes, and an experiment harness that
//! writes CSV traces.

pub mod dataset;
pub mod harness;
pub mod linalg;
pub mod objectives;
pub mod sampler;
pub mod solvers;
pub mod synth;

pub use dataset::{normalize, parse_libsvm, rescale, split, Dataset, DatasetError, SparseExample};
pub use linalg::{beta_b, spectral_norm_sq, DenseVector, PowerIterationOptions, SpectralEstimate};
pub use objectives::{DualVector, GapReport, Reduction};
pub use sampler::{MiniBatch, Sampler};
pub use solvers::{Averaging, Solver, SolverConfig, SolverKind, SolverState};

/// Library version, recorded in trace headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
