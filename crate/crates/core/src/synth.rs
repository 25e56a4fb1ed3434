//! Synthetic datasets with controlled spectral norm.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, SparseExample};
use crate::linalg::{spectral_norm_sq, PowerIterationOptions};
use crate::sampler::seeded_rng;

/// Relative tolerance on the achieved `σ²` of a gaussian dataset.
pub const SIGMA_TOLERANCE: f64 = 0.1;

/// Fraction of gaussian labels flipped so the data is not separable.
pub const LABEL_NOISE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// `n` distinct unit basis vectors, labels `+1, −1, +1, …`; `σ² = 1/n`.
    Orthogonal,
    /// `n` copies of `e_1`, all labelled `+1`; `σ² = 1`.
    Duplicated,
    /// Dense unit-norm rows sharing a common direction tuned to hit `sigma_target`.
    Gaussian { sigma_target: f64 },
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticKind::Orthogonal => f.write_str("orthogonal"),
            SyntheticKind::Duplicated => f.write_str("duplicated"),
            SyntheticKind::Gaussian { sigma_target } => write!(f, "gaussian({sigma_target})"),
        }
    }
}

impl FromStr for SyntheticKind {
    type Err = String;

    /// `orthogonal`, `duplicated`, `gaussian` (target 0.1) or `gaussian:<target>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "orthogonal" => Ok(SyntheticKind::Orthogonal),
            "duplicated" => Ok(SyntheticKind::Duplicated),
            "gaussian" => Ok(SyntheticKind::Gaussian { sigma_target: 0.1 }),
            _ => match s.strip_prefix("gaussian:") {
                Some(t) => t
                    .parse()
                    .map(|sigma_target| SyntheticKind::Gaussian { sigma_target })
                    .map_err(|_| format!("bad sigma target in {s:?}")),
                None => Err(format!("unknown synthetic kind {s:?}")),
            },
        }
    }
}

pub fn generate_synthetic(
    kind: SyntheticKind,
    n: usize,
    d: usize,
    seed: u64,
) -> Result<Dataset, SynthError> {
    if n == 0 || d == 0 {
        return Err(SynthError::Infeasible(format!(
            "need n, d > 0, got n={n}, d={d}"
        )));
    }
    match kind {
        SyntheticKind::Orthogonal => {
            if d < n {
                return Err(SynthError::Infeasible(format!(
                    "orthogonal data needs d >= n, got n={n}, d={d}"
                )));
            }
            let examples = (0..n)
                .map(|i| {
                    let label = if i % 2 == 0 { 1.0 } else { -1.0 };
                    SparseExample::new(vec![i], vec![1.0], label)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Dataset::new(examples, d)?)
        }
        SyntheticKind::Duplicated => {
            let examples = (0..n)
                .map(|_| SparseExample::new(vec![0], vec![1.0], 1.0))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Dataset::new(examples, d)?)
        }
        SyntheticKind::Gaussian { sigma_target } => gaussian(n, d, sigma_target, seed),
    }
}

// Rows are x_i = normalize(s·u + √(1−s²)·g_i) with unit u and unit gaussian
// directions g_i. σ² grows with s, so s is found by bisection.
fn gaussian(n: usize, d: usize, target: f64, seed: u64) -> Result<Dataset, SynthError> {
    if !(target.is_finite() && target > 0.0 && target <= 1.0) {
        return Err(SynthError::Infeasible(format!(
            "sigma target {target} not in (0, 1]"
        )));
    }
    if target < 1.0 / n as f64 * (1.0 - SIGMA_TOLERANCE) {
        return Err(SynthError::Infeasible(format!(
            "sigma target {target} below the floor 1/n = {}",
            1.0 / n as f64
        )));
    }
    let mut rng = seeded_rng(seed, 0);
    let u = unit_gaussian(d, &mut rng);
    let g: Vec<Vec<f64>> = (0..n).map(|_| unit_gaussian(d, &mut rng)).collect();
    let v = unit_gaussian(d, &mut rng);
    let flips: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < LABEL_NOISE).collect();

    let build = |s: f64| -> Result<Dataset, SynthError> {
        let c = (1.0 - s * s).max(0.0).sqrt();
        let examples = g
            .iter()
            .zip(&flips)
            .map(|(gi, &flip)| {
                let mut x: Vec<f64> = u.iter().zip(gi).map(|(a, b)| s * a + c * b).collect();
                let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
                if norm > 0.0 {
                    x.iter_mut().for_each(|t| *t /= norm);
                }
                let margin: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
                let label = if (margin >= 0.0) != flip { 1.0 } else { -1.0 };
                let (idx, val): (Vec<usize>, Vec<f64>) =
                    x.into_iter().enumerate().filter(|&(_, t)| t != 0.0).unzip();
                SparseExample::new(idx, val, label)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset::new(examples, d)?)
    };
    let sigma = |ds: &Dataset| -> Result<f64, SynthError> {
        let opts = PowerIterationOptions {
            tol: 1e-9,
            max_iter: 5000,
            inflation: 1.0,
            seed,
        };
        spectral_norm_sq(ds, &opts)
            .map(|e| e.sigma_sq)
            .map_err(|e| SynthError::Infeasible(e.to_string()))
    };
    let within = |s2: f64| (s2 - target).abs() <= SIGMA_TOLERANCE * target;

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let floor = build(lo)?;
    let floor_sigma = sigma(&floor)?;
    if within(floor_sigma) {
        return Ok(floor);
    }
    if floor_sigma > target {
        return Err(SynthError::Infeasible(format!(
            "sigma target {target} below the achievable {floor_sigma:.4} for n={n}, d={d}"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let ds = build(mid)?;
        let s2 = sigma(&ds)?;
        if within(s2) && (s2 - target).abs() <= 0.25 * SIGMA_TOLERANCE * target {
            return Ok(ds);
        }
        if s2 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ds = build(0.5 * (lo + hi))?;
    if within(sigma(&ds)?) {
        Ok(ds)
    } else {
        Err(SynthError::Infeasible(format!(
            "could not reach sigma target {target}"
        )))
    }
}

fn unit_gaussian<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 0.0 {
            return x.into_iter().map(|t| t / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::exact_sigma_sq;

    #[test]
    fn orthogonal_layout() {
        let ds = generate_synthetic(SyntheticKind::Orthogonal, 4, 6, 0).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.dim(), 6);
        let labels: Vec<f64> = ds.examples().iter().map(|e| e.label()).collect();
        assert_eq!(labels, vec![1.0, -1.0, 1.0, -1.0]);
        assert!((exact_sigma_sq(&ds) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_needs_room() {
        assert!(generate_synthetic(SyntheticKind::Orthogonal, 5, 4, 0).is_err());
        assert!(generate_synthetic(SyntheticKind::Duplicated, 0, 4, 0).is_err());
    }

    #[test]
    fn duplicated_pair_is_the_toy() {
        let ds = generate_synthetic(SyntheticKind::Duplicated, 2, 1, 0).unwrap();
        assert_eq!(ds.to_libsvm_string(), "+1 1:1\n+1 1:1\n");
        assert!((exact_sigma_sq(&ds) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_hits_target() {
        let ds =
            generate_synthetic(SyntheticKind::Gaussian { sigma_target: 0.1 }, 500, 50, 3).unwrap();
        assert_eq!(ds.n(), 500);
        let s2 = exact_sigma_sq(&ds);
        assert!((0.09..=0.11).contains(&s2), "sigma^2 = {s2}");
        assert!((ds.max_norm() - 1.0).abs() < 1e-12);
        let pos = ds.examples().iter().filter(|e| e.label() > 0.0).count();
        assert!(pos > 0 && pos < 500);
    }

    #[test]
    fn gaussian_is_seeded() {
        let kind = SyntheticKind::Gaussian { sigma_target: 0.3 };
        let a = generate_synthetic(kind, 60, 8, 11).unwrap();
        let b = generate_synthetic(kind, 60, 8, 11).unwrap();
        let c = generate_synthetic(kind, 60, 8, 12).unwrap();
        assert_eq!(a.to_libsvm_string(), b.to_libsvm_string());
        assert_ne!(a.to_libsvm_string(), c.to_libsvm_string());
    }

    #[test]
    fn gaussian_rejects_unreachable_targets() {
        let below_floor = SyntheticKind::Gaussian {
            sigma_target: 0.001,
        };
        assert!(matches!(
            generate_synthetic(below_floor, 100, 5, 0),
            Err(SynthError::Infeasible(_))
        ));
        let too_big = SyntheticKind::Gaussian { sigma_target: 1.5 };
        assert!(generate_synthetic(too_big, 10, 5, 0).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("orthogonal".parse(), Ok(SyntheticKind::Orthogonal));
        assert_eq!(
            "gaussian:0.25".parse(),
            Ok(SyntheticKind::Gaussian { sigma_target: 0.25 })
        );
        assert!("gaussian:x".parse::<SyntheticKind>().is_err());
    }
}
