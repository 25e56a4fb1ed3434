//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use itertools::Itertools;
use mbsvm::dataset::{normalize, Dataset, SparseExample};
use proptest::prelude::*;

/// Random sparse dataset with `1..=max_n` examples over `1..=max_d` features.
pub fn dataset(max_n: usize, max_d: usize) -> impl Strategy<Value = Dataset> {
    (1..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        prop::collection::vec(
            (
                prop::collection::vec(prop::option::weighted(0.7, -2.0f64..2.0), d),
                any::<bool>(),
            ),
            n,
        )
        .prop_map(move |rows| {
            let examples = rows
                .into_iter()
                .map(|(row, y)| {
                    let (idx, val): (Vec<usize>, Vec<f64>) = row
                        .into_iter()
                        .enumerate()
                        .filter_map(|(i, v)| v.map(|v| (i, v)))
                        .unzip();
                    SparseExample::new(idx, val, if y { 1.0 } else { -1.0 }).unwrap()
                })
                .collect();
            Dataset::new(examples, d).unwrap()
        })
    })
}

/// Like [`dataset`] but rescaled to `max ‖x_i‖ = 1`; all-zero draws are skipped.
pub fn normalized(max_n: usize, max_d: usize) -> impl Strategy<Value = Dataset> {
    dataset(max_n, max_d).prop_filter_map("all-zero data", |ds| normalize(&ds).ok())
}

/// Dense `Q_ij = y_i y_j ⟨x_i, x_j⟩`.
pub fn gram(ds: &Dataset) -> Vec<Vec<f64>> {
    let dense: Vec<Vec<f64>> = ds
        .examples()
        .iter()
        .map(|ex| {
            let mut v = vec![0.0; ds.dim()];
            for (i, x) in ex.iter() {
                v[i] = x * ex.label();
            }
            v
        })
        .collect();
    dense
        .iter()
        .map(|a| {
            dense
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect()
}

pub fn quad(q: &[Vec<f64>], u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..u.len() {
        for j in 0..v.len() {
            s += u[i] * q[i][j] * v[j];
        }
    }
    s
}

/// `D(α) = −αᵀQα/(2λn²) + (1/n)Σα_i` straight from the Gram matrix.
pub fn dense_dual(q: &[Vec<f64>], alpha: &[f64], lambda: f64) -> f64 {
    let n = alpha.len() as f64;
    -quad(q, alpha, alpha) / (2.0 * lambda * n * n) + alpha.iter().sum::<f64>() / n
}

/// Every `b`-subset of `0..n`, in lexicographic order.
pub fn subsets(n: usize, b: usize) -> Vec<Vec<usize>> {
    (0..n).combinations(b).collect()
}

/// `v_[A]`: `v` with coordinates outside `subset` zeroed.
pub fn restrict(v: &[f64], subset: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for &i in subset {
        out[i] = v[i];
    }
    out
}
