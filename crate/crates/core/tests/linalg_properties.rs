mod common;

use mbsvm::linalg::{subset_quadratic, subset_quadratic_expectation};
use proptest::prelude::*;

proptest! {
    #[test]
    fn subset_quadratic_matches_dense_double_sum(
        ds in common::dataset(20, 6),
        coeffs in prop::collection::vec(-3.0f64..3.0, 20),
        mask in prop::collection::vec(any::<bool>(), 20),
    ) {
        let q = common::gram(&ds);
        let n = ds.n();
        let delta: Vec<f64> = (0..n).map(|i| if mask[i] { coeffs[i] } else { 0.0 }).collect();
        let pairs: Vec<(usize, f64)> = (0..n).filter(|&i| mask[i]).map(|i| (i, coeffs[i])).collect();
        let dense = common::quad(&q, &delta, &delta);
        let fast = subset_quadratic(&ds, &pairs).unwrap();
        prop_assert!((fast - dense).abs() <= 1e-10 * dense.abs().max(1e-300) + 1e-14);
    }

    #[test]
    fn subset_average_has_closed_form(
        n in 2usize..=6,
        entries in prop::collection::vec(-1.0f64..1.0, 36),
        v in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                q[i][j] = entries[i * 6 + j];
                q[j][i] = entries[i * 6 + j];
            }
        }
        let v = &v[..n];
        let diag: f64 = (0..n).map(|i| q[i][i] * v[i] * v[i]).sum();
        let full = common::quad(&q, v, v);
        for b in 1..=n {
            let sets = common::subsets(n, b);
            let brute = sets
                .iter()
                .map(|a| {
                    let va = common::restrict(v, a);
                    common::quad(&q, &va, &va)
                })
                .sum::<f64>()
                / sets.len() as f64;
            let closed = subset_quadratic_expectation(n, b, diag, full);
            prop_assert!((brute - closed).abs() <= 1e-10 * brute.abs().max(1.0));
        }
    }
}
