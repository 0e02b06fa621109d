use proptest::prelude::*;
use weakfock::spectral::{dense_eigen, lanczos_largest, lanczos_lowest, SolverOptions};
use weakfock::{Complex64, SparseOperator};

fn random_hermitian() -> impl Strategy<Value = SparseOperator> {
    (20usize..150).prop_flat_map(|dim| {
        let entry = (0..dim, 0..dim, -1.0f64..1.0, -1.0f64..1.0);
        prop::collection::vec(entry, dim..4 * dim).prop_map(move |raw| {
            let mut t = Vec::with_capacity(2 * raw.len());
            for (r, c, re, im) in raw {
                if r == c {
                    t.push((r, r, Complex64::new(re, 0.0)));
                } else {
                    t.push((r, c, Complex64::new(re, im)));
                    t.push((c, r, Complex64::new(re, -im)));
                }
            }
            SparseOperator::from_triplets(dim, t, true, "random").unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lanczos_matches_dense(op in random_hermitian(), seed in any::<u64>()) {
        let dense = dense_eigen(&op).unwrap();
        let k = 5.min(op.dim());
        let sol = lanczos_lowest(&op, k, 1e-11, &SolverOptions::lanczos(seed)).unwrap();
        let scale = 1.0 + op.max_abs();
        for i in 0..k {
            prop_assert!((sol.values[i] - dense.values[i]).abs() <= 1e-10 * scale,
                "eigenvalue {}: {} vs {}", i, sol.values[i], dense.values[i]);
        }
    }

    #[test]
    fn largest_matches_dense(op in random_hermitian(), seed in any::<u64>()) {
        let dense = dense_eigen(&op).unwrap();
        let scale = 1.0 + op.max_abs();
        let top = lanczos_largest(&op, 1e-11 * scale, seed).unwrap();
        prop_assert!((top - dense.values[op.dim() - 1]).abs() <= 1e-10 * scale);
    }

    #[test]
    fn dense_values_are_sorted_and_trace_preserving(op in random_hermitian()) {
        let dense = dense_eigen(&op).unwrap();
        prop_assert!(dense.values.windows(2).all(|w| w[0] <= w[1]));
        let trace: f64 = op.diagonal_values().iter().sum();
        let sum: f64 = dense.values.iter().sum();
        prop_assert!((trace - sum).abs() <= 1e-10 * (1.0 + trace.abs()) * op.dim() as f64);
    }
}
