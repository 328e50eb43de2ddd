use lago_core::align::{alignment_gradient, local_objective, optimality_tolerance, ridge_align, NodeData};
use lago_core::synth::gaussian_nodes;
use lago_core::Matrix;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

/// Normal equations evaluated with nalgebra's LU, independent of the crate's
/// Cholesky path.
fn lu_ridge(d: &NodeData, lambda: f64) -> DMatrix<f64> {
    let ev = to_na(d.victim());
    let ea = to_na(d.attack());
    let system = ev.transpose() * &ev + DMatrix::identity(ev.ncols(), ev.ncols()) * lambda;
    system.lu().solve(&(ev.transpose() * ea)).expect("nonsingular")
}

#[test]
fn ridge_matches_independent_lu_solve() {
    let d = &gaussian_nodes(42, 1, 5, 3, 2).unwrap()[0];
    let w = ridge_align(d, 0.1).unwrap();
    let oracle = lu_ridge(d, 0.1);
    for i in 0..3 {
        for j in 0..2 {
            assert!((w[(i, j)] - oracle[(i, j)]).abs() < 1e-12);
        }
    }
    let g = alignment_gradient(d, &w, 0.1).unwrap();
    assert!(g.frobenius() <= optimality_tolerance(d));
}

#[test]
fn gradient_matches_central_differences() {
    let d = &gaussian_nodes(7, 1, 4, 3, 2).unwrap()[0];
    let lambda = 0.3;
    let w = Matrix::from_fn(3, 2, |i, j| 0.1 * (i as f64) - 0.2 * (j as f64) + 0.05);
    let g = alignment_gradient(d, &w, lambda).unwrap();
    let h = 1e-6;
    for i in 0..3 {
        for j in 0..2 {
            let mut plus = w.clone();
            plus[(i, j)] += h;
            let mut minus = w.clone();
            minus[(i, j)] -= h;
            let fd = (local_objective(d, &plus, lambda).unwrap() - local_objective(d, &minus, lambda).unwrap()) / (2.0 * h);
            assert!((fd - g[(i, j)]).abs() < 1e-4, "({i},{j}): fd {fd} vs {}", g[(i, j)]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ridge_is_first_order_optimal(seed in 0u64..10_000, b in 1usize..12, m in 1usize..8, n in 1usize..6, lambda in 1e-3f64..10.0) {
        let d = &gaussian_nodes(seed, 1, b, m, n).unwrap()[0];
        let w = ridge_align(d, lambda).unwrap();
        let g = alignment_gradient(d, &w, lambda).unwrap();
        prop_assert!(g.frobenius() <= optimality_tolerance(d));
    }

    #[test]
    fn ridge_is_continuous_in_lambda(seed in 0u64..10_000, lambda in 0.01f64..5.0) {
        let d = &gaussian_nodes(seed, 1, 4, 6, 3).unwrap()[0];
        let a = ridge_align(d, lambda).unwrap();
        let b = ridge_align(d, lambda + 1e-9).unwrap();
        prop_assert!(a.sub(&b).unwrap().frobenius() < 1e-6 * (1.0 + a.frobenius()));
    }
}
