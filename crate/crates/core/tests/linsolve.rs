use mcs_core::linsolve::{relative_residual, solve_symmetric_indefinite, SparseMatrix, DEFAULT_SHIFT};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random sparse saddle matrix `[[A, B^T], [B, 0]]` with `A` positive definite and `B` of full rank.
fn saddle(n: usize, m: usize, seed: u64) -> (SparseMatrix, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dense = DMatrix::zeros(n + m, n + m);
    let g = DMatrix::from_fn(n, n, |_, _| if rng.random_bool(0.3) { rng.random_range(-1.0..1.0) } else { 0.0 });
    let a = &g * g.transpose() + DMatrix::identity(n, n);
    dense.view_mut((0, 0), (n, n)).copy_from(&a);
    for r in 0..m {
        // the diagonal coupling keeps B of full rank
        dense[(n + r, r)] = 1.0 + rng.random_range(0.0..1.0);
        dense[(r, n + r)] = dense[(n + r, r)];
        for c in m..n {
            if rng.random_bool(0.3) {
                let v = rng.random_range(-1.0..1.0);
                dense[(n + r, c)] = v;
                dense[(c, n + r)] = v;
            }
        }
    }
    let mut trip = Vec::new();
    for i in 0..n + m {
        for j in 0..n + m {
            if dense[(i, j)] != 0.0 {
                trip.push((i, j, dense[(i, j)]));
            }
        }
    }
    (SparseMatrix::from_triplets(n + m, n + m, trip), dense)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn agrees_with_dense_lu(n in 4usize..40, frac in 0.1f64..0.9, seed in 0u64..1000) {
        let m = ((n as f64 * frac) as usize).max(1);
        let (k, dense) = saddle(n, m, seed);
        let b: Vec<f64> = (0..n + m).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let (x, res) = solve_symmetric_indefinite(&k, &b, &[0, n, n + m], DEFAULT_SHIFT).unwrap();
        let oracle = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
        let err = (DVector::from_vec(x) - &oracle).amax() / oracle.amax();
        prop_assert!(err < 1e-10, "error {err:e}");
        prop_assert!(res <= 1e-10);
    }

    #[test]
    fn solution_is_linear_in_the_data(seed in 0u64..200, s in -1e3f64..1e3) {
        let (k, _) = saddle(12, 5, seed);
        let b: Vec<f64> = (0..17).map(|i| (i as f64).sin()).collect();
        let sb: Vec<f64> = b.iter().map(|v| s * v).collect();
        let blocks = [0, 12, 17];
        let (x, _) = solve_symmetric_indefinite(&k, &b, &blocks, DEFAULT_SHIFT).unwrap();
        let (y, _) = solve_symmetric_indefinite(&k, &sb, &blocks, DEFAULT_SHIFT).unwrap();
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())) * s.abs();
        for (a, c) in x.iter().zip(&y) {
            prop_assert!((s * a - c).abs() <= 1e-11 * scale.max(1e-300));
        }
    }
}

#[test]
fn compensated_residual_survives_cancellation() {
    // rows whose products cancel to a tiny remainder
    let k = SparseMatrix::from_triplets(2, 3, vec![(0, 0, 1e8), (0, 1, -1e8), (0, 2, 1.0), (1, 1, 3.0)]);
    let x = [1.0 + f64::EPSILON, 1.0, 1e-9];
    let r = k.residual(&x, &[0.0, 3.0]);
    let exact0 = -(1e8 * f64::EPSILON + 1e-9);
    assert!((r[0] - exact0).abs() <= 1e-15 * exact0.abs(), "{} vs {exact0}", r[0]);
    assert_eq!(r[1], 0.0);
}

#[test]
fn rejects_inconsistent_blocks_and_singular_constraints() {
    let (k, _) = saddle(6, 2, 1);
    let b = vec![1.0; 8];
    assert!(solve_symmetric_indefinite(&k, &b, &[0, 6], DEFAULT_SHIFT).is_err());
    // a zero constraint row cannot be satisfied for a nonzero right-hand side
    let mut trip = k.triplets();
    trip.retain(|&(r, c, _)| r != 7 && c != 7);
    let singular = SparseMatrix::from_triplets(8, 8, trip);
    let res = solve_symmetric_indefinite(&singular, &b, &[0, 6, 8], DEFAULT_SHIFT);
    assert!(res.is_err() || relative_residual(&singular, &res.unwrap().0, &b) > 1e-10);
}
