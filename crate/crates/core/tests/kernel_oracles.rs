//! Randomized reconstruction checks of the dense kernels against
//! independent oracles written here or taken from nalgebra.

mod common;

use cholqr::kernels::{norms, singular_values};
use cholqr::sketch::make_gaussian;
use cholqr::{DenseMatrix, UNIT_ROUNDOFF};
use common::*;
use rand::Rng;
use rand_distr::StandardNormal;

const CASES: u64 = 1000;

#[test]
fn gram_matches_compensated_oracle() {
    gram_suite(CASES).unwrap();
}

#[test]
fn cholesky_round_trips_well_conditioned_factors() {
    cholesky_suite(CASES).unwrap();
}

#[test]
fn householder_is_orthonormal_and_reconstructs() {
    householder_suite(CASES).unwrap();
}

#[test]
fn lu_reconstructs_with_bounded_multipliers() {
    lu_suite(CASES).unwrap();
}

#[test]
fn triangular_solve_reconstructs() {
    trisolve_suite(CASES).unwrap();
}

#[test]
fn countsketch_apply_bit_equals_dense_product() {
    countsketch_suite(CASES).unwrap();
}

#[test]
fn singular_values_match_nalgebra() {
    for case in 0..200 {
        let mut r = rng(case, 6);
        let n = r.random_range(1..=8);
        let m = r.random_range(n..=30);
        // graded columns so the spectrum spans several decades
        let x = DenseMatrix::from_fn(m, n, |_, j| r.sample::<f64, _>(StandardNormal) * 10f64.powi(-(j as i32)));
        let ours = singular_values(&x).unwrap();
        let na = nalgebra::DMatrix::from_column_slice(m, n, x.as_slice());
        let mut theirs: Vec<f64> = na.singular_values().iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (k, (a, b)) in ours.iter().zip(&theirs).enumerate() {
            let tol = 1e-12 * b + 64.0 * UNIT_ROUNDOFF * theirs[0];
            assert!((a - b).abs() <= tol, "case {case} sigma_{k}: {a:e} vs {b:e}");
        }
    }
}

#[test]
fn kappa_of_diagonal_and_identity() {
    let x = DenseMatrix::from_fn(2, 2, |i, j| if i != j { 0.0 } else if i == 0 { 1.0 } else { 1e-6 });
    let nx = norms(&x).unwrap();
    assert!((nx.kappa2 / 1e6 - 1.0).abs() < 1e-12);
    let i5 = norms(&DenseMatrix::identity(5)).unwrap();
    assert_eq!((i5.spectral, i5.sigma_min, i5.kappa2), (1.0, 1.0, 1.0));
    assert!((i5.frobenius - 5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn gaussian_apply_matches_dense_product() {
    for case in 0..200 {
        let mut r = rng(case, 8);
        let n = r.random_range(1..=10);
        let m = r.random_range(n..=100);
        let s = r.random_range(n..=m);
        let op = make_gaussian(s, m, case).unwrap();
        let x = gaussian(&mut r, m, n);
        let fast = op.apply(&x).unwrap();
        let dense = naive_matmul(&op.materialize(), &x);
        let err = diff_fro(&fast, &dense) / dense.frobenius_norm();
        assert!(err <= 1e-14, "case {case}: {err:e}");
    }
}
