//! Randomized oracle suites shared by the kernel tests and the acceptance
//! run. Each suite returns the first failing case, if any.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use cholqr::kernels::{cholesky, gram, householder_qr, lu_partial_pivot, tri_solve_right};
use cholqr::sketch::make_countsketch;
use cholqr::{DenseMatrix, UNIT_ROUNDOFF};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Suite = Result<(), String>;

pub fn rng(case: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(case.wrapping_mul(0x9E37_79B9).wrapping_add(salt))
}

pub fn gaussian(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

pub fn gamma(k: usize) -> f64 {
    let ku = k as f64 * UNIT_ROUNDOFF;
    ku / (1.0 - ku)
}

/// Neumaier-compensated dot product.
pub fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let p = x * y;
        let t = sum + p;
        comp += if sum.abs() >= p.abs() { (sum - t) + p } else { (p - t) + sum };
        sum = t;
    }
    sum + comp
}

/// Textbook triple loop, summing in index order.
pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        let mut acc = 0.0;
        for k in 0..a.cols() {
            acc += a[(i, k)] * b[(k, j)];
        }
        acc
    })
}

pub fn diff_fro(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm()
}

pub fn orth_err(q: &DenseMatrix) -> f64 {
    let qtq = naive_matmul(&q.transpose(), q);
    diff_fro(&qtq, &DenseMatrix::identity(q.cols()))
}

fn random_upper(r: &mut ChaCha8Rng, n: usize, diag: (f64, f64), off: f64) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => r.random_range(diag.0..diag.1),
        std::cmp::Ordering::Less => r.random_range(-off..off) / n as f64,
        std::cmp::Ordering::Greater => 0.0,
    })
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn gram_suite(cases: u64) -> Suite {
    for case in 0..cases {
        let mut r = rng(case, 1);
        let n = r.random_range(1..=10);
        let m = r.random_range(n..=50);
        let x = gaussian(&mut r, m, n);
        let g = gram(&x).map_err(|e| e.to_string())?;
        let oracle = DenseMatrix::from_fn(n, n, |i, j| compensated_dot(x.col(i), x.col(j)));
        ensure!(g == g.transpose(), "case {case}: gram not bit-symmetric");
        let xf = x.frobenius_norm();
        let err = diff_fro(&g, &oracle);
        ensure!(err <= gamma(m) * xf * xf, "case {case}: gram error {err:e}");
    }
    Ok(())
}

pub fn cholesky_suite(cases: u64) -> Suite {
    for case in 0..cases {
        let mut r = rng(case, 2);
        let n = r.random_range(1..=20);
        let upper = random_upper(&mut r, n, (1.0, 2.0), 0.5);
        let g = naive_matmul(&upper.transpose(), &upper);
        let g = DenseMatrix::from_fn(n, n, |i, j| if i <= j { g[(i, j)] } else { g[(j, i)] });
        let back = cholesky(&g).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(back.max_abs_strict_lower() == 0.0, "case {case}: nonzero strict lower part");
        let scale = upper.as_slice().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for j in 0..n {
            for i in 0..=j {
                let d = (back[(i, j)] - upper[(i, j)]).abs();
                ensure!(d <= 1e-13 * scale, "case {case} ({i},{j}): {d:e}");
            }
        }
    }
    Ok(())
}

pub fn householder_suite(cases: u64) -> Suite {
    for case in 0..cases {
        let mut r = rng(case, 3);
        let n = r.random_range(1..=10);
        let s = r.random_range(n..=100);
        let a = gaussian(&mut r, s, n);
        let (q, rr) = householder_qr(&a).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(rr.max_abs_strict_lower() == 0.0, "case {case}: R not triangular");
        ensure!((0..n).all(|i| rr[(i, i)] >= 0.0), "case {case}: negative diagonal");
        let orth = orth_err(&q);
        let rec = diff_fro(&naive_matmul(&q, &rr), &a) / a.frobenius_norm();
        ensure!(orth <= 1e-14, "case {case}: orthogonality {orth:e}");
        ensure!(rec <= 1e-14, "case {case}: reconstruction {rec:e}");
    }
    Ok(())
}

pub fn lu_suite(cases: u64) -> Suite {
    for case in 0..cases {
        let mut r = rng(case, 4);
        let n = r.random_range(1..=50);
        let m = r.random_range(n..=500);
        let x = gaussian(&mut r, m, n);
        let f = lu_partial_pivot(&x).map_err(|e| format!("case {case}: {e}"))?;
        let px = DenseMatrix::from_fn(m, n, |i, j| x[(f.perm.as_slice()[i], j)]);
        let err = diff_fro(&px, &naive_matmul(&f.l, &f.u));
        let tol = 2.0 * (m * n) as f64 * UNIT_ROUNDOFF * x.frobenius_norm();
        ensure!(err <= tol, "case {case} {m}x{n}: {err:e} > {tol:e}");
        for j in 0..n {
            ensure!(f.l[(j, j)] == 1.0, "case {case}: L diagonal");
            ensure!((0..j).all(|i| f.l[(i, j)] == 0.0), "case {case}: L above diagonal");
            ensure!((j..m).all(|i| f.l[(i, j)].abs() <= 1.0), "case {case}: |L| > 1");
        }
        ensure!(f.u.max_abs_strict_lower() == 0.0, "case {case}: U not triangular");
    }
    Ok(())
}

pub fn trisolve_suite(cases: u64) -> Suite {
    for case in 0..cases {
        let mut r = rng(case, 5);
        let n = r.random_range(1..=12);
        let m = r.random_range(n..=60);
        let x = gaussian(&mut r, m, n);
        let upper = random_upper(&mut r, n, (1.0, 3.0), 1.0);
        let q = tri_solve_right(&x, &upper).map_err(|e| format!("case {case}: {e}"))?;
        let rec = diff_fro(&naive_matmul(&q, &upper), &x) / x.frobenius_norm();
        ensure!(rec <= 1e-14, "case {case}: {rec:e}");
    }
    Ok(())
}

pub fn countsketch_suite(cases: u64) -> Suite {
    for case in 0..cases {
        let mut r = rng(case, 7);
        let n = r.random_range(1..=10);
        let m = r.random_range(1..=100);
        let s = r.random_range(1..=m);
        let op = make_countsketch(s, m, case).map_err(|e| e.to_string())?;
        let x = gaussian(&mut r, m, n);
        let fast = op.apply(&x).map_err(|e| e.to_string())?;
        let explicit = op.materialize();
        ensure!(
            fast.as_slice() == naive_matmul(&explicit, &x).as_slice(),
            "case {case}: fast apply differs from dense product"
        );
        ensure!(explicit.frobenius_norm() == (m as f64).sqrt(), "case {case}: Frobenius norm");
    }
    Ok(())
}
