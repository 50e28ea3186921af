use super::{householder_r, norm2};
use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix, UNIT_ROUNDOFF};

const MAX_SWEEPS: usize = 80;

/// One-sided Jacobi on the columns of a square (or tall) matrix, in place.
/// On return the columns are mutually orthogonal and their norms are the
/// singular values. When `v` is given, the same rotations are applied to it.
fn one_sided_jacobi(a: &mut DenseMatrix, mut v: Option<&mut DenseMatrix>) {
    let (m, n) = a.shape();
    let tol = UNIT_ROUNDOFF * (m as f64).sqrt();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let cp = a.col(p);
                    let cq = a.col(q);
                    (dot(cp, cp), dot(cq, cq), dot(cp, cq))
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(a, p, q, c, s);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v, p, q, c, s);
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

fn rotate(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let m = a.rows();
    let data = a.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * m);
    for (x, y) in lo[p * m..(p + 1) * m].iter_mut().zip(hi[..m].iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Thin SVD `a = U diag(sigma) V^T` of a square or tall matrix with full
/// column rank, singular values in decreasing order.
pub(crate) fn jacobi_svd(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>, DenseMatrix)> {
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(n);
    one_sided_jacobi(&mut w, Some(&mut v));
    let sigma: Vec<f64> = (0..n).map(|j| norm2(w.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let mut u = DenseMatrix::zeros(m, n);
    let mut vs = DenseMatrix::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sj = sigma[j];
        if !(sj > 0.0) {
            return Err(Error::RankDeficient { column: j });
        }
        for i in 0..m {
            u[(i, k)] = w[(i, j)] / sj;
        }
        vs.col_mut(k).copy_from_slice(v.col(j));
        sorted.push(sj);
    }
    Ok((u, sorted, vs))
}

/// Singular values of `x`, sorted in decreasing order.
///
/// Tall inputs are first reduced to their Householder `R` factor, so the
/// Jacobi iteration runs on an `n x n` matrix. A column with no remaining
/// component contributes a zero singular value.
pub fn singular_values(x: &DenseMatrix) -> Result<Vec<f64>> {
    if x.rows() < x.cols() {
        return singular_values(&x.transpose());
    }
    let n = x.cols();
    let mut core = match householder_r(x) {
        Ok(r) => r,
        Err(Error::RankDeficient { .. }) => {
            // fall back to Jacobi on the full matrix; it tolerates zero columns
            x.clone()
        }
        Err(e) => return Err(e),
    };
    one_sided_jacobi(&mut core, None);
    let mut sv: Vec<f64> = (0..n).map(|j| norm2(core.col(j))).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_values_recovered() {
        let x = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, -5.0], &[0.0, 0.0]]).unwrap();
        let sv = singular_values(&x).unwrap();
        assert!((sv[0] - 5.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_has_zero() {
        let x = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        let sv = singular_values(&x).unwrap();
        assert!((sv[0] - 5.0).abs() < 1e-14);
        assert!(sv[1].abs() < 1e-15);
    }

    #[test]
    fn thin_svd_reconstructs() {
        let x = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0], &[0.5, -1.0]]).unwrap();
        let (u, s, v) = jacobi_svd(&x).unwrap();
        assert!(s[0] >= s[1]);
        let us = DenseMatrix::from_fn(3, 2, |i, j| u[(i, j)] * s[j]);
        let back = us.matmul(&v.transpose()).unwrap();
        assert!(back.sub(&x).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn wide_input_is_transposed() {
        let x = DenseMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0]]).unwrap();
        let sv = singular_values(&x).unwrap();
        assert_eq!(sv.len(), 2);
        assert!((sv[0] - 2.0).abs() < 1e-15 && (sv[1] - 1.0).abs() < 1e-15);
    }
}
