use crate::error::{Error, Result};
use crate::matrix::{axpy, DenseMatrix, UNIT_ROUNDOFF};

/// Solves `Q R = X` for `Q` by column-wise back substitution, `R` upper
/// triangular. `R^{-1}` is never formed.
pub fn tri_solve_right(x: &DenseMatrix, r: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = x.shape();
    if r.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n} triangular factor"),
            found: format!("{:?}", r.shape()),
        });
    }
    for k in 0..n {
        let d = r[(k, k)];
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SingularTriangular { index: k });
        }
    }
    let mut q = DenseMatrix::zeros(m, n);
    let data = q.as_mut_slice();
    for j in 0..n {
        let (done, rest) = data.split_at_mut(j * m);
        let qj = &mut rest[..m];
        qj.copy_from_slice(x.col(j));
        for k in 0..j {
            let rkj = r[(k, j)];
            if rkj != 0.0 {
                axpy(-rkj, &done[k * m..(k + 1) * m], qj);
            }
        }
        let inv = r[(j, j)];
        for v in qj.iter_mut() {
            *v /= inv;
        }
        if let Some(row) = qj.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult {
                op: "tri_solve_right",
                row,
                col: j,
            });
        }
    }
    Ok(q)
}

/// Product of two upper-triangular `n x n` factors, e.g. `R = Z Y`.
///
/// Computed as a full dense product; the strict lower triangle is checked to
/// be within roundoff and then cleared.
pub fn upper_tri_product(z: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    let mut r = z.matmul(y)?;
    let n = r.cols() as f64;
    let tol = n * UNIT_ROUNDOFF * z.frobenius_norm() * y.frobenius_norm();
    let lower = r.max_abs_strict_lower();
    debug_assert!(lower <= tol, "strict lower part {lower} above {tol}");
    r.zero_strict_lower();
    if let Some((row, col)) = r.first_non_finite() {
        return Err(Error::NonFiniteResult {
            op: "upper_tri_product",
            row,
            col,
        });
    }
    Ok(r)
}
