use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};

/// Upper-triangular Cholesky factor `R` with `R^T R = G`.
///
/// Only the upper triangle of `G` is read. A pivot that is not strictly
/// positive and finite is reported as [`Error::Breakdown`]; NaNs are never
/// propagated into the factor.
pub fn cholesky(g: &DenseMatrix) -> Result<DenseMatrix> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: "square Gram matrix".into(),
            found: format!("{:?}", g.shape()),
        });
    }
    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let s = {
                let ri = &r.col(i)[..i];
                let rj = &r.col(j)[..i];
                g[(i, j)] - dot(ri, rj)
            };
            r[(i, j)] = s / r[(i, i)];
        }
        let rj = &r.col(j)[..j];
        let pivot = g[(j, j)] - dot(rj, rj);
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::Breakdown {
                stage: "cholesky",
                pivot_index: j,
            });
        }
        r[(j, j)] = pivot.sqrt();
        if let Some(bad) = r.col(j)[..=j].iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult {
                op: "cholesky",
                row: bad,
                col: j,
            });
        }
    }
    Ok(r)
}
