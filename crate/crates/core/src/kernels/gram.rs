use crate::error::{Error, Result};
use crate::matrix::{dot, DenseMatrix};

/// `G = X^T X`.
///
/// Only the upper triangle is computed (one straight dot product per entry,
/// summed in row order) and then mirrored, so `G` is bit-exactly symmetric.
pub fn gram(x: &DenseMatrix) -> Result<DenseMatrix> {
    let n = x.cols();
    let mut g = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let xj = x.col(j);
        for i in 0..=j {
            let v = dot(x.col(i), xj);
            if !v.is_finite() {
                return Err(Error::NonFiniteResult {
                    op: "gram",
                    row: i,
                    col: j,
                });
            }
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}
