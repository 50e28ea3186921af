use crate::error::{Error, Result};
use crate::matrix::{axpy, DenseMatrix, PermutationVector};

/// Factors of `P X = L U` for a tall-skinny `X`.
#[derive(Clone, Debug, PartialEq)]
pub struct LuFactors {
    pub perm: PermutationVector,
    /// Unit lower-trapezoidal, `m x n`.
    pub l: DenseMatrix,
    /// Upper triangular, `n x n`.
    pub u: DenseMatrix,
}

/// Right-looking LU with partial (row) pivoting over the `n` columns of an
/// `m x n` matrix, `m >= n`. Ties in the pivot search go to the lowest row.
pub fn lu_partial_pivot(x: &DenseMatrix) -> Result<LuFactors> {
    let (m, n) = x.shape();
    if m < n {
        return Err(Error::DimensionMismatch {
            expected: format!("at least {n} rows"),
            found: format!("{m} rows"),
        });
    }
    let mut w = x.clone();
    let mut perm = PermutationVector::identity(m);
    for k in 0..n {
        let (mut p, mut best) = (k, 0.0f64);
        for (i, v) in w.col(k).iter().enumerate().skip(k) {
            if v.abs() > best {
                best = v.abs();
                p = i;
            }
        }
        if best == 0.0 {
            return Err(Error::RankDeficient { column: k });
        }
        if p != k {
            perm.swap(k, p);
            for j in 0..n {
                let col = w.col_mut(j);
                col.swap(k, p);
            }
        }
        let pivot = w[(k, k)];
        for v in &mut w.col_mut(k)[k + 1..] {
            *v /= pivot;
        }
        let data = w.as_mut_slice();
        let (left, right) = data.split_at_mut((k + 1) * m);
        let lk = &left[k * m + k + 1..(k + 1) * m];
        for col in right.chunks_exact_mut(m) {
            let ukj = col[k];
            if ukj != 0.0 {
                axpy(-ukj, lk, &mut col[k + 1..]);
            }
        }
    }
    if let Some((row, col)) = w.first_non_finite() {
        return Err(Error::NonFiniteResult {
            op: "lu_partial_pivot",
            row,
            col,
        });
    }
    let mut l = DenseMatrix::zeros(m, n);
    let mut u = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let src = w.col(j);
        u.col_mut(j)[..=j].copy_from_slice(&src[..=j]);
        let lj = l.col_mut(j);
        lj[j] = 1.0;
        lj[j + 1..].copy_from_slice(&src[j + 1..]);
    }
    Ok(LuFactors { perm, l, u })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let f = lu_partial_pivot(&DenseMatrix::identity(3)).unwrap();
        assert!(f.perm.is_identity());
        assert_eq!(f.l, DenseMatrix::identity(3));
        assert_eq!(f.u, DenseMatrix::identity(3));
    }

    #[test]
    fn two_by_two_swaps_rows() {
        let x = DenseMatrix::from_rows(&[&[4.0, 3.0], &[6.0, 3.0]]).unwrap();
        let f = lu_partial_pivot(&x).unwrap();
        assert_eq!(f.perm.as_slice(), &[1, 0]);
        assert_eq!(f.l[(1, 0)], 4.0 / 6.0);
        assert_eq!(f.l[(0, 0)], 1.0);
        assert_eq!(f.l[(1, 1)], 1.0);
        assert_eq!(f.u[(0, 0)], 6.0);
        assert_eq!(f.u[(0, 1)], 3.0);
        assert!((f.u[(1, 1)] - 1.0).abs() < 1e-15);
        let px = f.perm.apply_rows(&x);
        let lu = f.l.matmul(&f.u).unwrap();
        assert!(px.sub(&lu).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn zero_column_is_rank_deficient() {
        let x = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]).unwrap();
        assert_eq!(lu_partial_pivot(&x), Err(Error::RankDeficient { column: 1 }));
    }
}
