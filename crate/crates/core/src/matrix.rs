//! Column-major dense matrix and permutation carriers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit roundoff of IEEE-754 binary64, `2^-53`.
pub const UNIT_ROUNDOFF: f64 = 1.0 / 9_007_199_254_740_992.0;

/// Dense `rows x cols` matrix of `f64`, stored column by column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    /// `rows x cols` matrix with ones on the main diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from column-major data, rejecting non-finite entries.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput {
                row: pos % rows.max(1),
                col: pos / rows.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows. Convenient for small literals.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = vec![0.0; r * c];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: format!("{c} columns"),
                    found: format!("{} columns in row {i}", row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                data[j * r + i] = v;
            }
        }
        Self::from_col_major(r, c, data)
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Column-major backing storage.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub(crate) fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Position of the first non-finite entry, if any.
    pub(crate) fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p % self.rows, p / self.rows))
    }

    pub fn frobenius_norm(&self) -> f64 {
        // scaled accumulation keeps tiny and huge entries from under/overflowing
        let mut scale = 0.0f64;
        let mut ssq = 1.0f64;
        for &v in &self.data {
            if v != 0.0 {
                let a = v.abs();
                if scale < a {
                    ssq = 1.0 + ssq * (scale / a) * (scale / a);
                    scale = a;
                } else {
                    ssq += (a / scale) * (a / scale);
                }
            }
        }
        scale * ssq.sqrt()
    }

    /// `self * rhs`, plain triple loop in column-major order.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("lhs cols {} == rhs rows", self.cols),
                found: format!("rhs rows {}", rhs.rows),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let bj = rhs.col(j);
            let oj = out.col_mut(j);
            for (k, &b) in bj.iter().enumerate() {
                if b != 0.0 {
                    axpy(b, &self.data[k * self.rows..(k + 1) * self.rows], oj);
                }
            }
        }
        Ok(out)
    }

    /// `self^T * rhs`.
    pub fn t_matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("lhs rows {} == rhs rows", self.rows),
                found: format!("rhs rows {}", rhs.rows),
            });
        }
        Ok(DenseMatrix::from_fn(self.cols, rhs.cols, |i, j| {
            dot(self.col(i), rhs.col(j))
        }))
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.shape()),
                found: format!("{:?}", rhs.shape()),
            });
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix::from_raw(self.rows, self.cols, data))
    }

    pub fn scale(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|v| alpha * v).collect(),
        )
    }

    /// Stacks `blocks` copies of `self` vertically.
    pub fn vstack_repeat(&self, blocks: usize) -> DenseMatrix {
        let rows = self.rows * blocks;
        let mut out = DenseMatrix::zeros(rows, self.cols);
        for j in 0..self.cols {
            let src = self.col(j);
            for chunk in out.col_mut(j).chunks_exact_mut(self.rows) {
                chunk.copy_from_slice(src);
            }
        }
        out
    }

    /// Largest magnitude among strictly-lower entries.
    pub fn max_abs_strict_lower(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.cols {
            for i in (j + 1)..self.rows {
                m = m.max(self[(i, j)].abs());
            }
        }
        m
    }

    pub(crate) fn zero_strict_lower(&mut self) {
        for j in 0..self.cols {
            let col = self.col_mut(j);
            for v in col.iter_mut().skip(j + 1) {
                *v = 0.0;
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// Row permutation `perm` such that row `i` of `P X` is row `perm[i]` of `X`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationVector {
    perm: Vec<usize>,
}

impl PermutationVector {
    pub fn identity(m: usize) -> Self {
        Self {
            perm: (0..m).collect(),
        }
    }

    pub fn from_vec(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::DimensionMismatch {
                    expected: "a permutation".into(),
                    found: format!("{perm:?}"),
                });
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub(crate) fn swap(&mut self, a: usize, b: usize) {
        self.perm.swap(a, b);
    }

    /// Returns `P X`.
    pub fn apply_rows(&self, x: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(self.perm[i], j)])
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::assertions_on_constants)]
    fn unit_roundoff_is_two_to_minus_53() {
        assert_eq!(UNIT_ROUNDOFF, 2f64.powi(-53));
        assert_eq!(1.0 + UNIT_ROUNDOFF, 1.0);
        assert!(1.0 + 2.0 * UNIT_ROUNDOFF > 1.0);
    }

    #[test]
    fn rejects_non_finite_and_bad_length() {
        assert!(DenseMatrix::from_col_major(2, 2, vec![1.0, f64::NAN, 0.0, 1.0]).is_err());
        assert!(DenseMatrix::from_col_major(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn from_rows_is_column_major() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        assert_eq!(a.as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(a[(0, 1)], 2.0);
    }

    #[test]
    fn matmul_small() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c, DenseMatrix::from_rows(&[&[2.0, 1.0], &[4.0, 3.0]]).unwrap());
        let g = a.t_matmul(&a).unwrap();
        assert_eq!(g, DenseMatrix::from_rows(&[&[10.0, 14.0], &[14.0, 20.0]]).unwrap());
    }

    #[test]
    fn frobenius_handles_extreme_scales() {
        let a = DenseMatrix::from_rows(&[&[1e200, 1e200]]).unwrap();
        assert!((a.frobenius_norm() / (1e200 * 2f64.sqrt()) - 1.0).abs() < 1e-15);
        let b = DenseMatrix::from_rows(&[&[3.0], &[4.0]]).unwrap();
        assert_eq!(b.frobenius_norm(), 5.0);
    }

    #[test]
    fn permutation_rejects_duplicates() {
        assert!(PermutationVector::from_vec(vec![0, 0, 1]).is_err());
        assert!(PermutationVector::from_vec(vec![2, 0, 1]).is_ok());
    }
}
