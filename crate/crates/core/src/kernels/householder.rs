use super::norm2;
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, DenseMatrix};

struct Reflectors {
    /// Working copy: R in the upper triangle, reflector tails below it.
    work: DenseMatrix,
    /// Leading entry of each reflector (the rest lives in `work`).
    heads: Vec<f64>,
    taus: Vec<f64>,
}

fn factor(a: &DenseMatrix) -> Result<Reflectors> {
    let (s, n) = a.shape();
    if s < n {
        return Err(Error::DimensionMismatch {
            expected: format!("at least {n} rows"),
            found: format!("{s} rows"),
        });
    }
    let mut work = a.clone();
    let mut heads = vec![0.0; n];
    let mut taus = vec![0.0; n];
    for k in 0..n {
        let norm = norm2(&work.col(k)[k..]);
        if norm == 0.0 {
            return Err(Error::RankDeficient { column: k });
        }
        let x0 = work[(k, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let head = x0 - alpha;
        // H = I - tau v v^T with v = [head, x_{k+1..}]
        let tau = 1.0 / (norm * (norm + x0.abs()));
        heads[k] = head;
        taus[k] = tau;
        work[(k, k)] = alpha;
        let (left, right) = work.as_mut_slice().split_at_mut((k + 1) * s);
        let tail = &left[k * s + k + 1..(k + 1) * s];
        for col in right.chunks_exact_mut(s) {
            let w = tau * (head * col[k] + dot(tail, &col[k + 1..]));
            if w != 0.0 {
                col[k] -= w * head;
                axpy(-w, tail, &mut col[k + 1..]);
            }
        }
    }
    if let Some((row, col)) = work.first_non_finite() {
        return Err(Error::NonFiniteResult {
            op: "householder_qr",
            row,
            col,
        });
    }
    Ok(Reflectors { work, heads, taus })
}

fn extract_r(f: &Reflectors) -> (DenseMatrix, Vec<bool>) {
    let n = f.work.cols();
    let mut r = DenseMatrix::zeros(n, n);
    let mut flipped = vec![false; n];
    for j in 0..n {
        for i in 0..=j {
            r[(i, j)] = f.work[(i, j)];
        }
    }
    for (k, flip) in flipped.iter_mut().enumerate() {
        if r[(k, k)] < 0.0 {
            *flip = true;
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
        }
    }
    (r, flipped)
}

/// Householder QR of an `s x n` matrix (`s >= n`), thin form.
///
/// `R` has a nonnegative diagonal; the matching columns of `Q` are negated
/// so that `Q R` is unchanged. A column whose remaining part is exactly zero
/// is reported as [`Error::RankDeficient`].
pub fn householder_qr(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let f = factor(a)?;
    let (s, n) = a.shape();
    let (r, flipped) = extract_r(&f);
    let mut q = DenseMatrix::eye(s, n);
    for k in (0..n).rev() {
        let head = f.heads[k];
        let tau = f.taus[k];
        let tail = &f.work.col(k)[k + 1..];
        for j in 0..n {
            let col = q.col_mut(j);
            let w = tau * (head * col[k] + dot(tail, &col[k + 1..]));
            if w != 0.0 {
                col[k] -= w * head;
                axpy(-w, tail, &mut col[k + 1..]);
            }
        }
    }
    for (k, &flip) in flipped.iter().enumerate() {
        if flip {
            for v in q.col_mut(k) {
                *v = -*v;
            }
        }
    }
    Ok((q, r))
}

/// Upper-triangular factor only, skipping the formation of `Q`.
pub fn householder_r(a: &DenseMatrix) -> Result<DenseMatrix> {
    let f = factor(a)?;
    Ok(extract_r(&f).0)
}
