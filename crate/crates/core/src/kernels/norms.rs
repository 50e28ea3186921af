use serde::{Deserialize, Serialize};

use super::{norm2, singular_values};
use crate::error::Result;
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub frobenius: f64,
    pub spectral: f64,
    pub sigma_min: f64,
    /// `spectral / sigma_min`; `+inf` when `sigma_min` is zero.
    pub kappa2: f64,
    pub max_column_norm: f64,
}

/// Frobenius, spectral, smallest singular value, 2-norm condition number and
/// largest column norm.
///
/// The spectrum comes from Householder `R` followed by one-sided Jacobi,
/// which resolves `sigma_min` down to roughly `u * ||X||_2`.
pub fn norms(x: &DenseMatrix) -> Result<Norms> {
    let sv = singular_values(x)?;
    let spectral = sv.first().copied().unwrap_or(0.0);
    let sigma_min = sv.last().copied().unwrap_or(0.0).max(0.0);
    let kappa2 = if sigma_min == 0.0 {
        f64::INFINITY
    } else {
        spectral / sigma_min
    };
    let max_column_norm = (0..x.cols())
        .map(|j| norm2(x.col(j)))
        .fold(0.0f64, f64::max);
    Ok(Norms {
        frobenius: x.frobenius_norm(),
        spectral,
        sigma_min,
        kappa2,
        max_column_norm,
    })
}
