//! Deterministic dense kernels: Gram product, Cholesky, Householder QR,
//! partially pivoted LU, right triangular solve, norms and singular values.
//!
//! Every kernel is a pure function of its inputs and never mutates them.
//! Failures that the QR algorithms care about (Cholesky breakdown, zero
//! pivots, singular triangular factors) are returned as typed errors.

mod cholesky;
mod gram;
mod householder;
mod lu;
mod norms;
mod svd;
mod trisolve;

pub use cholesky::cholesky;
pub use gram::gram;
pub use householder::{householder_qr, householder_r};
pub use lu::{lu_partial_pivot, LuFactors};
pub use norms::{norms, Norms};
pub use svd::singular_values;
pub(crate) use svd::jacobi_svd;
pub use trisolve::{tri_solve_right, upper_tri_product};

/// Euclidean norm with scaling so that tiny or huge entries do not under/overflow.
pub(crate) fn norm2(x: &[f64]) -> f64 {
    let amax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if amax == 0.0 || !amax.is_finite() {
        return amax;
    }
    if (1e-140..1e140).contains(&amax) {
        return x.iter().fold(0.0, |acc, v| acc + v * v).sqrt();
    }
    let inv = 1.0 / amax;
    amax * x.iter().fold(0.0, |acc, v| acc + (v * inv) * (v * inv)).sqrt()
}
