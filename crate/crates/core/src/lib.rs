//! CholeskyQR-type QR factorizations of tall-skinny matrices, with sketch
//! operators, computable error bounds, test-matrix generators and an
//! experiment harness.
//!
//! ```
//! use cholqr::{sslhc3, zoo, SketchConfig, MatrixSpec, Family};
//!
//! let x = zoo::generate(&MatrixSpec::new(Family::SvdConditioned, 400, 8, 1e-10, 7)).unwrap();
//! let cfg = SketchConfig::experiment_defaults(8, 42);
//! let out = sslhc3(&x, &cfg).unwrap();
//! assert!(cholqr::bounds::orthogonality(&out.q) < cholqr::bounds::orth_bound(400, 8));
//! ```

// `!(a <= b)` is used on purpose so that NaN counts as a failed check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod matrix;
pub mod qr;
pub mod sketch;
pub mod zoo;

pub use error::{Error, Result};
pub use matrix::{DenseMatrix, PermutationVector, UNIT_ROUNDOFF};
pub use qr::{
    cholesky_qr, cholesky_qr2, lu_cholesky_qr, lu_cholesky_qr2, randomized_householder_qr, rhc, run,
    shifted_cholesky_qr, shifted_cholesky_qr3, slhc, slhc3, sslhc, sslhc3, Algorithm,
    AlgorithmFailure, MultiSketch, QrResult, SingleSketch, SketchConfig, SketchMode, StageRecord,
};
pub use sketch::SketchOperator;
pub use zoo::{Family, MatrixSpec};
