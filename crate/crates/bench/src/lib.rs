//! Fixtures shared by the criterion benches.

use cholqr::{zoo, DenseMatrix, Family, MatrixSpec, SketchConfig};

/// Well-conditioned `svd_conditioned` input of the given shape.
pub fn fixture(m: usize, n: usize, sigma: f64) -> DenseMatrix {
    let spec = MatrixSpec::new(Family::SvdConditioned, m, n, sigma, 2024);
    zoo::generate(&spec).expect("bench fixture")
}

/// Experiment-default sketch parameters with `s2` overridden.
pub fn sketch_config(n: usize, s2: Option<usize>) -> SketchConfig {
    let mut cfg = SketchConfig::experiment_defaults(n, 7);
    if let Some(s2) = s2 {
        cfg.multi.s2 = s2;
        cfg.single.s = s2;
    }
    cfg
}
