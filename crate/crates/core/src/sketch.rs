//! Random sketch operators: Gaussian, CountSketch and their composition.
//!
//! Operators are built from a 64-bit seed with a ChaCha8 stream, so the same
//! `(s, m, seed)` always yields the same operator and the same products.
//! CountSketch keeps only its hash arrays and never materializes the
//! `s x m` matrix except on request for testing.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::norms;
use crate::matrix::{dot, DenseMatrix};

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a base seed and a path of indices.
///
/// `derive_seed(b, &[a, s, t])` depends only on its arguments, so adding
/// trials or algorithms never shifts the seeds of existing ones.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix(base), |acc, &p| mix(acc ^ mix(p.wrapping_add(0xA5A5_A5A5))))
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parameters of an `(epsilon, p, n)` oblivious subspace embedding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingParams {
    pub epsilon: f64,
    pub p: f64,
    pub n: usize,
    /// Constant in the Gaussian sizing rule.
    pub eta: f64,
}

impl EmbeddingParams {
    pub fn new(epsilon: f64, p: f64, n: usize) -> Result<Self> {
        Self::with_eta(epsilon, p, n, 1.0)
    }

    pub fn with_eta(epsilon: f64, p: f64, n: usize, eta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Config(format!("epsilon {epsilon} not in [0, 1)")));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Config(format!("p {p} not in (0, 1)")));
        }
        if n == 0 || !(eta > 0.0) {
            return Err(Error::Config("n and eta must be positive".into()));
        }
        Ok(Self { epsilon, p, n, eta })
    }
}

/// Gaussian sketch size `max(ceil(eta ln n ln(1/p) / eps^2), n)`.
pub fn gaussian_size(params: &EmbeddingParams) -> usize {
    let n = params.n as f64;
    let raw = params.eta * n.ln() * (1.0 / params.p).ln() / (params.epsilon * params.epsilon);
    let s = if raw.is_finite() { raw.ceil().max(0.0) as usize } else { usize::MAX };
    s.max(params.n)
}

/// CountSketch size `ceil((n^2 + n) / (eps^2 p))`.
///
/// `epsilon = 1` is accepted here (it is outside `EmbeddingParams`' range)
/// so that boundary cases of the formula can be evaluated directly.
pub fn countsketch_size_raw(n: usize, epsilon: f64, p: f64) -> usize {
    let n = n as f64;
    let v = (n * n + n) / (epsilon * epsilon * p);
    // guard against 2800.0000000001 style roundoff in the quotient
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

pub fn countsketch_size(params: &EmbeddingParams) -> usize {
    countsketch_size_raw(params.n, params.epsilon, params.p)
}

/// Distortion and failure probability of `Omega2 Omega1` built from two
/// independent embeddings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComposedDistortion {
    pub eps_s: f64,
    pub eps_b: f64,
    pub p_f: f64,
}

impl ComposedDistortion {
    pub fn new(eps1: f64, p1: f64, eps2: f64, p2: f64) -> Self {
        Self {
            eps_s: eps1 + eps2 - eps1 * eps2,
            eps_b: eps1 + eps2 + eps1 * eps2,
            p_f: p1 + p2 - p1 * p2,
        }
    }
}

/// High-probability bound `1 + C (sqrt(s1/s2) + 3/sqrt(s2))` on the spectral
/// norm of an `s2 x s1` Gaussian sketch.
pub fn gaussian_norm_bound(s1: usize, s2: usize, c: f64) -> f64 {
    let (s1, s2) = (s1 as f64, s2 as f64);
    1.0 + c * ((s1 / s2).sqrt() + 3.0 / s2.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSketch {
    s: usize,
    m: usize,
    seed: u64,
    scale: f64,
    /// Row-major `s x m` entries, already multiplied by `scale`.
    entries: Vec<f64>,
}

impl GaussianSketch {
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.entries[r * self.m..(r + 1) * self.m]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountSketch {
    s: usize,
    m: usize,
    seed: u64,
    row_of: Vec<u32>,
    sign_of: Vec<f64>,
}

impl CountSketch {
    /// Builds a CountSketch from explicit hash arrays.
    pub fn from_parts(s: usize, row_of: Vec<u32>, sign_of: Vec<f64>) -> Result<Self> {
        if row_of.len() != sign_of.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} signs", row_of.len()),
                found: format!("{} signs", sign_of.len()),
            });
        }
        if row_of.iter().any(|&r| r as usize >= s) || sign_of.iter().any(|&v| v.abs() != 1.0) {
            return Err(Error::Config("CountSketch hash arrays out of range".into()));
        }
        Ok(Self {
            s,
            m: row_of.len(),
            seed: 0,
            row_of,
            sign_of,
        })
    }

    /// `s = m`, `row_of[i] = i`, all signs `+1`.
    pub fn identity(m: usize) -> Self {
        Self {
            s: m,
            m,
            seed: 0,
            row_of: (0..m as u32).collect(),
            sign_of: vec![1.0; m],
        }
    }

    pub fn row_of(&self) -> &[u32] {
        &self.row_of
    }

    pub fn sign_of(&self) -> &[f64] {
        &self.sign_of
    }
}

/// A sketch `Omega` mapping `R^m` to `R^s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SketchOperator {
    Gaussian(GaussianSketch),
    CountSketch(CountSketch),
    /// `outer * inner`; `inner` is applied first.
    Composed {
        outer: Box<SketchOperator>,
        inner: Box<SketchOperator>,
    },
}

fn check_sizes(s: usize, m: usize) -> Result<()> {
    if s == 0 || s > m {
        return Err(Error::DimensionMismatch {
            expected: format!("1 <= s <= m = {m}"),
            found: format!("s = {s}"),
        });
    }
    Ok(())
}

/// `s x m` Gaussian sketch with i.i.d. `N(0, 1)` entries scaled by `1/sqrt(s)`.
pub fn make_gaussian(s: usize, m: usize, seed: u64) -> Result<SketchOperator> {
    check_sizes(s, m)?;
    let mut rng = rng_from_seed(seed);
    let scale = 1.0 / (s as f64).sqrt();
    let entries = (0..s * m)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(SketchOperator::Gaussian(GaussianSketch {
        s,
        m,
        seed,
        scale,
        entries,
    }))
}

/// `s x m` CountSketch: each input coordinate hashes to one uniform row with
/// a uniform random sign.
pub fn make_countsketch(s: usize, m: usize, seed: u64) -> Result<SketchOperator> {
    check_sizes(s, m)?;
    let mut rng = rng_from_seed(seed);
    let mut row_of = Vec::with_capacity(m);
    let mut sign_of = Vec::with_capacity(m);
    for _ in 0..m {
        row_of.push(rng.random_range(0..s as u32));
        sign_of.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
    }
    Ok(SketchOperator::CountSketch(CountSketch {
        s,
        m,
        seed,
        row_of,
        sign_of,
    }))
}

/// `outer * inner`.
pub fn compose(outer: SketchOperator, inner: SketchOperator) -> Result<SketchOperator> {
    if outer.input_dim() != inner.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("outer input dim {}", inner.output_dim()),
            found: format!("{}", outer.input_dim()),
        });
    }
    Ok(SketchOperator::Composed {
        outer: Box::new(outer),
        inner: Box::new(inner),
    })
}

impl SketchOperator {
    /// `m`, the dimension of vectors the operator accepts.
    pub fn input_dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.m,
            Self::CountSketch(c) => c.m,
            Self::Composed { inner, .. } => inner.input_dim(),
        }
    }

    /// `s`, the sketch dimension.
    pub fn output_dim(&self) -> usize {
        match self {
            Self::Gaussian(g) => g.s,
            Self::CountSketch(c) => c.s,
            Self::Composed { outer, .. } => outer.output_dim(),
        }
    }

    /// Seed the operator was built from (outer seed for compositions).
    pub fn seed(&self) -> u64 {
        match self {
            Self::Gaussian(g) => g.seed,
            Self::CountSketch(c) => c.seed,
            Self::Composed { outer, .. } => outer.seed(),
        }
    }

    /// `Omega X`.
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.rows() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", self.input_dim()),
                found: format!("{} rows", x.rows()),
            });
        }
        let n = x.cols();
        match self {
            Self::Gaussian(g) => {
                let mut out = DenseMatrix::zeros(g.s, n);
                for j in 0..n {
                    let xj = x.col(j);
                    let oj = out.col_mut(j);
                    for (r, o) in oj.iter_mut().enumerate() {
                        *o = dot(g.row(r), xj);
                    }
                }
                Ok(out)
            }
            Self::CountSketch(c) => {
                let mut out = DenseMatrix::zeros(c.s, n);
                for j in 0..n {
                    let xj = x.col(j);
                    let oj = out.col_mut(j);
                    for ((&row, &sign), &v) in c.row_of.iter().zip(&c.sign_of).zip(xj) {
                        oj[row as usize] += sign * v;
                    }
                }
                Ok(out)
            }
            Self::Composed { outer, inner } => outer.apply(&inner.apply(x)?),
        }
    }

    /// Explicit `s x m` operator matrix. Intended for tests and diagnostics.
    pub fn materialize(&self) -> DenseMatrix {
        match self {
            Self::Gaussian(g) => DenseMatrix::from_fn(g.s, g.m, |r, i| g.entries[r * g.m + i]),
            Self::CountSketch(c) => {
                let mut out = DenseMatrix::zeros(c.s, c.m);
                for (i, (&row, &sign)) in c.row_of.iter().zip(&c.sign_of).enumerate() {
                    out[(row as usize, i)] = sign;
                }
                out
            }
            Self::Composed { outer, inner } => outer
                .apply(&inner.materialize())
                .expect("composition dimensions checked at construction"),
        }
    }

    /// Spectral norm of the explicit operator.
    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(norms(&self.materialize())?.spectral)
    }
}

/// Realized distortion envelope of a sketch on the range of `X`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    /// `sigma_min(Omega X) / sigma_min(X)`.
    pub lo: f64,
    /// `||Omega X||_2 / ||X||_2`.
    pub hi: f64,
}

impl Distortion {
    /// Whether `lo >= sqrt(1 - eps_lo)` and `hi <= sqrt(1 + eps_hi)`.
    pub fn within(&self, eps_lo: f64, eps_hi: f64) -> bool {
        self.lo >= (1.0 - eps_lo).sqrt() && self.hi <= (1.0 + eps_hi).sqrt()
    }
}

pub fn embedding_distortion(op: &SketchOperator, x: &DenseMatrix) -> Result<Distortion> {
    let base = norms(x)?;
    let sketched = norms(&op.apply(x)?)?;
    Ok(Distortion {
        lo: sketched.sigma_min / base.sigma_min,
        hi: sketched.spectral / base.spectral,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_sizes() {
        let p = EmbeddingParams::new(0.5, 0.6, 50).unwrap();
        assert_eq!(gaussian_size(&p), 50);
        let p = EmbeddingParams::new(0.5, 0.6, 1).unwrap();
        assert_eq!(gaussian_size(&p), 1);
        let p = EmbeddingParams::with_eta(0.5, 0.4, 20, 10.0).unwrap();
        assert_eq!(gaussian_size(&p), 110);
    }

    #[test]
    fn countsketch_sizes() {
        assert_eq!(countsketch_size(&EmbeddingParams::new(0.5, 0.6, 50).unwrap()), 17000);
        assert_eq!(countsketch_size(&EmbeddingParams::new(0.5, 0.6, 20).unwrap()), 2800);
        assert_eq!(countsketch_size_raw(1, 1.0, 1.0), 2);
    }

    #[test]
    fn robustness_gaussian_sizes_span_28_to_20() {
        let sizes: Vec<usize> = [0.1, 0.2, 0.3, 0.4]
            .iter()
            .map(|&p| gaussian_size(&EmbeddingParams::new(0.5, p, 20).unwrap()))
            .collect();
        assert_eq!(sizes, vec![28, 20, 20, 20]);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(EmbeddingParams::new(1.0, 0.5, 3).is_err());
        assert!(EmbeddingParams::new(0.5, 0.0, 3).is_err());
        assert!(EmbeddingParams::new(0.5, 1.0, 3).is_err());
    }

    #[test]
    fn countsketch_of_basis_vector() {
        let op = make_countsketch(4, 8, 7).unwrap();
        let SketchOperator::CountSketch(cs) = &op else { unreachable!() };
        for j in 0..8 {
            let e = DenseMatrix::from_fn(8, 1, |i, _| if i == j { 1.0 } else { 0.0 });
            let y = op.apply(&e).unwrap();
            for r in 0..4 {
                let want = if r == cs.row_of()[j] as usize { cs.sign_of()[j] } else { 0.0 };
                assert_eq!(y[(r, 0)], want);
            }
        }
    }

    #[test]
    fn hand_evaluated_countsketch() {
        let cs = CountSketch::from_parts(2, vec![0, 0, 1, 1], vec![1.0, -1.0, 1.0, 1.0]).unwrap();
        let op = SketchOperator::CountSketch(cs);
        let y = op.apply(&DenseMatrix::from_fn(4, 1, |_, _| 1.0)).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn identity_countsketch() {
        let op = SketchOperator::CountSketch(CountSketch::identity(5));
        let x = DenseMatrix::from_fn(5, 2, |i, j| (i + 3 * j) as f64);
        assert_eq!(op.apply(&x).unwrap(), x);
        let d = embedding_distortion(&op, &x).unwrap();
        assert_eq!((d.lo, d.hi), (1.0, 1.0));
    }

    #[test]
    fn composition_dimensions() {
        let op = compose(
            make_gaussian(20, 2800, 1).unwrap(),
            make_countsketch(2800, 20000, 2).unwrap(),
        )
        .unwrap();
        assert_eq!((op.input_dim(), op.output_dim()), (20000, 20));
        let bad = compose(make_gaussian(20, 100, 1).unwrap(), make_countsketch(50, 200, 2).unwrap());
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gaussian_of_zero_is_zero() {
        let op = make_gaussian(3, 10, 5).unwrap();
        assert_eq!(op.apply(&DenseMatrix::zeros(10, 4)).unwrap(), DenseMatrix::zeros(3, 4));
    }

    #[test]
    fn gaussian_scale_is_inverse_sqrt_s() {
        let SketchOperator::Gaussian(g) = make_gaussian(16, 40, 3).unwrap() else {
            unreachable!()
        };
        assert_eq!(g.scale(), 0.25);
    }

    #[test]
    fn oversized_sketch_rejected() {
        assert!(make_gaussian(11, 10, 0).is_err());
        assert!(make_countsketch(0, 10, 0).is_err());
    }

    #[test]
    fn apply_checks_rows() {
        let op = make_countsketch(2, 5, 0).unwrap();
        assert!(op.apply(&DenseMatrix::zeros(4, 1)).is_err());
    }

    #[test]
    fn composed_aggregates() {
        let c = ComposedDistortion::new(0.5, 0.6, 0.5, 0.4);
        assert_eq!(c.eps_s, 0.75);
        assert_eq!(c.eps_b, 1.25);
        assert!((c.p_f - 0.76).abs() < 1e-15);
    }

    #[test]
    fn derived_seeds_differ_and_repeat() {
        let a = derive_seed(42, &[0, 1, 2]);
        assert_eq!(a, derive_seed(42, &[0, 1, 2]));
        assert_ne!(a, derive_seed(42, &[0, 1, 3]));
        assert_ne!(a, derive_seed(43, &[0, 1, 2]));
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
    }
}
