//! Seeded test-matrix families with controllable conditioning, and a small
//! binary/CSV fixture format.
//!
//! | family            | `param`                  | construction                                  |
//! |-------------------|--------------------------|-----------------------------------------------|
//! | `svd_conditioned` | `sigma` in (0, 1]        | `O diag(sigma^(i/(n-1))) H^T`, stacked        |
//! | `lower_tri_stack` | `a <= 0`                 | unit-diagonal block with `a` below, stacked   |
//! | `arrowhead`       | `beta` in (0, 1]         | `-5` first row spike over `[E; 0]`            |
//! | `sparse_random`   | target `kappa >= 1`      | random sparse pattern, spectrum reshaped      |

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{householder_qr, jacobi_svd};
use crate::matrix::DenseMatrix;
use crate::sketch::{derive_seed, rng_from_seed};

pub const DEFAULT_BLOCKS: usize = 10;
pub const DEFAULT_DENSITY: f64 = 0.05;
pub const SPARSE_MAX_ATTEMPTS: usize = 5;

/// Header magic of the binary fixture format.
pub const BINARY_MAGIC: &[u8; 8] = b"CHQRMAT1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SvdConditioned,
    LowerTriStack,
    Arrowhead,
    SparseRandom,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::SvdConditioned,
        Family::LowerTriStack,
        Family::Arrowhead,
        Family::SparseRandom,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Family::SvdConditioned => "svd_conditioned",
            Family::LowerTriStack => "lower_tri_stack",
            Family::Arrowhead => "arrowhead",
            Family::SparseRandom => "sparse_random",
        }
    }

    /// Name of the swept parameter, used as a column header.
    pub fn param_name(self) -> &'static str {
        match self {
            Family::SvdConditioned => "sigma",
            Family::LowerTriStack => "a",
            Family::Arrowhead => "beta",
            Family::SparseRandom => "kappa",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.id() == key)
            .or(match key.as_str() {
                "svd" => Some(Family::SvdConditioned),
                "lower_tri" | "lowertri" => Some(Family::LowerTriStack),
                "sparse" => Some(Family::SparseRandom),
                _ => None,
            })
            .ok_or_else(|| Error::Config(format!("unknown matrix family `{s}`")))
    }
}

/// Everything needed to regenerate a test matrix bit for bit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    /// `sigma`, `a`, `beta` or the target condition number, depending on `family`.
    pub param: f64,
    /// Number of stacked copies for `svd_conditioned`.
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    /// Diagonal of the `lower_tri_stack` block.
    #[serde(default = "default_diag")]
    pub diag: f64,
    /// Fill ratio for `sparse_random`.
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_blocks() -> usize {
    DEFAULT_BLOCKS
}

fn default_diag() -> f64 {
    1.0
}

fn default_density() -> f64 {
    DEFAULT_DENSITY
}

impl MatrixSpec {
    pub fn new(family: Family, m: usize, n: usize, param: f64, seed: u64) -> Self {
        Self {
            family,
            m,
            n,
            param,
            blocks: DEFAULT_BLOCKS,
            diag: 1.0,
            density: DEFAULT_DENSITY,
            seed,
        }
    }

    pub fn with_param(mut self, param: f64) -> Self {
        self.param = param;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_blocks(mut self, blocks: usize) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    pub fn with_diag(mut self, diag: f64) -> Self {
        self.diag = diag;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, p) = (self.m, self.n, self.param);
        if n == 0 || m < n {
            return Err(Error::DimensionMismatch {
                expected: "m >= n >= 1".into(),
                found: format!("{m}x{n}"),
            });
        }
        let bad = |what: &str| Err(Error::Config(format!("{what} (got {p})")));
        match self.family {
            Family::SvdConditioned => {
                if !(p > 0.0 && p <= 1.0) {
                    return bad("sigma must lie in (0, 1]");
                }
                if self.blocks == 0 || m % self.blocks != 0 || m / self.blocks < n {
                    return Err(Error::DimensionMismatch {
                        expected: format!("m divisible into {} blocks of at least {n} rows", self.blocks),
                        found: format!("m = {m}"),
                    });
                }
            }
            Family::LowerTriStack => {
                if !(p <= 0.0) {
                    return bad("a must be <= 0");
                }
                if m % n != 0 {
                    return Err(Error::DimensionMismatch {
                        expected: format!("m a multiple of n = {n}"),
                        found: format!("m = {m}"),
                    });
                }
            }
            Family::Arrowhead => {
                if !(p > 0.0 && p <= 1.0) {
                    return bad("beta must lie in (0, 1]");
                }
            }
            Family::SparseRandom => {
                if !(p >= 1.0) || !p.is_finite() {
                    return bad("target condition number must be >= 1");
                }
                if !(self.density > 0.0 && self.density <= 1.0) {
                    return Err(Error::Config(format!(
                        "density must lie in (0, 1] (got {})",
                        self.density
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generates the matrix described by `spec`.
pub fn generate(spec: &MatrixSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    match spec.family {
        Family::SvdConditioned => gen_svd_conditioned(spec),
        Family::LowerTriStack => Ok(gen_lower_tri_stack(spec.param, spec.diag, spec.n, spec.m / spec.n)),
        Family::Arrowhead => Ok(gen_arrowhead(spec.param, spec.m, spec.n)),
        Family::SparseRandom => gen_sparse_random(spec.m, spec.n, spec.density, spec.param, spec.seed),
    }
}

/// `ladder[i] = t^(i/(n-1))`, running from 1 down to `t`.
fn geometric_ladder(t: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let ln = t.ln();
    (0..n)
        .map(|i| {
            if i == n - 1 {
                t
            } else {
                (ln * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_raw(rows, cols, data)
}

/// `rows x cols` matrix with orthonormal columns, Haar distributed.
pub fn random_orthonormal(rows: usize, cols: usize, seed: u64) -> Result<DenseMatrix> {
    // householder_qr already makes diag(R) nonnegative, which is the sign fix
    householder_qr(&gaussian_matrix(rows, cols, seed)).map(|(q, _)| q)
}

/// `O diag(1, sigma^(1/(n-1)), ..., sigma) H^T` stacked `blocks` times.
pub fn gen_svd_conditioned(spec: &MatrixSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let n = spec.n;
    let block_rows = spec.m / spec.blocks;
    let o = random_orthonormal(block_rows, n, derive_seed(spec.seed, &[1]))?;
    let h = random_orthonormal(n, n, derive_seed(spec.seed, &[2]))?;
    let ladder = geometric_ladder(spec.param, n);
    let os = DenseMatrix::from_fn(block_rows, n, |i, j| o[(i, j)] * ladder[j]);
    Ok(os.matmul(&h.transpose())?.vstack_repeat(spec.blocks))
}

/// Square block with `diag` on the diagonal and `a` strictly below, stacked.
pub fn gen_lower_tri_stack(a: f64, diag: f64, n: usize, blocks: usize) -> DenseMatrix {
    let f = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => diag,
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => 0.0,
    });
    f.vstack_repeat(blocks)
}

/// `-5` on columns `2..n` of the first row plus `diag(beta^(i/(n-1)))` on
/// the leading `n x n` block, zeros below.
pub fn gen_arrowhead(beta: f64, m: usize, n: usize) -> DenseMatrix {
    let e = geometric_ladder(beta, n);
    DenseMatrix::from_fn(m, n, |i, j| {
        let spike = if i == 0 && j > 0 { -5.0 } else { 0.0 };
        let diag = if i == j { e[j] } else { 0.0 };
        spike + diag
    })
}

/// Random sparsity pattern with each entry present independently with
/// probability `density`, standard normal values.
pub fn gen_sparse_pattern(m: usize, n: usize, density: f64, seed: u64) -> DenseMatrix {
    let mut rng = rng_from_seed(seed);
    let mut x = DenseMatrix::zeros(m, n);
    for v in x.as_mut_slice() {
        if rng.random::<f64>() < density {
            *v = rng.sample(StandardNormal);
        }
    }
    x
}

/// Sparse pattern with its singular values replaced by the geometric
/// ladder `1 ... 1/kappa`. Patterns that are (nearly) rank deficient are
/// redrawn from the next derived seed.
pub fn gen_sparse_random(m: usize, n: usize, density: f64, kappa: f64, seed: u64) -> Result<DenseMatrix> {
    MatrixSpec::new(Family::SparseRandom, m, n, kappa, seed)
        .with_density(density)
        .validate()?;
    let ladder = geometric_ladder(1.0 / kappa, n);
    for attempt in 0..SPARSE_MAX_ATTEMPTS {
        let pattern = gen_sparse_pattern(m, n, density, derive_seed(seed, &[attempt as u64]));
        if let Some(x) = reshape_spectrum(&pattern, &ladder) {
            return Ok(x);
        }
    }
    Err(Error::GenerationFailed {
        attempts: SPARSE_MAX_ATTEMPTS,
    })
}

fn reshape_spectrum(pattern: &DenseMatrix, ladder: &[f64]) -> Option<DenseMatrix> {
    let (q, r) = householder_qr(pattern).ok()?;
    let (u, sigma, v) = jacobi_svd(&r).ok()?;
    // singular vectors of a nearly singular pattern are not trustworthy
    if sigma[sigma.len() - 1] < 1e-8 * sigma[0] {
        return None;
    }
    let n = ladder.len();
    let us = DenseMatrix::from_fn(n, n, |i, j| u[(i, j)] * ladder[j]);
    let x = q.matmul(&us.matmul(&v.transpose()).ok()?).ok()?;
    x.is_finite().then_some(x)
}

/// Writes the binary fixture: magic, rows and cols as u64 LE, then the
/// column-major payload as f64 LE.
pub fn write_binary<W: Write>(x: &DenseMatrix, mut w: W) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(x.rows() as u64).to_le_bytes())?;
    w.write_all(&(x.cols() as u64).to_le_bytes())?;
    for v in x.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<DenseMatrix> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::UnsupportedFormat("bad matrix file magic".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::UnsupportedFormat("matrix header overflows".into()))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut word)?;
        data.push(f64::from_le_bytes(word));
    }
    DenseMatrix::from_col_major(rows, cols, data)
}

/// One line per row, comma separated, shortest round-trip formatting.
pub fn write_csv<W: Write>(x: &DenseMatrix, mut w: W) -> Result<()> {
    for i in 0..x.rows() {
        let line: Vec<String> = (0..x.cols()).map(|j| format!("{:?}", x[(i, j)])).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::UnsupportedFormat(format!("bad csv value `{t}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    DenseMatrix::from_rows(&refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::norms;

    #[test]
    fn flat_ladder_is_perfectly_conditioned() {
        let spec = MatrixSpec::new(Family::SvdConditioned, 200, 8, 1.0, 3);
        let k = norms(&generate(&spec).unwrap()).unwrap().kappa2;
        assert!((1.0..=1.0 + 1e-10).contains(&k), "{k}");
    }

    #[test]
    fn svd_conditioned_hits_target() {
        for sigma in [1e-6, 1e-12] {
            let spec = MatrixSpec::new(Family::SvdConditioned, 400, 20, sigma, 11);
            let k = norms(&generate(&spec).unwrap()).unwrap().kappa2;
            assert!(k > 1.0 / sigma / 3.0 && k < 3.0 / sigma, "{sigma} -> {k}");
        }
    }

    #[test]
    fn svd_conditioned_rejects_bad_blocks() {
        let spec = MatrixSpec::new(Family::SvdConditioned, 105, 5, 0.1, 0);
        assert!(matches!(generate(&spec), Err(Error::DimensionMismatch { .. })));
        let spec = MatrixSpec::new(Family::SvdConditioned, 40, 5, 0.1, 0);
        assert!(matches!(generate(&spec), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn lower_tri_structure() {
        let x = gen_lower_tri_stack(-0.7, 1.0, 4, 3);
        assert_eq!(x.shape(), (12, 4));
        for b in 0..3 {
            for i in 0..4 {
                for j in 0..4 {
                    let v = x[(4 * b + i, j)];
                    match i.cmp(&j) {
                        std::cmp::Ordering::Less => assert_eq!(v, 0.0),
                        std::cmp::Ordering::Equal => assert_eq!(v, 1.0),
                        std::cmp::Ordering::Greater => assert_eq!(v, -0.7),
                    }
                }
            }
        }
    }

    #[test]
    fn lower_tri_zero_a_is_scaled_identity() {
        let x = gen_lower_tri_stack(0.0, 100.0, 5, 2);
        assert!((norms(&x).unwrap().kappa2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn arrowhead_layout() {
        let x = gen_arrowhead(1e-4, 10, 3);
        assert_eq!(x[(0, 0)], 1.0);
        assert_eq!(x[(0, 1)], -5.0);
        assert_eq!(x[(0, 2)], -5.0);
        assert!((x[(1, 1)] - 1e-2).abs() < 1e-16);
        assert_eq!(x[(2, 2)], 1e-4);
        assert!((3..10).all(|i| (0..3).all(|j| x[(i, j)] == 0.0)));
    }

    #[test]
    fn sparse_flat_spectrum() {
        let x = gen_sparse_random(300, 6, 1.0, 1.0, 5).unwrap();
        let k = norms(&x).unwrap().kappa2;
        assert!((1.0..=1.01).contains(&k), "{k}");
    }

    #[test]
    fn sparse_hits_target_and_is_deterministic() {
        let a = gen_sparse_random(1000, 10, 0.05, 1e8, 9).unwrap();
        let b = gen_sparse_random(1000, 10, 0.05, 1e8, 9).unwrap();
        assert_eq!(a, b);
        let k = norms(&a).unwrap().kappa2;
        assert!(k > 1e8 / 3.0 && k < 3e8, "{k}");
    }

    #[test]
    fn sparse_fails_when_pattern_is_always_deficient() {
        // 1 nonzero expected per 1000 entries: some column is empty every time
        let r = gen_sparse_random(40, 10, 1e-3, 10.0, 1);
        assert_eq!(r, Err(Error::GenerationFailed { attempts: SPARSE_MAX_ATTEMPTS }));
    }

    #[test]
    fn family_parsing() {
        for f in Family::ALL {
            assert_eq!(f.id().parse::<Family>().unwrap(), f);
        }
        assert_eq!("lower-tri".parse::<Family>().unwrap(), Family::LowerTriStack);
        assert!("nope".parse::<Family>().is_err());
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let x = gen_arrowhead(1e-9, 7, 3).scale(std::f64::consts::PI);
        let mut buf = Vec::new();
        write_binary(&x, &mut buf).unwrap();
        assert_eq!(&buf[..8], BINARY_MAGIC);
        assert_eq!(buf.len(), 24 + 8 * 21);
        assert_eq!(read_binary(buf.as_slice()).unwrap(), x);
        let mut csv = Vec::new();
        write_csv(&x, &mut csv).unwrap();
        assert_eq!(read_csv(csv.as_slice()).unwrap(), x);
        buf[0] = b'X';
        assert!(matches!(read_binary(buf.as_slice()), Err(Error::UnsupportedFormat(_))));
    }
}
