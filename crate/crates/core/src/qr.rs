//! The CholeskyQR family for tall-skinny matrices.
//!
//! Every algorithm is a pipeline of named stages built from [`crate::kernels`]
//! and [`crate::sketch`]. The first failing stage aborts the pipeline and the
//! caller gets an [`AlgorithmFailure`] naming that stage; partial factors are
//! never returned.
//!
//! | id         | pipeline                                                     |
//! |------------|--------------------------------------------------------------|
//! | `cholqr`   | Gram, Cholesky, solve                                        |
//! | `cholqr2`  | `cholqr` twice, `R = Z Y`                                    |
//! | `scholqr`  | Gram + shift, Cholesky, solve                                |
//! | `scholqr3` | `scholqr` then `cholqr2`                                     |
//! | `luc`      | LU, Gram of L, Cholesky, `R = S U`, solve                    |
//! | `luc2`     | `luc` then `cholqr`                                          |
//! | `rhqr`     | sketch X, Householder R, solve                               |
//! | `rhc`      | `rhqr` then `cholqr`                                         |
//! | `slhc`     | LU, Gaussian sketch of L, Householder S, `R = S U`, solve    |
//! | `sslhc`    | as `slhc` with CountSketch followed by Gaussian              |
//! | `slhc3`    | `slhc` then `cholqr2`                                        |
//! | `sslhc3`   | `sslhc` then `cholqr2`                                       |

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    cholesky, gram, householder_r, lu_partial_pivot, norms, tri_solve_right, upper_tri_product,
};
use crate::matrix::{DenseMatrix, UNIT_ROUNDOFF};
use crate::sketch::{
    compose, countsketch_size, derive_seed, gaussian_size, make_countsketch, make_gaussian,
    EmbeddingParams, SketchOperator,
};

/// Name of the stage recorded when the CountSketch is replaced by the identity.
pub const OMEGA1_FALLBACK_STAGE: &str = "warning:omega1-identity";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[serde(rename = "cholqr")]
    CholeskyQr,
    #[serde(rename = "cholqr2")]
    CholeskyQr2,
    #[serde(rename = "scholqr")]
    ShiftedCholeskyQr,
    #[serde(rename = "scholqr3")]
    ShiftedCholeskyQr3,
    Luc,
    Luc2,
    #[serde(rename = "rhqr")]
    RandHouseholderQr,
    Rhc,
    Slhc,
    Sslhc,
    Slhc3,
    Sslhc3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 12] = [
        Self::CholeskyQr,
        Self::CholeskyQr2,
        Self::ShiftedCholeskyQr,
        Self::ShiftedCholeskyQr3,
        Self::Luc,
        Self::Luc2,
        Self::RandHouseholderQr,
        Self::Rhc,
        Self::Slhc,
        Self::Sslhc,
        Self::Slhc3,
        Self::Sslhc3,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::CholeskyQr => "cholqr",
            Self::CholeskyQr2 => "cholqr2",
            Self::ShiftedCholeskyQr => "scholqr",
            Self::ShiftedCholeskyQr3 => "scholqr3",
            Self::Luc => "luc",
            Self::Luc2 => "luc2",
            Self::RandHouseholderQr => "rhqr",
            Self::Rhc => "rhc",
            Self::Slhc => "slhc",
            Self::Sslhc => "sslhc",
            Self::Slhc3 => "slhc3",
            Self::Sslhc3 => "sslhc3",
        }
    }

    /// Display name used in table headers.
    pub fn label(self) -> &'static str {
        match self {
            Self::CholeskyQr => "CholeskyQR",
            Self::CholeskyQr2 => "CholeskyQR2",
            Self::ShiftedCholeskyQr => "SCholeskyQR",
            Self::ShiftedCholeskyQr3 => "SCholeskyQR3",
            Self::Luc => "LUC",
            Self::Luc2 => "LUC2",
            Self::RandHouseholderQr => "RandHouseholderQR",
            Self::Rhc => "RHC",
            Self::Slhc => "SLHC",
            Self::Sslhc => "SSLHC",
            Self::Slhc3 => "SLHC3",
            Self::Sslhc3 => "SSLHC3",
        }
    }

    /// Whether the algorithm draws random sketches.
    pub fn is_randomized(self) -> bool {
        matches!(
            self,
            Self::RandHouseholderQr | Self::Rhc | Self::Slhc | Self::Sslhc | Self::Slhc3 | Self::Sslhc3
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_', '.'], "");
        let alg = match key.as_str() {
            "cholqr" | "choleskyqr" => Self::CholeskyQr,
            "cholqr2" | "choleskyqr2" => Self::CholeskyQr2,
            "scholqr" | "shiftedcholeskyqr" | "scholeskyqr" => Self::ShiftedCholeskyQr,
            "scholqr3" | "shiftedcholeskyqr3" | "scholeskyqr3" => Self::ShiftedCholeskyQr3,
            "luc" | "lucholeskyqr" => Self::Luc,
            "luc2" | "lucholeskyqr2" => Self::Luc2,
            "rhqr" | "randomizedhouseholderqr" | "randhouseholderqr" => Self::RandHouseholderQr,
            "rhc" | "randhouseholdercholesky" => Self::Rhc,
            "slhc" => Self::Slhc,
            "sslhc" => Self::Sslhc,
            "slhc3" => Self::Slhc3,
            "sslhc3" => Self::Sslhc3,
            _ => return Err(Error::Config(format!("unknown algorithm id `{s}`"))),
        };
        Ok(alg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SketchMode {
    None,
    Single,
    Multi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleSketch {
    pub epsilon: f64,
    pub p: f64,
    pub s: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiSketch {
    pub epsilon1: f64,
    pub p1: f64,
    pub s1: usize,
    pub epsilon2: f64,
    pub p2: f64,
    pub s2: usize,
}

/// Sketch parameters shared by the randomized algorithms.
///
/// `slhc*` always use `single`, `sslhc*` always use `multi`; `mode` selects
/// which one `rhqr`/`rhc` use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    pub mode: SketchMode,
    pub single: SingleSketch,
    pub multi: MultiSketch,
    pub seed: u64,
}

impl SketchConfig {
    /// Sizes derived from the Gaussian and CountSketch sizing rules.
    pub fn sized(
        n: usize,
        single: (f64, f64),
        multi: (f64, f64, f64, f64),
        eta: f64,
        seed: u64,
    ) -> Result<Self> {
        let sp = EmbeddingParams::with_eta(single.0, single.1, n, eta)?;
        let p1 = EmbeddingParams::with_eta(multi.0, multi.1, n, eta)?;
        let p2 = EmbeddingParams::with_eta(multi.2, multi.3, n, eta)?;
        Ok(Self {
            mode: SketchMode::Multi,
            single: SingleSketch {
                epsilon: sp.epsilon,
                p: sp.p,
                s: gaussian_size(&sp),
            },
            multi: MultiSketch {
                epsilon1: p1.epsilon,
                p1: p1.p,
                s1: countsketch_size(&p1),
                epsilon2: p2.epsilon,
                p2: p2.p,
                s2: gaussian_size(&p2),
            },
            seed,
        })
    }

    /// `eps = 0.5, p = 0.6` single; `eps1 = eps2 = 0.5, p1 = 0.6, p2 = 0.4` multi.
    pub fn experiment_defaults(n: usize, seed: u64) -> Self {
        Self::sized(n, (0.5, 0.6), (0.5, 0.6, 0.5, 0.4), 1.0, seed)
            .expect("default parameters are valid")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: SketchMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub seconds: f64,
    pub breakdown: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QrResult {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub stages: Vec<StageRecord>,
}

impl QrResult {
    pub fn stage_names(&self) -> impl Iterator<Item = &str> {
        self.stages.iter().map(|s| s.name.as_str())
    }

    pub fn total_seconds(&self) -> f64 {
        self.stages.iter().map(|s| s.seconds).sum()
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{algorithm} failed in stage `{stage}`: {error}")]
pub struct AlgorithmFailure {
    pub algorithm: Algorithm,
    pub stage: String,
    pub error: Error,
    /// Stages up to and including the failing one.
    pub stages: Vec<StageRecord>,
}

impl AlgorithmFailure {
    /// Cholesky-type breakdown, as opposed to singular factors or overflow.
    pub fn is_cholesky_breakdown(&self) -> bool {
        matches!(self.error, Error::Breakdown { .. })
    }
}

type Factors = (DenseMatrix, DenseMatrix);

struct Pipeline {
    algorithm: Algorithm,
    prefix: Vec<&'static str>,
    stages: Vec<StageRecord>,
}

impl Pipeline {
    fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            prefix: Vec::new(),
            stages: Vec::new(),
        }
    }

    fn full_name(&self, name: &str) -> String {
        let mut s = self.prefix.join("/");
        if !s.is_empty() {
            s.push('/');
        }
        s.push_str(name);
        s
    }

    fn step<T>(
        &mut self,
        name: &'static str,
        f: impl FnOnce() -> Result<T>,
    ) -> std::result::Result<T, AlgorithmFailure> {
        let start = Instant::now();
        let out = f();
        let seconds = start.elapsed().as_secs_f64();
        let full = self.full_name(name);
        self.stages.push(StageRecord {
            name: full.clone(),
            seconds,
            breakdown: out.is_err(),
        });
        out.map_err(|error| AlgorithmFailure {
            algorithm: self.algorithm,
            stage: full,
            error,
            stages: self.stages.clone(),
        })
    }

    fn note(&mut self, name: &'static str) {
        let full = self.full_name(name);
        self.stages.push(StageRecord {
            name: full,
            seconds: 0.0,
            breakdown: false,
        });
    }

    fn scoped<T>(&mut self, scope: &'static str, f: impl FnOnce(&mut Self) -> T) -> T {
        self.prefix.push(scope);
        let out = f(self);
        self.prefix.pop();
        out
    }

    fn finish(self, factors: Factors) -> QrResult {
        QrResult {
            q: factors.0,
            r: factors.1,
            stages: self.stages,
        }
    }
}

type Staged<T> = std::result::Result<T, AlgorithmFailure>;

fn check_tall(alg: Algorithm, x: &DenseMatrix) -> Staged<()> {
    if x.rows() < x.cols() || x.cols() == 0 {
        return Err(AlgorithmFailure {
            algorithm: alg,
            stage: "input".into(),
            error: Error::DimensionMismatch {
                expected: "m >= n >= 1".into(),
                found: format!("{:?}", x.shape()),
            },
            stages: Vec::new(),
        });
    }
    Ok(())
}

fn config_failure(alg: Algorithm, msg: String) -> AlgorithmFailure {
    AlgorithmFailure {
        algorithm: alg,
        stage: "config".into(),
        error: Error::Config(msg),
        stages: Vec::new(),
    }
}

fn cholqr_stages(p: &mut Pipeline, x: &DenseMatrix) -> Staged<Factors> {
    let g = p.step("gram", || gram(x))?;
    let r = p.step("cholesky", || cholesky(&g))?;
    let q = p.step("solve", || tri_solve_right(x, &r))?;
    Ok((q, r))
}

fn cholqr2_stages(p: &mut Pipeline, x: &DenseMatrix) -> Staged<Factors> {
    let (w, y) = p.scoped("pass1", |p| cholqr_stages(p, x))?;
    let (q, z) = p.scoped("pass2", |p| cholqr_stages(p, &w))?;
    let r = p.step("r-accumulate", || upper_tri_product(&z, &y))?;
    Ok((q, r))
}

/// Shift `11 (m n u + (n + 1) u) ||X||_g^2` with `||X||_g` the largest column norm.
pub fn compute_shift(x: &DenseMatrix) -> f64 {
    let (m, n) = (x.rows() as f64, x.cols() as f64);
    let g = (0..x.cols())
        .map(|j| crate::kernels::norm2(x.col(j)))
        .fold(0.0f64, f64::max);
    11.0 * (m * n * UNIT_ROUNDOFF + (n + 1.0) * UNIT_ROUNDOFF) * g * g
}

fn scholqr_stages(p: &mut Pipeline, x: &DenseMatrix, shift: f64) -> Staged<Factors> {
    let mut g = p.step("gram", || gram(x))?;
    for i in 0..g.cols() {
        g[(i, i)] += shift;
    }
    let r = p.step("cholesky", || cholesky(&g))?;
    let q = p.step("solve", || tri_solve_right(x, &r))?;
    Ok((q, r))
}

fn luc_stages(p: &mut Pipeline, x: &DenseMatrix) -> Staged<Factors> {
    let lu = p.step("lu", || lu_partial_pivot(x))?;
    let g = p.step("gram-of-L", || gram(&lu.l))?;
    let s = p.step("cholesky-of-L", || cholesky(&g))?;
    let r = p.step("r-accumulate", || upper_tri_product(&s, &lu.u))?;
    let q = p.step("solve", || tri_solve_right(x, &r))?;
    Ok((q, r))
}

fn single_operator(alg: Algorithm, cfg: &SketchConfig, m: usize, n: usize) -> Staged<SingleSketch> {
    let s = cfg.single;
    if s.s < n || s.s > m {
        return Err(config_failure(
            alg,
            format!("single sketch size s = {} must satisfy n = {n} <= s <= m = {m}", s.s),
        ));
    }
    Ok(s)
}

/// Builds the multi-sketch, falling back to `Omega1 = I` when `s1 > m`.
fn multi_operator(
    p: &mut Pipeline,
    cfg: &SketchConfig,
    m: usize,
    n: usize,
) -> Staged<SketchOperator> {
    let ms = cfg.multi;
    if ms.s2 < n || ms.s2 > ms.s1 {
        return Err(config_failure(
            p.algorithm,
            format!(
                "multi sketch sizes must satisfy n = {n} <= s2 = {} <= s1 = {}",
                ms.s2, ms.s1
            ),
        ));
    }
    let seed1 = derive_seed(cfg.seed, &[2]);
    let seed2 = derive_seed(cfg.seed, &[3]);
    if ms.s1 > m {
        p.note(OMEGA1_FALLBACK_STAGE);
        if ms.s2 > m {
            return Err(config_failure(
                p.algorithm,
                format!("s2 = {} exceeds m = {m}", ms.s2),
            ));
        }
        return p.step("sketch-build", || make_gaussian(ms.s2, m, seed2));
    }
    p.step("sketch-build", || {
        compose(
            make_gaussian(ms.s2, ms.s1, seed2)?,
            make_countsketch(ms.s1, m, seed1)?,
        )
    })
}

fn sketch_operator(
    p: &mut Pipeline,
    cfg: &SketchConfig,
    multi: bool,
    m: usize,
    n: usize,
) -> Staged<SketchOperator> {
    if multi {
        multi_operator(p, cfg, m, n)
    } else {
        let s = single_operator(p.algorithm, cfg, m, n)?;
        let seed = derive_seed(cfg.seed, &[1]);
        p.step("sketch-build", || make_gaussian(s.s, m, seed))
    }
}

fn rhqr_stages(p: &mut Pipeline, x: &DenseMatrix, cfg: &SketchConfig) -> Staged<Factors> {
    let multi = match cfg.mode {
        SketchMode::Multi => true,
        SketchMode::Single => false,
        SketchMode::None => {
            return Err(config_failure(
                p.algorithm,
                "randomized Householder QR needs a sketch mode".into(),
            ))
        }
    };
    let op = sketch_operator(p, cfg, multi, x.rows(), x.cols())?;
    let k = p.step("sketch", || op.apply(x))?;
    let r = p.step("householder", || householder_r(&k))?;
    let q = p.step("solve", || tri_solve_right(x, &r))?;
    Ok((q, r))
}

fn lu_householder_stages(
    p: &mut Pipeline,
    x: &DenseMatrix,
    cfg: &SketchConfig,
    multi: bool,
) -> Staged<Factors> {
    let op = sketch_operator(p, cfg, multi, x.rows(), x.cols())?;
    let lu = p.step("lu", || lu_partial_pivot(x))?;
    let ls = p.step("sketch", || op.apply(&lu.l))?;
    let s = p.step("householder", || householder_r(&ls))?;
    let r = p.step("r-accumulate", || upper_tri_product(&s, &lu.u))?;
    let q = p.step("solve", || tri_solve_right(x, &r))?;
    Ok((q, r))
}

fn accumulate(p: &mut Pipeline, z: &DenseMatrix, y: &DenseMatrix) -> Staged<DenseMatrix> {
    p.step("r-accumulate", || upper_tri_product(z, y))
}

fn run_stages(alg: Algorithm, p: &mut Pipeline, x: &DenseMatrix, cfg: &SketchConfig) -> Staged<Factors> {
    use Algorithm::*;
    match alg {
        CholeskyQr => cholqr_stages(p, x),
        CholeskyQr2 => cholqr2_stages(p, x),
        ShiftedCholeskyQr => {
            let shift = compute_shift(x);
            scholqr_stages(p, x, shift)
        }
        ShiftedCholeskyQr3 => {
            let shift = compute_shift(x);
            let (w, y) = p.scoped("shifted", |p| scholqr_stages(p, x, shift))?;
            let (q, z) = p.scoped("cholqr2", |p| cholqr2_stages(p, &w))?;
            Ok((q, accumulate(p, &z, &y)?))
        }
        Luc => luc_stages(p, x),
        Luc2 => {
            let (w, y) = p.scoped("luc", |p| luc_stages(p, x))?;
            let (q, z) = p.scoped("cholqr", |p| cholqr_stages(p, &w))?;
            Ok((q, accumulate(p, &z, &y)?))
        }
        RandHouseholderQr => rhqr_stages(p, x, cfg),
        Rhc => {
            let (w, y) = p.scoped("rhqr", |p| rhqr_stages(p, x, cfg))?;
            let (q, z) = p.scoped("cholqr", |p| cholqr_stages(p, &w))?;
            Ok((q, accumulate(p, &z, &y)?))
        }
        Slhc => lu_householder_stages(p, x, cfg, false),
        Sslhc => lu_householder_stages(p, x, cfg, true),
        Slhc3 | Sslhc3 => {
            let multi = alg == Sslhc3;
            let scope = if multi { "sslhc" } else { "slhc" };
            let (w, y) = p.scoped(scope, |p| lu_householder_stages(p, x, cfg, multi))?;
            let (q, z) = p.scoped("cholqr2", |p| cholqr2_stages(p, &w))?;
            Ok((q, accumulate(p, &z, &y)?))
        }
    }
}

/// Runs `alg` on `x`. Deterministic in `(x, cfg)`.
pub fn run(alg: Algorithm, x: &DenseMatrix, cfg: &SketchConfig) -> Staged<QrResult> {
    check_tall(alg, x)?;
    let mut p = Pipeline::new(alg);
    let factors = run_stages(alg, &mut p, x, cfg)?;
    Ok(p.finish(factors))
}

fn no_sketch() -> SketchConfig {
    SketchConfig {
        mode: SketchMode::None,
        single: SingleSketch {
            epsilon: 0.5,
            p: 0.6,
            s: 0,
        },
        multi: MultiSketch {
            epsilon1: 0.5,
            p1: 0.6,
            s1: 0,
            epsilon2: 0.5,
            p2: 0.4,
            s2: 0,
        },
        seed: 0,
    }
}

pub fn cholesky_qr(x: &DenseMatrix) -> Staged<QrResult> {
    run(Algorithm::CholeskyQr, x, &no_sketch())
}

pub fn cholesky_qr2(x: &DenseMatrix) -> Staged<QrResult> {
    run(Algorithm::CholeskyQr2, x, &no_sketch())
}

/// Shifted CholeskyQR with an explicit shift.
pub fn shifted_cholesky_qr(x: &DenseMatrix, shift: f64) -> Staged<QrResult> {
    let alg = Algorithm::ShiftedCholeskyQr;
    check_tall(alg, x)?;
    if !(shift > 0.0) {
        return Err(config_failure(alg, format!("shift {shift} must be positive")));
    }
    let mut p = Pipeline::new(alg);
    let f = scholqr_stages(&mut p, x, shift)?;
    Ok(p.finish(f))
}

pub fn shifted_cholesky_qr3(x: &DenseMatrix) -> Staged<QrResult> {
    run(Algorithm::ShiftedCholeskyQr3, x, &no_sketch())
}

pub fn lu_cholesky_qr(x: &DenseMatrix) -> Staged<QrResult> {
    run(Algorithm::Luc, x, &no_sketch())
}

pub fn lu_cholesky_qr2(x: &DenseMatrix) -> Staged<QrResult> {
    run(Algorithm::Luc2, x, &no_sketch())
}

pub fn randomized_householder_qr(x: &DenseMatrix, cfg: &SketchConfig) -> Staged<QrResult> {
    run(Algorithm::RandHouseholderQr, x, cfg)
}

pub fn rhc(x: &DenseMatrix, cfg: &SketchConfig) -> Staged<QrResult> {
    run(Algorithm::Rhc, x, cfg)
}

pub fn slhc(x: &DenseMatrix, cfg: &SketchConfig) -> Staged<QrResult> {
    run(Algorithm::Slhc, x, cfg)
}

pub fn sslhc(x: &DenseMatrix, cfg: &SketchConfig) -> Staged<QrResult> {
    run(Algorithm::Sslhc, x, cfg)
}

pub fn slhc3(x: &DenseMatrix, cfg: &SketchConfig) -> Staged<QrResult> {
    run(Algorithm::Slhc3, x, cfg)
}

pub fn sslhc3(x: &DenseMatrix, cfg: &SketchConfig) -> Staged<QrResult> {
    run(Algorithm::Sslhc3, x, cfg)
}

/// Condition numbers of the LU factors of `x`, for post-run diagnostics.
pub fn lu_conditioning(x: &DenseMatrix) -> Result<(f64, f64)> {
    let lu = lu_partial_pivot(x)?;
    Ok((norms(&lu.l)?.kappa2, norms(&lu.u)?.kappa2))
}
