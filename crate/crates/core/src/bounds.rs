//! Measured quality metrics and the computable rounding-error bounds and
//! assumption checks for the algorithm family.
//!
//! Most bounds are stated in terms of the common quantity
//! `c(m, n) = m n u + n (n + 1) u`, exposed as [`base_term`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::gram;
use crate::matrix::{DenseMatrix, UNIT_ROUNDOFF};
use crate::qr::{Algorithm, SketchConfig};
use crate::sketch::{gaussian_norm_bound, ComposedDistortion};

/// Constant used for the Gaussian spectral-norm bound when the operator is
/// not measured.
pub const GAUSSIAN_NORM_CONSTANT: f64 = 1.1;

/// `||Q^T Q - I||_F`.
pub fn orthogonality(q: &DenseMatrix) -> f64 {
    let mut g = match gram(q) {
        Ok(g) => g,
        Err(_) => return f64::INFINITY,
    };
    for i in 0..g.cols() {
        g[(i, i)] -= 1.0;
    }
    g.frobenius_norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// `||Q R - X||_F`.
    pub absolute: f64,
    /// `||Q R - X||_F / ||X||_F`.
    pub relative: f64,
}

pub fn residual(q: &DenseMatrix, r: &DenseMatrix, x: &DenseMatrix) -> Result<Residual> {
    let absolute = q.matmul(r)?.sub(x)?.frobenius_norm();
    let xf = x.frobenius_norm();
    Ok(Residual {
        absolute,
        relative: if xf == 0.0 { absolute } else { absolute / xf },
    })
}

/// `m n u + n (n + 1) u`.
pub fn base_term(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    m * n * UNIT_ROUNDOFF + n * (n + 1.0) * UNIT_ROUNDOFF
}

/// `6 (m n u + n (n + 1) u)`: orthogonality bound of the three-step
/// algorithms (SCholeskyQR3, SLHC3, SSLHC3).
pub fn orth_bound(m: usize, n: usize) -> f64 {
    6.0 * base_term(m, n)
}

/// `6.5 (m n u + n (n + 1) u)` for LUC2.
pub fn luc2_orth_bound(m: usize, n: usize) -> f64 {
    6.5 * base_term(m, n)
}

/// RHC orthogonality bound `5445 / (25 sqrt((1-eps_s)/(1+eps_b)) - 3)^2 * c(m, n)`.
pub fn rhc_orth_bound(m: usize, n: usize, eps_s: f64, eps_b: f64) -> f64 {
    let d = 25.0 * ((1.0 - eps_s) / (1.0 + eps_b)).sqrt() - 3.0;
    5445.0 / (d * d) * base_term(m, n)
}

/// Inputs shared by the residual bounds and the assumption checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub m: usize,
    pub n: usize,
    pub u: f64,
    pub eps1: f64,
    pub eps_s: f64,
    pub eps_b: f64,
    pub p_f: f64,
    pub eps: f64,
    pub p: f64,
    pub s: usize,
    pub s1: usize,
    pub s2: usize,
    /// Spectral norm of the Gaussian operator (`Omega2` in multi mode, `Omega` in single mode).
    pub norm_omega2: f64,
    /// Frobenius norm of the CountSketch, at most `sqrt(m)`.
    pub norm_omega1_f: f64,
    /// Spectral norm of the CountSketch; defaults to the Frobenius bound.
    pub norm_omega1_2: f64,
    pub kappa_l: Option<f64>,
    pub kappa_u: Option<f64>,
}

impl BoundInputs {
    /// Multi-sketch inputs with the Gaussian norm taken from its probabilistic bound.
    #[allow(clippy::too_many_arguments)]
    pub fn multi(m: usize, n: usize, eps1: f64, p1: f64, eps2: f64, p2: f64, s1: usize, s2: usize) -> Self {
        let c = ComposedDistortion::new(eps1, p1, eps2, p2);
        let sqrt_m = (m as f64).sqrt();
        Self {
            m,
            n,
            u: UNIT_ROUNDOFF,
            eps1,
            eps_s: c.eps_s,
            eps_b: c.eps_b,
            p_f: c.p_f,
            eps: eps1,
            p: p1,
            s: s2,
            s1,
            s2,
            norm_omega2: gaussian_norm_bound(s1.min(m), s2, GAUSSIAN_NORM_CONSTANT),
            norm_omega1_f: sqrt_m,
            norm_omega1_2: sqrt_m,
            kappa_l: None,
            kappa_u: None,
        }
    }

    /// Single-sketch inputs.
    pub fn single(m: usize, n: usize, eps: f64, p: f64, s: usize) -> Self {
        let sqrt_m = (m as f64).sqrt();
        Self {
            m,
            n,
            u: UNIT_ROUNDOFF,
            eps1: eps,
            eps_s: eps,
            eps_b: eps,
            p_f: p,
            eps,
            p,
            s,
            s1: m,
            s2: s,
            norm_omega2: gaussian_norm_bound(m, s, GAUSSIAN_NORM_CONSTANT),
            norm_omega1_f: sqrt_m,
            norm_omega1_2: sqrt_m,
            kappa_l: None,
            kappa_u: None,
        }
    }

    pub fn from_config(cfg: &SketchConfig, m: usize, n: usize, multi: bool) -> Self {
        if multi {
            let ms = cfg.multi;
            Self::multi(m, n, ms.epsilon1, ms.p1, ms.epsilon2, ms.p2, ms.s1, ms.s2)
        } else {
            let ss = cfg.single;
            Self::single(m, n, ss.epsilon, ss.p, ss.s)
        }
    }

    pub fn with_lu_conditioning(mut self, kappa_l: f64, kappa_u: f64) -> Self {
        self.kappa_l = Some(kappa_l);
        self.kappa_u = Some(kappa_u);
        self
    }

    fn base(&self) -> f64 {
        let (m, n) = (self.m as f64, self.n as f64);
        m * n * self.u + n * (n + 1.0) * self.u
    }

    /// `t` of the multi-sketch analysis.
    pub fn t(&self) -> f64 {
        let (m, n, s1, s2) = (self.m as f64, self.n as f64, self.s1 as f64, self.s2 as f64);
        1.1 * s1 * self.u * (1.0 + self.eps1).sqrt() * (s2 * n).sqrt() * self.norm_omega2
            + 1.2 * m * self.u * n.sqrt() * self.norm_omega1_f * self.norm_omega2
    }

    /// `j` of the single-sketch analysis.
    pub fn j(&self) -> f64 {
        let (m, n, s) = (self.m as f64, self.n as f64, self.s as f64);
        1.1 * m * self.u * (s * n).sqrt() * self.norm_omega2
    }

    /// `b = max(||Omega1||_2 ||Omega2||_2, 1)`.
    pub fn b(&self) -> f64 {
        (self.norm_omega1_2 * self.norm_omega2).max(1.0)
    }

    /// `d = max(||Omega||_2, 1)`.
    pub fn d(&self) -> f64 {
        self.norm_omega2.max(1.0)
    }
}

/// `(h_odd, h_even)` pair shared by the two residual bounds: `h1, h2` for
/// multi-sketching or `h3, h4` for single sketching.
fn h_terms(eps_lo: f64, eps_hi: f64, base: f64) -> Result<(f64, f64)> {
    let ratio = ((1.0 - eps_lo) / (1.0 + eps_hi)).sqrt();
    let d1 = 0.8 * ratio - 0.08;
    let d2 = 4.0 / (5.0 * (1.0 + eps_hi).sqrt()) - 0.11 / (1.0 - eps_lo).sqrt();
    if !(d1 > 0.0) || !(d2 > 0.0) || !(eps_lo < 1.0) {
        return Err(Error::AssumptionViolated(format!(
            "bound denominators must be positive (got {d1:.3e}, {d2:.3e})"
        )));
    }
    let h_odd = 5.0 * (1.28 / d1).powi(2) * base;
    Ok((h_odd, 1.0 / d2))
}

fn residual_shape(h_odd: f64, h_even: f64, eps_lo: f64, n: usize, u: f64, norm_x2: f64) -> f64 {
    let n = n as f64;
    let bracket = 1.79 * (1.0 + h_odd) + 4.63 * (1.0 + h_odd).sqrt() + 1.41;
    bracket * h_even / (1.0 - eps_lo).sqrt() * n * n * u * norm_x2
}

/// `h1`, `h2` for the multi-sketch residual bound.
pub fn h_multi(bi: &BoundInputs) -> Result<(f64, f64)> {
    h_terms(bi.eps_s, bi.eps_b, bi.base())
}

/// `h3`, `h4` for the single-sketch residual bound.
pub fn h_single(bi: &BoundInputs) -> Result<(f64, f64)> {
    h_terms(bi.eps, bi.eps, bi.base())
}

/// Residual bound `Phi` of SSLHC3.
pub fn residual_bound_multi(bi: &BoundInputs, norm_x2: f64) -> Result<f64> {
    let (h1, h2) = h_multi(bi)?;
    Ok(residual_shape(h1, h2, bi.eps_s, bi.n, bi.u, norm_x2))
}

/// Residual bound `Theta` of SLHC3.
pub fn residual_bound_single(bi: &BoundInputs, norm_x2: f64) -> Result<f64> {
    let (h3, h4) = h_single(bi)?;
    Ok(residual_shape(h3, h4, bi.eps, bi.n, bi.u, norm_x2))
}

/// `(6.57 p + 4.87) n^2 u ||X||_2` with `p = ||X||_g / ||X||_2`.
pub fn scholqr3_residual_bound(n: usize, p_ratio: f64, norm_x2: f64) -> f64 {
    let n = n as f64;
    (6.57 * p_ratio + 4.87) * n * n * UNIT_ROUNDOFF * norm_x2
}

/// `4.09 n^2 u ||X||_2`.
pub fn luc2_residual_bound(n: usize, norm_x2: f64) -> f64 {
    let n = n as f64;
    4.09 * n * n * UNIT_ROUNDOFF * norm_x2
}

/// Largest `kappa2(X)` covered by the RHC analysis.
///
/// The CountSketch Frobenius norm stands in for the norm of the first
/// sketch in the original expression.
pub fn rhc_kappa_limit(bi: &BoundInputs) -> f64 {
    let (n, s1, s2) = (bi.n as f64, bi.s1 as f64, bi.s2 as f64);
    let inner = (1.0 + bi.eps_b).sqrt() * s2 * n.powf(1.5)
        + n.sqrt() * bi.norm_omega2 * (s1 * s2.sqrt() * (1.0 + bi.eps1).sqrt() + n * bi.norm_omega1_f);
    (1.0 - bi.eps_s).sqrt() / (383.0 * inner * bi.u)
}

/// RHC residual bound. Only defined while `kappa2(X) <= rhc_kappa_limit`.
pub fn rhc_residual_bound(bi: &BoundInputs, norm_x2: f64, sigma_min: f64) -> Result<f64> {
    let (es, eb) = (bi.eps_s, bi.eps_b);
    if !(es < 616.0 / 625.0 - 9.0 / 625.0 * eb) {
        return Err(Error::AssumptionViolated(format!(
            "eps_s = {es} too large for the RHC bound"
        )));
    }
    let delta = if sigma_min > 0.0 {
        (norm_x2 / sigma_min) / rhc_kappa_limit(bi)
    } else {
        f64::INFINITY
    };
    if !(delta <= 1.0) {
        return Err(Error::AssumptionViolated(format!(
            "kappa2(X) beyond the RHC range (delta = {delta:.3e})"
        )));
    }
    let n = bi.n as f64;
    let d = 25.0 * ((1.0 - es) / (1.0 + eb)).sqrt() - 3.0;
    let first = 56.0 / (25.0 * (1.0 - es) / (1.0 + eb).sqrt() - 3.0 * (1.0 - es).sqrt());
    let second = 1.5 / (1.0 - es).sqrt() * (1.0 + 5445.0 * bi.base() / (d * d)).sqrt();
    let scale = (1.0 + eb).sqrt() * norm_x2 + (1.0 - es) / 12.0 * sigma_min * delta;
    Ok((first + second) * scale * n * n * bi.u + delta / 10.0 * sigma_min)
}

/// `kappa2(L)` limit for LUC2, `1 / (8 sqrt(c(m, n)))`.
pub fn luc2_kappa_l_limit(m: usize, n: usize) -> f64 {
    1.0 / (8.0 * base_term(m, n).sqrt())
}

/// `kappa2(X)` limit for CholeskyQR2, `1 / (8 sqrt(c(m, n)))`.
pub fn cholqr2_kappa_limit(m: usize, n: usize) -> f64 {
    luc2_kappa_l_limit(m, n)
}

/// `kappa2(X)` limit for SCholeskyQR3, `1 / (86 p c(m, n))`.
pub fn scholqr3_kappa_limit(m: usize, n: usize, p_ratio: f64) -> f64 {
    1.0 / (86.0 * p_ratio * base_term(m, n))
}

/// `kappa2(L)` limit for SSLHC3.
pub fn sslhc3_kappa_l_limit(bi: &BoundInputs) -> f64 {
    let n = bi.n as f64;
    let denom = (20.4 * bi.t() + 22.0 * bi.s2 as f64 * n * n.sqrt() * bi.u * (1.0 + bi.eps_b).sqrt())
        / (1.0 - bi.eps_s).sqrt();
    1.0 / denom
}

/// `kappa2(L)` limit for SLHC3.
pub fn slhc3_kappa_l_limit(bi: &BoundInputs) -> f64 {
    let n = bi.n as f64;
    let denom = (20.4 * bi.j() + 22.0 * bi.s as f64 * n * n.sqrt() * bi.u * (1.0 + bi.eps).sqrt())
        / (1.0 - bi.eps).sqrt();
    1.0 / denom
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssumptionMode {
    Single,
    Multi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Positive when the condition holds.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub ok: bool,
    pub conditions: Vec<ConditionCheck>,
}

impl AssumptionReport {
    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn le(name: &'static str, lhs: f64, rhs: f64) -> ConditionCheck {
    ConditionCheck {
        name: name.to_string(),
        lhs,
        rhs,
        margin: rhs - lhs,
        holds: lhs <= rhs,
    }
}

fn gt(name: &'static str, lhs: f64, rhs: f64) -> ConditionCheck {
    ConditionCheck {
        name: name.to_string(),
        lhs,
        rhs,
        margin: lhs - rhs,
        holds: lhs > rhs,
    }
}

/// Evaluates the sketch-distortion assumption and the size / conditioning
/// settings for the chosen mode.
///
/// Condition names:
/// - `distortion`: `sqrt(1-eps_lo)/sqrt(1+eps_hi) > max(12.8 sqrt(c) + 0.1, 0.14)`
/// - `size-product`: `s1 sqrt(s2) u <= 1/64` (multi) or `m sqrt(s) u <= 1/64` (single)
/// - `sketch-dim`: `s2 n sqrt(n) u <= 1/64` (multi) or `s n sqrt(n) u <= 1/64` (single)
/// - `kappa-l`, `kappa-lu`: only when `kappa_l`/`kappa_u` are provided
pub fn check_assumptions(bi: &BoundInputs, mode: AssumptionMode) -> AssumptionReport {
    let base = bi.base();
    let n = bi.n as f64;
    let (eps_lo, eps_hi) = match mode {
        AssumptionMode::Multi => (bi.eps_s, bi.eps_b),
        AssumptionMode::Single => (bi.eps, bi.eps),
    };
    let ratio = (1.0 - eps_lo).sqrt() / (1.0 + eps_hi).sqrt();
    let mut conditions = vec![gt(
        "distortion",
        ratio,
        (12.8 * base.sqrt() + 0.1).max(0.14),
    )];
    let cap = 1.0 / 64.0;
    let (size_product, sketch_dim) = match mode {
        AssumptionMode::Multi => (
            bi.s1 as f64 * (bi.s2 as f64).sqrt() * bi.u,
            bi.s2 as f64 * n * n.sqrt() * bi.u,
        ),
        AssumptionMode::Single => (
            bi.m as f64 * (bi.s as f64).sqrt() * bi.u,
            bi.s as f64 * n * n.sqrt() * bi.u,
        ),
    };
    conditions.push(le("size-product", size_product, cap));
    conditions.push(le("sketch-dim", sketch_dim, cap));
    if let Some(kl) = bi.kappa_l {
        let (err, sdim, eps_hi_sqrt) = match mode {
            AssumptionMode::Multi => (bi.t(), bi.s2 as f64, (1.0 + bi.eps_b).sqrt()),
            AssumptionMode::Single => (bi.j(), bi.s as f64, (1.0 + bi.eps).sqrt()),
        };
        let lhs = (20.4 * err + 22.0 * sdim * n * n.sqrt() * bi.u * eps_hi_sqrt) * kl
            / (1.0 - eps_lo).sqrt();
        conditions.push(le("kappa-l", lhs, 1.0));
        if let Some(ku) = bi.kappa_u {
            let (lead, err) = match mode {
                AssumptionMode::Multi => (bi.b(), bi.t()),
                AssumptionMode::Single => (bi.d(), bi.j()),
            };
            let lhs = 22.6 * lead * n * n * bi.u * (eps_hi_sqrt + err) / (1.0 - eps_lo).sqrt() * kl * ku;
            conditions.push(le("kappa-lu", lhs, 1.0));
        }
    }
    AssumptionReport {
        ok: conditions.iter().all(|c| c.holds),
        conditions,
    }
}

/// Everything the harness needs to judge one successful run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixFacts {
    pub m: usize,
    pub n: usize,
    pub norm2: f64,
    pub sigma_min: f64,
    pub max_column_norm: f64,
}

/// Orthogonality bound that applies to `alg`, if the family has one.
pub fn orth_bound_for(alg: Algorithm, cfg: &SketchConfig, m: usize, n: usize) -> Option<f64> {
    use Algorithm::*;
    match alg {
        CholeskyQr2 | ShiftedCholeskyQr3 | Slhc3 | Sslhc3 => Some(orth_bound(m, n)),
        Luc2 => Some(luc2_orth_bound(m, n)),
        Rhc => {
            let bi = rhc_inputs(cfg, m, n);
            Some(rhc_orth_bound(m, n, bi.eps_s, bi.eps_b))
        }
        _ => None,
    }
}

fn rhc_inputs(cfg: &SketchConfig, m: usize, n: usize) -> BoundInputs {
    BoundInputs::from_config(cfg, m, n, cfg.mode == crate::qr::SketchMode::Multi)
}

/// Residual bound (absolute, Frobenius) that applies to `alg`, if any.
pub fn residual_bound_for(alg: Algorithm, cfg: &SketchConfig, x: &MatrixFacts) -> Option<f64> {
    use Algorithm::*;
    let (m, n) = (x.m, x.n);
    match alg {
        ShiftedCholeskyQr3 => {
            let p = if x.norm2 > 0.0 { x.max_column_norm / x.norm2 } else { 1.0 };
            Some(scholqr3_residual_bound(n, p, x.norm2))
        }
        Luc2 => Some(luc2_residual_bound(n, x.norm2)),
        Rhc => rhc_residual_bound(&rhc_inputs(cfg, m, n), x.norm2, x.sigma_min).ok(),
        Slhc3 => residual_bound_single(&BoundInputs::from_config(cfg, m, n, false), x.norm2).ok(),
        Sslhc3 => residual_bound_multi(&BoundInputs::from_config(cfg, m, n, true), x.norm2).ok(),
        _ => None,
    }
}

/// Whether the hypotheses behind [`orth_bound_for`] / [`residual_bound_for`]
/// hold. `lu` is `(kappa2(L), kappa2(U))`, needed for LUC2 and the LU
/// Householder algorithms.
pub fn bounds_apply(alg: Algorithm, cfg: &SketchConfig, x: &MatrixFacts, lu: Option<(f64, f64)>) -> bool {
    use Algorithm::*;
    let (m, n) = (x.m, x.n);
    let kappa = if x.sigma_min > 0.0 { x.norm2 / x.sigma_min } else { f64::INFINITY };
    match alg {
        CholeskyQr2 => kappa <= cholqr2_kappa_limit(m, n),
        ShiftedCholeskyQr3 => {
            let p = if x.norm2 > 0.0 { x.max_column_norm / x.norm2 } else { 1.0 };
            kappa <= scholqr3_kappa_limit(m, n, p)
        }
        Luc2 => lu.is_some_and(|(kl, _)| kl <= luc2_kappa_l_limit(m, n)),
        Rhc => kappa <= rhc_kappa_limit(&rhc_inputs(cfg, m, n)),
        Slhc3 | Sslhc3 => lu.is_some_and(|(kl, ku)| {
            let multi = alg == Sslhc3;
            let mode = if multi { AssumptionMode::Multi } else { AssumptionMode::Single };
            let bi = BoundInputs::from_config(cfg, m, n, multi).with_lu_conditioning(kl, ku);
            check_assumptions(&bi, mode).ok
        }),
        _ => false,
    }
}

/// Structural (pre-run) assumption check for the sketched LU algorithms.
pub fn pre_run_assumptions(alg: Algorithm, cfg: &SketchConfig, m: usize, n: usize) -> Option<AssumptionReport> {
    match alg {
        Algorithm::Slhc | Algorithm::Slhc3 => Some(check_assumptions(
            &BoundInputs::from_config(cfg, m, n, false),
            AssumptionMode::Single,
        )),
        Algorithm::Sslhc | Algorithm::Sslhc3 => Some(check_assumptions(
            &BoundInputs::from_config(cfg, m, n, true),
            AssumptionMode::Multi,
        )),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn orthogonality_examples() {
        assert_eq!(orthogonality(&DenseMatrix::identity(3)), 0.0);
        let u = UNIT_ROUNDOFF;
        let q = DenseMatrix::from_rows(&[&[1.0, u], &[0.0, 1.0]]).unwrap();
        assert!(rel(orthogonality(&q), 2f64.sqrt() * u) < 1e-12);
    }

    #[test]
    fn residual_of_exact_factorization() {
        let q = DenseMatrix::eye(3, 2);
        let r = DenseMatrix::identity(2);
        let res = residual(&q, &r, &q).unwrap();
        assert_eq!(res.absolute, 0.0);
        assert_eq!(res.relative, 0.0);
    }

    #[test]
    fn orth_bound_values() {
        assert!(rel(orth_bound(20000, 50), 6.678e-10) < 1e-3);
        assert!(rel(orth_bound(1, 1), 6.0 * 3.0 * UNIT_ROUNDOFF) < 1e-15);
        assert!(rel(orth_bound(2000, 20), 2.69e-11) < 2e-3);
        assert!(rel(orth_bound(2000, 50), 6.83e-11) < 3e-3);
    }

    #[test]
    fn phi_at_experiment_settings() {
        let bi = BoundInputs::multi(20000, 50, 0.5, 0.6, 0.5, 0.4, 17000, 50);
        let (h1, h2) = h_multi(&bi).unwrap();
        assert!(rel(h2, 3.1915) < 1e-4, "{h2}");
        assert!(rel(h1, 2.617e-8) < 1e-3, "{h1}");
        let phi = residual_bound_multi(&bi, 1.0).unwrap();
        assert!(rel(phi, 1.39e-11) < 5e-3, "{phi}");
    }

    #[test]
    fn zero_distortion_limit() {
        let mut bi = BoundInputs::multi(100, 5, 0.0, 0.5, 0.0, 0.5, 60, 5);
        bi.eps_s = 0.0;
        bi.eps_b = 0.0;
        let (_, h2) = h_multi(&bi).unwrap();
        assert!(rel(h2, 1.0 / 0.69) < 1e-12);
    }

    #[test]
    fn theta_is_finite_positive() {
        let bi = BoundInputs::single(2000, 20, 0.5, 0.6, 20);
        let theta = residual_bound_single(&bi, 1.0).unwrap();
        assert!(theta.is_finite() && theta > 0.0);
    }

    #[test]
    fn extreme_distortion_violates_assumption() {
        let bi = BoundInputs::multi(20000, 50, 0.99, 0.6, 0.99, 0.4, 17000, 50);
        let rep = check_assumptions(&bi, AssumptionMode::Multi);
        assert!(!rep.ok);
        let c = rep.get("distortion").unwrap();
        assert!(c.lhs < 0.14 && c.margin < 0.0);
        assert!(matches!(
            residual_bound_multi(&bi, 1.0),
            Err(Error::AssumptionViolated(_))
        ));
    }

    #[test]
    fn experiment_settings_satisfy_assumptions() {
        let bi = BoundInputs::multi(20000, 50, 0.5, 0.6, 0.5, 0.4, 17000, 50);
        let rep = check_assumptions(&bi, AssumptionMode::Multi);
        assert!(rep.ok, "{rep:?}");
        let d = rep.get("distortion").unwrap();
        assert!(rel(d.lhs, 1.0 / 3.0) < 1e-12);
        assert_eq!(d.rhs, 0.14);
        let a1 = rep.get("size-product").unwrap();
        assert!(rel(a1.lhs, 1.33e-11) < 5e-3, "{}", a1.lhs);
        assert!(rep.get("kappa-l").is_none());
    }

    #[test]
    fn conditioning_checks_appear_when_supplied() {
        let bi = BoundInputs::single(2000, 20, 0.5, 0.6, 20).with_lu_conditioning(10.0, 1e12);
        let rep = check_assumptions(&bi, AssumptionMode::Single);
        assert!(rep.get("kappa-l").unwrap().holds);
        assert!(rep.get("kappa-lu").is_some());
    }

    #[test]
    fn rhc_bound_needs_kappa_in_range() {
        let bi = BoundInputs::multi(20000, 50, 0.5, 0.6, 0.5, 0.4, 17000, 50);
        let k = rhc_kappa_limit(&bi);
        assert!(k > 1.0);
        assert!(rhc_residual_bound(&bi, 1.0, 0.5 / k).is_err());
        let ok = rhc_residual_bound(&bi, 1.0, 1.0).unwrap();
        assert!(ok > 0.0 && ok.is_finite());
        assert!(rhc_orth_bound(20000, 50, 0.75, 1.25) > orth_bound(20000, 50));
    }

    #[test]
    fn luc2_limit_value() {
        let v = luc2_kappa_l_limit(20000, 50);
        assert!(rel(v, 1.0 / (8.0 * base_term(20000, 50).sqrt())) < 1e-15);
        assert!(v > 1e3 && v < 1e5);
    }
}
