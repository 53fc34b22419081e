//! Monitors for the energy identity and the a priori integral, Moser,
//! logarithmic and Bernstein estimates, evaluated on a discrete solution.

use serde::{Deserialize, Serialize};

use crate::coupling::Coupling;
use crate::error::{MfgError, Result};
use crate::grid::{gradient, integrate, lp_norm, ScalarField, VectorField};
use crate::hamiltonian::LambdaFamily;
use crate::system::{drift, residual, Solution};

/// Tolerance on `|1/p + 1/q - 1|` for a conjugate pair.
const CONJUGATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsOptions {
    pub moser_p: Option<f64>,
    pub bernstein_p: Option<f64>,
    /// Conjugate pair `(p, q)` for the logarithmic estimate.
    pub log_pair: Option<(f64, f64)>,
    pub l: Option<f64>,
    /// Stand-in for `2*` when `d <= 2`.
    pub sobolev_surrogate: f64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            moser_p: None,
            bernstein_p: None,
            log_pair: None,
            l: None,
            sobolev_surrogate: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevExponent {
    pub value: f64,
    pub surrogate: bool,
}

/// `2* = 2d/(d-2)` for `d = 3`, otherwise the configured surrogate.
pub fn sobolev_exponent(dim: usize, surrogate: f64) -> Result<SobolevExponent> {
    if dim >= 3 {
        let d = dim as f64;
        return Ok(SobolevExponent {
            value: 2.0 * d / (d - 2.0),
            surrogate: false,
        });
    }
    if !(surrogate > 2.0) || !surrogate.is_finite() {
        return Err(MfgError::InvalidParameter(format!(
            "surrogate Sobolev exponent must be finite and > 2, got {surrogate}"
        )));
    }
    Ok(SobolevExponent {
        value: surrogate,
        surrogate: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoserRecord {
    pub p: f64,
    pub p_conjugate: f64,
    pub sobolev: SobolevExponent,
    pub exponent: f64,
    /// `‖m‖_∞`.
    pub lhs: f64,
    /// `(1 + ‖|D_pH|²‖_{L^{p'}})^{exponent}`.
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinRecord {
    pub p: f64,
    pub sobolev: SobolevExponent,
    pub beta_p: f64,
    pub r_p: f64,
    /// `(∫ v^{s(p+1)})^{1/(s(p+1))}` with `v = |Du|²`, `s = 2*/2`.
    pub lemma_lhs: f64,
    /// `(∫ |g|^{2β_p})^{1/β_p}`.
    pub lemma_driver: f64,
    /// Lebesgue exponent `2s(p+1)` of `lhs`.
    pub du_exponent: f64,
    /// `‖Du‖_{L^{2s(p+1)}}`.
    pub lhs: f64,
    /// `‖g‖_{L^{r_p}}`.
    pub g_norm: f64,
    /// `lhs / (1 + g_norm)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub p: f64,
    pub q: f64,
    pub l: f64,
    /// `‖ln m‖_{L^{q(l+1)}}`.
    pub lhs: f64,
    /// `‖Du‖^{γ-1}_{L^{2p(γ-1)}}`.
    pub rhs: f64,
    /// `lhs / (1 + rhs)`.
    pub ratio: f64,
    pub dlnm_l2: f64,
    pub dph_l2: f64,
    /// `‖D_pH‖_{L²} - ‖D ln m‖_{L²}`.
    pub slack: f64,
    /// Interpolation exponent with `1/d = θ + (1-θ)/(q(l+1))`.
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRecord {
    pub m_min: f64,
    pub lnm_linf: f64,
    pub dlnm_linf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicBounds {
    pub hbar: f64,
    pub int_g: f64,
    pub int_gm: f64,
    pub kinetic: f64,
    /// `‖m‖_{L^{1+α}}`, power couplings only.
    pub m_l1alpha: Option<f64>,
    pub lnm_l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub lambda: f64,
    pub residual_sup: f64,
    pub energy_gap: f64,
    pub hbar: f64,
    pub int_g: f64,
    pub int_gm: f64,
    pub kinetic: f64,
    pub m_linf: f64,
    pub m_min: f64,
    pub m_l1alpha: Option<f64>,
    pub mass: f64,
    pub mean_u: f64,
    pub lnm_l1: f64,
    pub lnm_linf: f64,
    pub dlnm_l2: f64,
    pub dlnm_linf: f64,
    pub dph_l2: f64,
    pub du_l2: f64,
    pub g_l1: f64,
    pub g_l2: f64,
    pub g_linf: f64,
    pub oracle: Option<f64>,
    pub moser: Option<MoserRecord>,
    pub bernstein: Option<BernsteinRecord>,
    pub logprop: Option<LogRecord>,
}

fn check_grid(fam: &LambdaFamily<'_>, v: &Solution) -> Result<()> {
    if fam.grid() != v.grid() {
        return Err(MfgError::GridMismatch);
    }
    Ok(())
}

fn positive_density(v: &Solution, floor: f64) -> Result<()> {
    let min_m = v.m.min();
    if !(min_m > floor) {
        return Err(MfgError::Positivity { min_m, floor });
    }
    Ok(())
}

fn g_field(c: &Coupling, m: &ScalarField) -> Result<ScalarField> {
    let values = m
        .values()
        .iter()
        .map(|&x| c.g(x))
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(*m.grid(), values)
}

fn ln_field(v: &Solution) -> Result<ScalarField> {
    positive_density(v, crate::coupling::M_FLOOR)?;
    Ok(v.m.map(f64::ln))
}

fn drift_field(fam: &LambdaFamily<'_>, du: &VectorField) -> Result<VectorField> {
    let grid = *du.grid();
    let b = drift(fam, du);
    VectorField::new(
        (0..grid.dim())
            .map(|axis| ScalarField::new(grid, b.iter().map(|v| v[axis]).collect()))
            .collect::<Result<Vec<_>>>()?,
    )
}

fn sq_magnitude(f: &VectorField) -> ScalarField {
    f.dot(f)
}

/// `|H̄ + ∫g(m)m - ∫(H - D_pH·Du)m|`.
pub fn energy_identity_gap(fam: &LambdaFamily<'_>, c: &Coupling, v: &Solution) -> Result<f64> {
    check_grid(fam, v)?;
    let du = gradient(&v.u);
    let g = g_field(c, &v.m)?;
    let int_gm = integrate(&g.zip_map(&v.m, |a, b| a * b));
    let m = v.m.values();
    let lagrangian: Vec<f64> = (0..v.grid().len())
        .map(|i| {
            let p = du.at(i);
            let b = fam.eval_dp_h(i, &p);
            let bp: f64 = (0..fam.dim()).map(|k| b[k] * p[k]).sum();
            (fam.eval_h(i, &p) - bp) * m[i]
        })
        .collect();
    let lag = integrate(&ScalarField::new(*v.grid(), lagrangian)?);
    Ok((v.hbar + int_gm - lag).abs())
}

pub fn basic_bounds(fam: &LambdaFamily<'_>, c: &Coupling, v: &Solution) -> Result<BasicBounds> {
    check_grid(fam, v)?;
    positive_density(v, 0.0)?;
    let g = g_field(c, &v.m)?;
    let gamma = fam.gamma();
    let kinetic = gradient(&v.u)
        .magnitude()
        .zip_map(&v.m, |p, m| p.powf(gamma) * m);
    let m_l1alpha = match c.alpha() {
        Some(alpha) => Some(lp_norm(&v.m, 1.0 + alpha)?),
        None => None,
    };
    Ok(BasicBounds {
        hbar: v.hbar,
        int_g: integrate(&g),
        int_gm: integrate(&g.zip_map(&v.m, |a, b| a * b)),
        kinetic: integrate(&kinetic),
        m_l1alpha,
        lnm_l1: lp_norm(&ln_field(v)?, 1.0)?,
    })
}

pub fn moser_ratio(
    fam: &LambdaFamily<'_>,
    c: &Coupling,
    v: &Solution,
    p: f64,
    surrogate: f64,
) -> Result<MoserRecord> {
    check_grid(fam, v)?;
    let sobolev = sobolev_exponent(fam.dim(), surrogate)?;
    let half = sobolev.value / 2.0;
    let upper = match c.alpha() {
        Some(alpha) => (1.0 + alpha).max(half),
        None => half,
    };
    if !(p > 1.0 && p < upper) {
        return Err(MfgError::InvalidParameter(format!(
            "Moser exponent p = {p} outside (1, {upper})"
        )));
    }
    if p >= half {
        return Err(MfgError::InvalidParameter(format!(
            "Moser exponent p = {p} makes 1 - 2p/2* non-positive"
        )));
    }
    let p_conjugate = p / (p - 1.0);
    let exponent = 1.0 / (1.0 - p / half);
    let b = drift_field(fam, &gradient(&v.u))?;
    let rhs = (1.0 + lp_norm(&sq_magnitude(&b), p_conjugate)?).powf(exponent);
    let lhs = v.m.sup_norm();
    Ok(MoserRecord {
        p,
        p_conjugate,
        sobolev,
        exponent,
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// `β_p`, the conjugate of `s(p+1)/p` with `s = 2*/2`.
pub fn bernstein_beta(p: f64, sobolev: f64) -> f64 {
    let s = sobolev / 2.0;
    let t = s * (p + 1.0) / p;
    t / (t - 1.0)
}

pub fn bernstein_quantities(
    fam: &LambdaFamily<'_>,
    c: &Coupling,
    v: &Solution,
    p: f64,
    surrogate: f64,
) -> Result<BernsteinRecord> {
    check_grid(fam, v)?;
    if !(p > 1.0) || !p.is_finite() {
        return Err(MfgError::InvalidParameter(format!(
            "Bernstein exponent must be > 1, got {p}"
        )));
    }
    let sobolev = sobolev_exponent(fam.dim(), surrogate)?;
    let s = sobolev.value / 2.0;
    let beta_p = bernstein_beta(p, sobolev.value);
    let r_p = 2.0 * beta_p;
    let du = gradient(&v.u);
    let speed = du.magnitude();
    let vsq = sq_magnitude(&du);
    let g = g_field(c, &v.m)?;
    let lemma_lhs = lp_norm(&vsq, s * (p + 1.0))?;
    let lemma_driver = lp_norm(&g, r_p)?.powi(2);
    let du_exponent = 2.0 * s * (p + 1.0);
    let lhs = lp_norm(&speed, du_exponent)?;
    let g_norm = lp_norm(&g, r_p)?;
    Ok(BernsteinRecord {
        p,
        sobolev,
        beta_p,
        r_p,
        lemma_lhs,
        lemma_driver,
        du_exponent,
        lhs,
        g_norm,
        ratio: lhs / (1.0 + g_norm),
    })
}

pub fn log_estimates(
    fam: &LambdaFamily<'_>,
    c: &Coupling,
    v: &Solution,
    p: f64,
    q: f64,
    l: f64,
    surrogate: f64,
) -> Result<LogRecord> {
    check_grid(fam, v)?;
    if *c != Coupling::Log {
        return Err(MfgError::InvalidParameter(
            "log estimates need the logarithmic coupling".into(),
        ));
    }
    if !(p > 1.0 && q > 1.0) || (1.0 / p + 1.0 / q - 1.0).abs() > CONJUGATE_TOL {
        return Err(MfgError::InvalidParameter(format!(
            "({p}, {q}) is not a conjugate pair"
        )));
    }
    let half = sobolev_exponent(fam.dim(), surrogate)?.value / 2.0;
    if q >= half {
        return Err(MfgError::InvalidParameter(format!(
            "q = {q} must be below 2*/2 = {half}"
        )));
    }
    if !(l > 1.0) || !l.is_finite() {
        return Err(MfgError::InvalidParameter(format!(
            "l must be > 1, got {l}"
        )));
    }
    let lnm = ln_field(v)?;
    let gamma = fam.gamma();
    let du = gradient(&v.u);
    let b = drift_field(fam, &du)?;
    let lhs = lp_norm(&lnm, q * (l + 1.0))?;
    let rhs = lp_norm(&du.magnitude(), 2.0 * p * (gamma - 1.0))?.powf(gamma - 1.0);
    let dlnm_l2 = integrate(&sq_magnitude(&gradient(&lnm))).sqrt();
    let dph_l2 = integrate(&sq_magnitude(&b)).sqrt();
    let inv = 1.0 / (q * (l + 1.0));
    Ok(LogRecord {
        p,
        q,
        l,
        lhs,
        rhs,
        ratio: lhs / (1.0 + rhs),
        dlnm_l2,
        dph_l2,
        slack: dph_l2 - dlnm_l2,
        theta: (1.0 / fam.dim() as f64 - inv) / (1.0 - inv),
    })
}

pub fn lower_bound_monitor(v: &Solution) -> Result<LowerBoundRecord> {
    let lnm = ln_field(v)?;
    Ok(LowerBoundRecord {
        m_min: v.m.min(),
        lnm_linf: lnm.sup_norm(),
        dlnm_linf: gradient(&lnm).magnitude().sup_norm(),
    })
}

/// `‖m - e^{2cu}/∫e^{2cu}‖_∞` for `γ = 2` with a constant coefficient `c`,
/// where the Fokker-Planck equation is solved exactly by `m ∝ e^{2cu}`.
pub fn quadratic_log_oracle(fam: &LambdaFamily<'_>, c: &Coupling, v: &Solution) -> Result<f64> {
    check_grid(fam, v)?;
    if fam.gamma() != 2.0 {
        return Err(MfgError::InvalidParameter(format!(
            "oracle needs gamma = 2, got {}",
            fam.gamma()
        )));
    }
    if *c != Coupling::Log {
        return Err(MfgError::InvalidParameter(
            "oracle needs the logarithmic coupling".into(),
        ));
    }
    let coef = fam.coefficient(0);
    if (1..v.grid().len()).any(|i| fam.coefficient(i) != coef) {
        return Err(MfgError::InvalidParameter(
            "oracle needs a constant coefficient a".into(),
        ));
    }
    let shift = v.u.max();
    let w = v.u.map(|u| (2.0 * coef * (u - shift)).exp());
    let total = integrate(&w);
    Ok(v.m.zip_map(&w, |m, w| m - w / total).sup_norm())
}

pub fn diagnose(
    fam: &LambdaFamily<'_>,
    c: &Coupling,
    v: &Solution,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    check_grid(fam, v)?;
    let res = residual(fam, c, v)?;
    let basic = basic_bounds(fam, c, v)?;
    let lower = lower_bound_monitor(v)?;
    let lnm = ln_field(v)?;
    let du = gradient(&v.u);
    let b = drift_field(fam, &du)?;
    let g = g_field(c, &v.m)?;
    let oracle = quadratic_log_oracle(fam, c, v).ok();
    let moser = match opts.moser_p {
        Some(p) => Some(moser_ratio(fam, c, v, p, opts.sobolev_surrogate)?),
        None => None,
    };
    let bernstein = match opts.bernstein_p {
        Some(p) => Some(bernstein_quantities(fam, c, v, p, opts.sobolev_surrogate)?),
        None => None,
    };
    let logprop = match (opts.log_pair, *c) {
        (Some((p, q)), Coupling::Log) => Some(log_estimates(
            fam,
            c,
            v,
            p,
            q,
            opts.l.unwrap_or(2.0),
            opts.sobolev_surrogate,
        )?),
        _ => None,
    };
    Ok(DiagnosticsReport {
        lambda: v.lambda,
        residual_sup: res.sup_norm(),
        energy_gap: energy_identity_gap(fam, c, v)?,
        hbar: basic.hbar,
        int_g: basic.int_g,
        int_gm: basic.int_gm,
        kinetic: basic.kinetic,
        m_linf: v.m.sup_norm(),
        m_min: lower.m_min,
        m_l1alpha: basic.m_l1alpha,
        mass: integrate(&v.m),
        mean_u: integrate(&v.u),
        lnm_l1: basic.lnm_l1,
        lnm_linf: lower.lnm_linf,
        dlnm_l2: integrate(&sq_magnitude(&gradient(&lnm))).sqrt(),
        dlnm_linf: lower.dlnm_linf,
        dph_l2: integrate(&sq_magnitude(&b)).sqrt(),
        du_l2: integrate(&sq_magnitude(&du)).sqrt(),
        g_l1: lp_norm(&g, 1.0)?,
        g_l2: lp_norm(&g, 2.0)?,
        g_linf: g.sup_norm(),
        oracle,
        moser,
        bernstein,
        logprop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::{continuation_solve, initial_solution, SolverConfig};
    use crate::grid::TorusGrid;
    use crate::hamiltonian::HamiltonianSpec;
    use std::f64::consts::PI;

    fn spec(dim: usize, n: usize, gamma: f64, v: impl Fn(&[f64]) -> f64) -> HamiltonianSpec {
        let grid = TorusGrid::new(dim, n).unwrap();
        HamiltonianSpec::new(gamma, grid.constant(1.0), grid.sample(v)).unwrap()
    }

    fn constant_solution(c: &Coupling, dim: usize, n: usize) -> Solution {
        initial_solution(c, TorusGrid::new(dim, n).unwrap()).unwrap()
    }

    #[test]
    fn constant_solution_identities() {
        let base = spec(1, 16, 2.0, |_| 0.0);
        let fam = base.at(1.0).unwrap();
        let power = Coupling::power(1.0).unwrap();
        let v = constant_solution(&power, 1, 16);
        assert_eq!(energy_identity_gap(&fam, &power, &v).unwrap(), 0.0);
        let b = basic_bounds(&fam, &power, &v).unwrap();
        assert_eq!(
            (b.int_g, b.int_gm, b.kinetic, b.lnm_l1),
            (1.0, 1.0, 0.0, 0.0)
        );
        assert!((b.m_l1alpha.unwrap() - 1.0).abs() < 1e-15);
        let log = constant_solution(&Coupling::Log, 1, 16);
        assert_eq!(basic_bounds(&fam, &Coupling::Log, &log).unwrap().int_g, 0.0);
        let lb = lower_bound_monitor(&v).unwrap();
        assert_eq!((lb.m_min, lb.lnm_linf, lb.dlnm_linf), (1.0, 0.0, 0.0));
    }

    #[test]
    fn hbar_corruption_is_linear() {
        let base = spec(1, 16, 2.0, |_| 0.0);
        let fam = base.at(1.0).unwrap();
        let mut v = constant_solution(&Coupling::Log, 1, 16);
        v.hbar += 0.01;
        let gap = energy_identity_gap(&fam, &Coupling::Log, &v).unwrap();
        assert!((gap - 0.01).abs() < 1e-10);
    }

    #[test]
    fn moser_constant_and_exponent() {
        let base = spec(3, 4, 2.0, |_| 0.0);
        let fam = base.at(1.0).unwrap();
        let c = Coupling::power(0.5).unwrap();
        let v = constant_solution(&c, 3, 4);
        let r = moser_ratio(&fam, &c, &v, 1.5, 10.0).unwrap();
        assert_eq!(r.exponent, 2.0);
        assert!(!r.sobolev.surrogate && r.sobolev.value == 6.0);
        assert_eq!((r.lhs, r.rhs, r.ratio), (1.0, 1.0, 1.0));
        assert!(moser_ratio(&fam, &c, &v, 1.0, 10.0).is_err());
        assert!(moser_ratio(&fam, &c, &v, 3.0, 10.0).is_err());
        let base1 = spec(1, 8, 2.0, |_| 0.0);
        let fam1 = base1.at(1.0).unwrap();
        let v1 = constant_solution(&c, 1, 8);
        assert!(
            moser_ratio(&fam1, &c, &v1, 2.0, 10.0)
                .unwrap()
                .sobolev
                .surrogate
        );
    }

    #[test]
    fn bernstein_arithmetic() {
        let beta = bernstein_beta(100.0, 6.0);
        assert!((beta - 303.0 / 203.0).abs() < 1e-12);
        assert!((2.0 * beta - 3.0).abs() < 0.02);
        assert!((bernstein_beta(1e9, 6.0) - 1.5).abs() < 1e-8);
        let base = spec(3, 4, 2.0, |_| 0.0);
        let fam = base.at(1.0).unwrap();
        let c = Coupling::power(0.5).unwrap();
        let v = constant_solution(&c, 3, 4);
        let r = bernstein_quantities(&fam, &c, &v, 5.0, 10.0).unwrap();
        assert_eq!(r.r_p, 2.0 * r.beta_p);
        assert_eq!((r.lemma_lhs, r.lhs, r.ratio), (0.0, 0.0, 0.0));
        assert_eq!(r.du_exponent, 36.0);
        assert!(bernstein_quantities(&fam, &c, &v, 1.0, 10.0).is_err());
    }

    #[test]
    fn log_estimate_preconditions() {
        let base = spec(1, 16, 2.0, |_| 0.0);
        let fam = base.at(1.0).unwrap();
        let v = constant_solution(&Coupling::Log, 1, 16);
        let r = log_estimates(&fam, &Coupling::Log, &v, 2.0, 2.0, 2.0, 10.0).unwrap();
        assert_eq!((r.lhs, r.dlnm_l2, r.dph_l2, r.slack), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(r.theta, 1.0);
        assert!(log_estimates(&fam, &Coupling::Log, &v, 2.0, 3.0, 2.0, 10.0).is_err());
        assert!(log_estimates(&fam, &Coupling::Log, &v, 2.0, 2.0, 1.0, 10.0).is_err());
        assert!(log_estimates(&fam, &Coupling::Log, &v, 1.1, 11.0, 2.0, 10.0).is_err());
        let p = Coupling::power(1.0).unwrap();
        assert!(log_estimates(&fam, &p, &v, 2.0, 2.0, 2.0, 10.0).is_err());
    }

    #[test]
    fn lower_bound_of_analytic_field() {
        let grid = TorusGrid::new(1, 256).unwrap();
        let m = grid.sample(|x| (0.1 * (2.0 * PI * x[0]).sin()).exp());
        let v = Solution::new(grid.zeros(), m, 0.0, 1.0).unwrap();
        let r = lower_bound_monitor(&v).unwrap();
        assert!((r.lnm_linf - 0.1).abs() < 1e-12);
        assert!((r.dlnm_linf - 0.2 * PI).abs() < 1e-3);
        let mut bad = v.clone();
        bad.m.values_mut()[3] = 0.0;
        assert!(matches!(
            lower_bound_monitor(&bad),
            Err(MfgError::Positivity { .. })
        ));
    }

    #[test]
    fn oracle_constant_and_sensitivity() {
        let base = spec(1, 32, 2.0, |_| 0.0);
        let fam = base.at(1.0).unwrap();
        let v = constant_solution(&Coupling::Log, 1, 32);
        assert!(quadratic_log_oracle(&fam, &Coupling::Log, &v).unwrap() < 1e-14);
        let mut bumped = v.clone();
        bumped.m.values_mut()[5] += 1e-3;
        let mass = integrate(&bumped.m);
        bumped.m = bumped.m.map(|x| x / mass);
        assert!(quadratic_log_oracle(&fam, &Coupling::Log, &bumped).unwrap() >= 5e-4);
        let p = Coupling::power(1.0).unwrap();
        assert!(quadratic_log_oracle(&fam, &p, &v).is_err());
        let base3 = spec(1, 32, 3.0, |_| 0.0);
        assert!(quadratic_log_oracle(&base3.at(1.0).unwrap(), &Coupling::Log, &v).is_err());
    }

    #[test]
    fn converged_solution_report() {
        let base = spec(1, 32, 2.0, |x| 0.5 * (2.0 * PI * x[0]).sin());
        let fam = base.at(1.0).unwrap();
        let c = Coupling::Log;
        let out = continuation_solve(&base, &c, &SolverConfig::default()).unwrap();
        let opts = DiagnosticsOptions {
            moser_p: Some(2.0),
            bernstein_p: Some(5.0),
            log_pair: Some((2.0, 2.0)),
            l: Some(2.0),
            ..Default::default()
        };
        let r = diagnose(&fam, &c, &out.solution, &opts).unwrap();
        assert!(r.energy_gap <= 1e-10 * r.hbar.abs().max(1.0));
        assert!(r.oracle.unwrap() < 1e-2);
        assert!((r.mass - 1.0).abs() < 1e-10 && r.mean_u.abs() < 1e-10);
        for x in [
            r.moser.unwrap().ratio,
            r.bernstein.unwrap().ratio,
            r.logprop.unwrap().ratio,
        ] {
            assert!(x.is_finite() && x >= 0.0);
        }
        assert!(r.logprop.unwrap().slack > -1e-2);
    }
}
