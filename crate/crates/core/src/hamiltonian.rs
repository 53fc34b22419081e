//! The model Hamiltonian `a(x)(1+|p|^2)^{γ/2} + V(x)`, its homotopy family and
//! a sampled checker for the growth hypotheses A1–A4.

use nalgebra::{Matrix2, Matrix3};
use serde::Serialize;

use crate::error::{MfgError, Result};
use crate::grid::{gradient, ScalarField, TorusGrid, VectorField, MAX_DIM};

pub type Vec3 = [f64; MAX_DIM];
pub type Mat3 = [[f64; MAX_DIM]; MAX_DIM];

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    gamma: f64,
    a: ScalarField,
    v: ScalarField,
}

impl HamiltonianSpec {
    /// Builds the model Hamiltonian. `a` must be nonnegative; a vanishing
    /// coefficient is accepted here and reported as an A1.1 failure by
    /// [`check_assumptions`].
    pub fn new(gamma: f64, a: ScalarField, v: ScalarField) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(MfgError::InvalidParameter(format!(
                "gamma must be finite and > 1, got {gamma}"
            )));
        }
        if a.grid() != v.grid() {
            return Err(MfgError::GridMismatch);
        }
        if a.values().iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(MfgError::InvalidParameter(
                "coefficient a must be finite and nonnegative".into(),
            ));
        }
        if v.values().iter().any(|x| !x.is_finite()) {
            return Err(MfgError::InvalidParameter(
                "potential V must be finite".into(),
            ));
        }
        Ok(Self { gamma, a, v })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a(&self) -> &ScalarField {
        &self.a
    }

    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    pub fn grid(&self) -> &TorusGrid {
        self.a.grid()
    }

    pub fn at(&self, lambda: f64) -> Result<LambdaFamily<'_>> {
        LambdaFamily::new(self, lambda)
    }
}

/// `H_λ(x,p) = λ H(x,p) + (1-λ)(1+|p|^2)^{γ/2}`.
#[derive(Debug, Clone, Copy)]
pub struct LambdaFamily<'a> {
    base: &'a HamiltonianSpec,
    lambda: f64,
}

impl<'a> LambdaFamily<'a> {
    pub fn new(base: &'a HamiltonianSpec, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(MfgError::InvalidParameter(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        Ok(Self { base, lambda })
    }

    pub fn base(&self) -> &'a HamiltonianSpec {
        self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.base.gamma
    }

    pub fn grid(&self) -> &'a TorusGrid {
        self.base.grid()
    }

    pub fn dim(&self) -> usize {
        self.base.grid().dim()
    }

    /// Effective kinetic coefficient `λ a(x) + (1-λ)`.
    #[inline]
    pub fn coefficient(&self, node: usize) -> f64 {
        self.lambda * self.base.a.values()[node] + (1.0 - self.lambda)
    }

    #[inline]
    fn norm_sq(&self, p: &[f64]) -> f64 {
        p.iter().take(self.dim()).map(|x| x * x).sum()
    }

    pub fn eval_h(&self, node: usize, p: &[f64]) -> f64 {
        let q = 1.0 + self.norm_sq(p);
        let kinetic = q.powf(0.5 * self.gamma());
        if self.lambda == 0.0 {
            return kinetic;
        }
        self.lambda * (self.base.a.values()[node] * kinetic + self.base.v.values()[node])
            + (1.0 - self.lambda) * kinetic
    }

    pub fn eval_dp_h(&self, node: usize, p: &[f64]) -> Vec3 {
        let gamma = self.gamma();
        let q = 1.0 + self.norm_sq(p);
        let scale = self.coefficient(node) * gamma * q.powf(0.5 * gamma - 1.0);
        let mut out = [0.0; MAX_DIM];
        for (o, pi) in out.iter_mut().zip(p).take(self.dim()) {
            *o = scale * pi;
        }
        out
    }

    /// Hessian in `p`: `c γ (1+|p|^2)^{γ/2-2} [(1+|p|^2) I + (γ-2) p p^T]`.
    pub fn eval_dpp_h(&self, node: usize, p: &[f64]) -> Mat3 {
        let gamma = self.gamma();
        let d = self.dim();
        let q = 1.0 + self.norm_sq(p);
        let c = self.coefficient(node) * gamma;
        let mut out = [[0.0; MAX_DIM]; MAX_DIM];
        if gamma == 2.0 {
            for (i, row) in out.iter_mut().enumerate().take(d) {
                row[i] = c;
            }
            return out;
        }
        let outer = c * (gamma - 2.0) * q.powf(0.5 * gamma - 2.0);
        let diag = c * q.powf(0.5 * gamma - 1.0);
        for i in 0..d {
            for j in 0..d {
                out[i][j] = outer * (p[i] * p[j]);
            }
            out[i][i] += diag;
        }
        out
    }
}

/// Eigenvalues of the leading `dim x dim` block of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Mat3, dim: usize) -> Vec<f64> {
    let mut eig = match dim {
        1 => vec![m[0][0]],
        2 => Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect(),
        _ => Matrix3::new(
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        )
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect(),
    };
    eig.sort_by(f64::total_cmp);
    eig
}

/// Sampling box for the assumption checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SampleBox {
    /// Each momentum component is sampled in `[-p_max, p_max]`.
    pub p_max: f64,
    pub samples_per_axis: usize,
    /// Floor on the sampled minimum Hessian eigenvalue (A1.1).
    pub delta_min: f64,
}

impl Default for SampleBox {
    fn default() -> Self {
        Self {
            p_max: 10.0,
            samples_per_axis: 33,
            delta_min: 1e-8,
        }
    }
}

impl SampleBox {
    fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0) || !self.p_max.is_finite() {
            return Err(MfgError::InvalidParameter(format!(
                "sample radius must be positive, got {}",
                self.p_max
            )));
        }
        if self.samples_per_axis < 2 {
            return Err(MfgError::InvalidParameter(
                "need at least two samples per momentum axis".into(),
            ));
        }
        Ok(())
    }

    /// Tensor grid of momenta in `[-p_max, p_max]^dim`.
    pub fn momenta(&self, dim: usize) -> Vec<Vec3> {
        let k = self.samples_per_axis;
        let axis: Vec<f64> = (0..k)
            .map(|i| -self.p_max + 2.0 * self.p_max * i as f64 / (k - 1) as f64)
            .collect();
        let total = k.pow(dim as u32);
        (0..total)
            .map(|mut flat| {
                let mut p = [0.0; MAX_DIM];
                for slot in p.iter_mut().take(dim).rev() {
                    *slot = axis[flat % k];
                    flat /= k;
                }
                p
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePoint {
    pub node: usize,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub id: String,
    /// Smallest constant making the bound hold on the samples. For A1.1 this
    /// is the sampled minimum Hessian eigenvalue.
    pub constant: f64,
    pub pass: bool,
    /// Sample at which the constant is attained.
    pub worst: SamplePoint,
    /// Sub-bounds folded into this entry (A4 only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub lambda: f64,
    pub gamma: f64,
    pub sample_box: SampleBox,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, id: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Running maximum with the argmax sample.
#[derive(Clone)]
struct Fit {
    value: f64,
    node: usize,
    p: Vec3,
}

impl Fit {
    fn max() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            node: 0,
            p: [0.0; MAX_DIM],
        }
    }

    fn min() -> Self {
        Self {
            value: f64::INFINITY,
            node: 0,
            p: [0.0; MAX_DIM],
        }
    }

    fn push_max(&mut self, value: f64, node: usize, p: &Vec3) {
        if value > self.value || value.is_nan() {
            *self = Self { value, node, p: *p };
        }
    }

    fn push_min(&mut self, value: f64, node: usize, p: &Vec3) {
        if value < self.value || value.is_nan() {
            *self = Self { value, node, p: *p };
        }
    }

    fn point(&self, dim: usize) -> SamplePoint {
        SamplePoint {
            node: self.node,
            p: self.p[..dim].to_vec(),
        }
    }
}

/// Constant needed for an upper bound `q <= C + C r`.
fn upper_constant(q: f64, r: f64) -> f64 {
    if r.is_infinite() {
        return 0.0;
    }
    q / (1.0 + r)
}

/// Smallest `C > 0` with `r / C - C <= q`, the positive root of `C^2 + q C - r`.
fn lower_constant(q: f64, r: f64) -> f64 {
    let disc = (q * q + 4.0 * r).sqrt();
    if q >= 0.0 {
        // stable form of (-q + disc) / 2
        2.0 * r / (q + disc)
    } else {
        0.5 * (disc - q)
    }
}

/// Sampled check of A1–A4 over all nodes and a tensor box of momenta.
///
/// Lower-growth bounds of the form `C|p|^γ - C <= Q` are fitted as
/// `|p|^γ / C - C <= Q` so that a single constant is monotone in both
/// directions of a two-sided bound.
pub fn check_assumptions(
    fam: &LambdaFamily<'_>,
    sample_box: &SampleBox,
) -> Result<AssumptionReport> {
    sample_box.validate()?;
    let grid = *fam.grid();
    let dim = grid.dim();
    let gamma = fam.gamma();
    let momenta = sample_box.momenta(dim);
    let dx = eval_dx_h_norms(fam, sample_box)?;
    let h = grid.h();

    let mut eig_min = Fit::min();
    let mut a12 = Fit::max();
    let mut a2 = Fit::max();
    let mut a3 = Fit::max();
    let mut a4_pp = Fit::max();
    let mut a4_x = Fit::max();
    let mut a4_xx = Fit::max();
    let mut a4_xp = Fit::max();

    for node in 0..grid.len() {
        for p in &momenta {
            let norm_p = p[..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
            let pg = norm_p.powf(gamma);
            let hval = fam.eval_h(node, p);
            let dph = fam.eval_dp_h(node, p);
            let dpp = fam.eval_dpp_h(node, p);
            let eig = symmetric_eigenvalues(&dpp, dim);

            eig_min.push_min(eig[0], node, p);

            let c = upper_constant(hval, pg).max(lower_constant(hval, pg));
            a12.push_max(c, node, p);

            let dph_norm = dph[..dim].iter().map(|x| x * x).sum::<f64>().sqrt();
            a2.push_max(upper_constant(dph_norm, norm_p.powf(gamma - 1.0)), node, p);

            let lagr = (0..dim).map(|i| p[i] * dph[i]).sum::<f64>() - hval;
            a3.push_max(lower_constant(lagr, pg), node, p);

            let spec = eig.iter().fold(0.0, |acc: f64, e| acc.max(e.abs()));
            a4_pp.push_max(upper_constant(spec, norm_p.powf(gamma - 2.0)), node, p);

            let kin = (1.0 + norm_p * norm_p).powf(0.5 * gamma);
            a4_x.push_max(dx.dx_norm(node, p) / kin, node, p);
            a4_xx.push_max(dx.dxx_norm(node, p) / kin, node, p);

            // mixed derivative by centered differences of D_pH across nodes
            let mut mixed = 0.0;
            for axis in 0..dim {
                let fwd = fam.eval_dp_h(grid.shift(node, axis, 1), p);
                let bwd = fam.eval_dp_h(grid.shift(node, axis, -1), p);
                for j in 0..dim {
                    let d = (fwd[j] - bwd[j]) / (2.0 * h);
                    mixed += d * d;
                }
            }
            a4_xp.push_max(
                upper_constant(mixed.sqrt(), norm_p.powf(gamma - 1.0)),
                node,
                p,
            );
        }
    }

    let finite = |f: &Fit| f.value.is_finite();
    let entry = |id: &str, f: &Fit, pass: bool| AssumptionCheck {
        id: id.to_string(),
        constant: f.value,
        pass,
        worst: f.point(dim),
        parts: Vec::new(),
    };

    let a4_parts = [
        ("Dpp", &a4_pp),
        ("Dx", &a4_x),
        ("Dxx", &a4_xx),
        ("Dxp", &a4_xp),
    ];
    let a4_worst = a4_parts.iter().map(|(_, f)| *f).fold(Fit::max(), |acc, f| {
        if f.value > acc.value {
            f.clone()
        } else {
            acc
        }
    });
    let mut a4 = entry("A4", &a4_worst, a4_parts.iter().all(|(_, f)| finite(f)));
    a4.parts = a4_parts
        .iter()
        .map(|(k, f)| (k.to_string(), f.value))
        .collect();

    Ok(AssumptionReport {
        lambda: fam.lambda(),
        gamma,
        sample_box: *sample_box,
        checks: vec![
            entry("A1.1", &eig_min, eig_min.value >= sample_box.delta_min),
            entry("A1.2", &a12, finite(&a12)),
            entry("A2", &a2, finite(&a2)),
            entry("A3", &a3, finite(&a3)),
            a4,
        ],
    })
}

/// Spatial-derivative data of `H_λ`, which is affine in `a(x)` and `V(x)`.
#[derive(Debug, Clone)]
pub struct DxHNorms {
    lambda: f64,
    gamma: f64,
    grad_a: VectorField,
    grad_v: VectorField,
    hess_a: Vec<Mat3>,
    hess_v: Vec<Mat3>,
    dim: usize,
    /// Smallest `C` with `|D_x H| <= C (1+|p|^2)^{γ/2}` on the sample box.
    pub c_dx: f64,
    /// Same for the Frobenius norm of `D_xx H`.
    pub c_dxx: f64,
}

impl DxHNorms {
    fn kinetic(&self, p: &[f64]) -> f64 {
        (1.0 + p.iter().take(self.dim).map(|x| x * x).sum::<f64>()).powf(0.5 * self.gamma)
    }

    /// `|λ (Da(x) (1+|p|^2)^{γ/2} + DV(x))|`.
    pub fn dx_norm(&self, node: usize, p: &[f64]) -> f64 {
        let k = self.kinetic(p);
        let da = self.grad_a.at(node);
        let dv = self.grad_v.at(node);
        let s: f64 = (0..self.dim)
            .map(|i| {
                let c = self.lambda * (da[i] * k + dv[i]);
                c * c
            })
            .sum();
        s.sqrt()
    }

    pub fn dxx_norm(&self, node: usize, p: &[f64]) -> f64 {
        let k = self.kinetic(p);
        let ha = &self.hess_a[node];
        let hv = &self.hess_v[node];
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let c = self.lambda * (ha[i][j] * k + hv[i][j]);
                s += c * c;
            }
        }
        s.sqrt()
    }
}

/// Discrete Hessian: compact second differences on the diagonal, centered
/// cross differences off it.
fn field_hessian(f: &ScalarField) -> Vec<Mat3> {
    let grid = *f.grid();
    let dim = grid.dim();
    let h2 = grid.h() * grid.h();
    let v = f.values();
    (0..grid.len())
        .map(|i| {
            let mut m = [[0.0; MAX_DIM]; MAX_DIM];
            for a in 0..dim {
                m[a][a] = (v[grid.shift(i, a, 1)] - 2.0 * v[i] + v[grid.shift(i, a, -1)]) / h2;
                for b in (a + 1)..dim {
                    let pp = v[grid.shift(grid.shift(i, a, 1), b, 1)];
                    let pm = v[grid.shift(grid.shift(i, a, 1), b, -1)];
                    let mp = v[grid.shift(grid.shift(i, a, -1), b, 1)];
                    let mm = v[grid.shift(grid.shift(i, a, -1), b, -1)];
                    let c = (pp - pm - mp + mm) / (4.0 * h2);
                    m[a][b] = c;
                    m[b][a] = c;
                }
            }
            m
        })
        .collect()
}

/// Per-node `|D_x H|`, `|D_xx H|` data from grid derivatives of `a` and `V`,
/// with the fitted A4 constants over the sample box.
pub fn eval_dx_h_norms(fam: &LambdaFamily<'_>, sample_box: &SampleBox) -> Result<DxHNorms> {
    sample_box.validate()?;
    let base = fam.base();
    let dim = fam.dim();
    let mut out = DxHNorms {
        lambda: fam.lambda(),
        gamma: fam.gamma(),
        grad_a: gradient(base.a()),
        grad_v: gradient(base.v()),
        hess_a: field_hessian(base.a()),
        hess_v: field_hessian(base.v()),
        dim,
        c_dx: 0.0,
        c_dxx: 0.0,
    };
    let momenta = sample_box.momenta(dim);
    let (mut c_dx, mut c_dxx) = (0.0_f64, 0.0_f64);
    for node in 0..fam.grid().len() {
        for p in &momenta {
            let k = out.kinetic(p);
            c_dx = c_dx.max(out.dx_norm(node, p) / k);
            c_dxx = c_dxx.max(out.dxx_norm(node, p) / k);
        }
    }
    out.c_dx = c_dx;
    out.c_dxx = c_dxx;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn spec(dim: usize, n: usize, gamma: f64) -> HamiltonianSpec {
        let g = TorusGrid::new(dim, n).unwrap();
        let a = g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos());
        let v = g.sample(|x| 0.5 * (2.0 * PI * x[x.len() - 1]).sin());
        HamiltonianSpec::new(gamma, a, v).unwrap()
    }

    fn unit(dim: usize, n: usize, gamma: f64) -> HamiltonianSpec {
        let g = TorusGrid::new(dim, n).unwrap();
        HamiltonianSpec::new(gamma, g.constant(1.0), g.zeros()).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        let g = TorusGrid::new(1, 8).unwrap();
        assert!(HamiltonianSpec::new(1.0, g.constant(1.0), g.zeros()).is_err());
        assert!(HamiltonianSpec::new(2.0, g.constant(-1.0), g.zeros()).is_err());
        let other = TorusGrid::new(1, 16).unwrap();
        assert!(HamiltonianSpec::new(2.0, g.constant(1.0), other.zeros()).is_err());
        let s = unit(1, 8, 2.0);
        assert!(s.at(1.5).is_err());
        assert!(s.at(-0.1).is_err());
    }

    #[test]
    fn eval_h_examples() {
        let s = spec(2, 8, 1.7);
        let f1 = s.at(1.0).unwrap();
        for node in [0, 5, 17] {
            let expect = s.a().values()[node] + s.v().values()[node];
            assert!((f1.eval_h(node, &[0.0, 0.0, 0.0]) - expect).abs() < 1e-15);
        }
        let f0 = s.at(0.0).unwrap();
        assert_eq!(f0.eval_h(3, &[0.0; 3]), 1.0);
        let q = unit(2, 8, 2.0);
        assert_eq!(q.at(1.0).unwrap().eval_h(0, &[3.0, 4.0, 0.0]), 26.0);
    }

    #[test]
    fn dp_h_examples() {
        let s = spec(2, 8, 2.0);
        let f = s.at(1.0).unwrap();
        assert_eq!(f.eval_dp_h(4, &[0.0; 3]), [0.0; 3]);
        let p = [0.7, -1.3, 0.0];
        let d = f.eval_dp_h(4, &p);
        let a = s.a().values()[4];
        assert!((d[0] - 2.0 * a * p[0]).abs() < 1e-15);
        assert!((d[1] - 2.0 * a * p[1]).abs() < 1e-15);
    }

    #[test]
    fn dpp_h_examples() {
        let s = spec(3, 4, 2.0);
        let f = s.at(1.0).unwrap();
        let m = f.eval_dpp_h(7, &[1.0, 2.0, -3.0]);
        let a = s.a().values()[7];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[i][j], if i == j { 2.0 * a } else { 0.0 });
            }
        }
        let s = spec(2, 8, 1.5);
        let f = s.at(0.4).unwrap();
        let m = f.eval_dpp_h(9, &[0.0; 3]);
        let c = 0.4 * s.a().values()[9] + 0.6;
        assert!((m[0][0] - c * 1.5).abs() < 1e-15 && m[0][1] == 0.0);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for gamma in [1.3, 2.0, 2.7] {
            let s = spec(3, 4, gamma);
            for _ in 0..100 {
                let f = s.at(rng.gen_range(0.0..=1.0)).unwrap();
                let node = rng.gen_range(0..64);
                let mut p = [0.0; 3];
                loop {
                    for x in p.iter_mut() {
                        *x = rng.gen_range(-6.0..6.0);
                    }
                    if p.iter().map(|x| x * x).sum::<f64>().sqrt() <= 10.0 {
                        break;
                    }
                }
                let step = 1e-6;
                let dph = f.eval_dp_h(node, &p);
                let dpp = f.eval_dpp_h(node, &p);
                let scale_dp = dph.iter().fold(1e-300_f64, |a, x| a.max(x.abs()));
                let scale_pp = dpp.iter().flatten().fold(1e-300_f64, |a, x| a.max(x.abs()));
                for i in 0..3 {
                    let (mut pp, mut pm) = (p, p);
                    pp[i] += step;
                    pm[i] -= step;
                    let fd = (f.eval_h(node, &pp) - f.eval_h(node, &pm)) / (2.0 * step);
                    assert!((fd - dph[i]).abs() / scale_dp < 1e-7, "gamma {gamma}");
                    let gp = f.eval_dp_h(node, &pp);
                    let gm = f.eval_dp_h(node, &pm);
                    for j in 0..3 {
                        let fd2 = (gp[j] - gm[j]) / (2.0 * step);
                        assert!((fd2 - dpp[j][i]).abs() / scale_pp < 1e-6, "gamma {gamma}");
                    }
                }
            }
        }
    }

    #[test]
    fn lambda_zero_drift_is_node_independent() {
        let s = spec(2, 8, 1.8);
        let f = s.at(0.0).unwrap();
        let p = [0.3, -2.2, 0.0];
        let first = f.eval_dp_h(0, &p);
        for node in 0..64 {
            assert_eq!(f.eval_dp_h(node, &p), first);
        }
    }

    #[test]
    fn convexity_on_many_samples() {
        let s = spec(2, 16, 1.4);
        let f = s.at(1.0).unwrap();
        let sb = SampleBox {
            samples_per_axis: 25,
            ..SampleBox::default()
        };
        let mut count = 0;
        for node in 0..s.grid().len() {
            for p in sb.momenta(2) {
                let m = f.eval_dpp_h(node, &p);
                assert_eq!(m[0][1], m[1][0]);
                assert!(symmetric_eigenvalues(&m, 2)[0] > 0.0);
                count += 1;
            }
        }
        assert!(count >= 10_000);
    }

    #[test]
    fn quadratic_unit_assumptions() {
        let s = unit(2, 4, 2.0);
        let f = s.at(1.0).unwrap();
        let sb = SampleBox {
            samples_per_axis: 9,
            ..SampleBox::default()
        };
        let r = check_assumptions(&f, &sb).unwrap();
        assert!(r.passed());
        let a11 = r.get("A1.1").unwrap();
        assert!((a11.constant - 2.0).abs() < 1e-14);
        let a3 = r.get("A3").unwrap();
        assert!(
            (a3.constant - 1.0).abs() < 1e-12,
            "A3 constant {}",
            a3.constant
        );
        // with C = 1 the bound |p|^2 - 1 >= -1 + |p|^2 is tight everywhere
        for c in &r.checks {
            assert!(c.constant.is_finite());
        }
    }

    #[test]
    fn degenerate_coefficient_fails_a11() {
        let g = TorusGrid::new(1, 8).unwrap();
        let a = g.sample(|x| (PI * x[0]).sin().powi(2));
        assert_eq!(a.values()[0], 0.0);
        let s = HamiltonianSpec::new(2.0, a, g.zeros()).unwrap();
        let r = check_assumptions(&s.at(1.0).unwrap(), &SampleBox::default()).unwrap();
        let a11 = r.get("A1.1").unwrap();
        assert!(!a11.pass);
        assert_eq!(a11.constant, 0.0);
        assert_eq!(a11.worst.node, 0);
        assert!(!r.passed());
    }

    #[test]
    fn rejects_nonpositive_radius() {
        let s = unit(1, 8, 2.0);
        let sb = SampleBox {
            p_max: 0.0,
            ..SampleBox::default()
        };
        assert!(check_assumptions(&s.at(1.0).unwrap(), &sb).is_err());
    }

    #[test]
    fn dx_norms() {
        let g = TorusGrid::new(1, 64).unwrap();
        let s = HamiltonianSpec::new(2.0, g.constant(3.0), g.constant(-1.0)).unwrap();
        let d = eval_dx_h_norms(&s.at(1.0).unwrap(), &SampleBox::default()).unwrap();
        assert_eq!(d.dx_norm(5, &[4.0, 0.0, 0.0]), 0.0);
        assert_eq!(d.c_dx, 0.0);

        let v = g.sample(|x| (2.0 * PI * x[0]).sin());
        let s = HamiltonianSpec::new(2.0, g.constant(1.0), v).unwrap();
        let d = eval_dx_h_norms(&s.at(1.0).unwrap(), &SampleBox::default()).unwrap();
        let h = g.h();
        let mut max_dv = 0.0_f64;
        for node in 0..g.len() {
            let x = g.position(node)[0];
            let exact = 2.0 * PI * (2.0 * PI * x).cos().abs();
            for p in [0.0, 3.0, -8.0] {
                let got = d.dx_norm(node, &[p, 0.0, 0.0]);
                assert!((got - exact).abs() <= 2.0 * PI * 4.0 * PI * PI * h * h / 6.0 + 1e-12);
            }
            max_dv = max_dv.max(d.dx_norm(node, &[0.0; 3]));
        }
        assert!((d.c_dx - max_dv).abs() < 1e-14);
    }
}
