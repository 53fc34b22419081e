//! Damped Newton at fixed λ and the homotopy march λ: 0 → 1.

use serde::{Deserialize, Serialize};

use crate::coupling::{check_coupling_gate, Coupling, GateResult};
use crate::error::{MfgError, Result};
use crate::grid::{gradient, integrate, TorusGrid};
use crate::hamiltonian::{
    check_assumptions, AssumptionReport, HamiltonianSpec, LambdaFamily, SampleBox,
};
use crate::system::{assemble_jacobian, residual, solve_linear, ResidualVector, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Target sup norm of the full residual.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub lambda_step_init: f64,
    pub lambda_step_min: f64,
    /// Fraction-to-the-boundary factor: accepted steps keep `min m >= κ min m_prev`.
    pub positivity_kappa: f64,
    pub armijo_c: f64,
    pub max_backtracks: usize,
    /// Refuse to start when A1–A4 or the coupling gate fail.
    pub enforce_gates: bool,
    pub sample_box: SampleBox,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton_iters: 30,
            lambda_step_init: 0.125,
            lambda_step_min: 1e-4,
            positivity_kappa: 0.1,
            armijo_c: 1e-4,
            max_backtracks: 20,
            enforce_gates: true,
            sample_box: SampleBox::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("newton_tol", self.newton_tol),
            ("lambda_step_init", self.lambda_step_init),
            ("lambda_step_min", self.lambda_step_min),
            ("armijo_c", self.armijo_c),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(MfgError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.positivity_kappa > 0.0 && self.positivity_kappa < 1.0) {
            return Err(MfgError::InvalidParameter(format!(
                "positivity_kappa must lie in (0, 1), got {}",
                self.positivity_kappa
            )));
        }
        if self.lambda_step_init > 1.0 || self.lambda_step_min > self.lambda_step_init {
            return Err(MfgError::InvalidParameter(
                "need lambda_step_min <= lambda_step_init <= 1".into(),
            ));
        }
        if self.max_newton_iters == 0 {
            return Err(MfgError::InvalidParameter(
                "max_newton_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// State after an accepted Newton step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterateStats {
    pub residual: f64,
    pub step: f64,
    pub min_m: f64,
    /// `∫m - 1` after renormalization.
    pub mass_error: f64,
    pub mean_u: f64,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub solution: Solution,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<IterateStats>,
}

/// Shifts `u` to mean zero and rescales `m` to unit mass.
fn renormalize(v: &mut Solution) {
    let mean = integrate(&v.u);
    for x in v.u.values_mut() {
        *x -= mean;
    }
    let mass = integrate(&v.m);
    for x in v.m.values_mut() {
        *x /= mass;
    }
}

/// `u ≡ 0, m ≡ 1, H̄ = 1 - g(1)`: the exact solution at λ = 0.
pub fn initial_solution(c: &Coupling, grid: TorusGrid) -> Result<Solution> {
    Solution::new(grid.zeros(), grid.constant(1.0), 1.0 - c.g(1.0)?, 0.0)
}

pub fn newton_solve(
    fam: &LambdaFamily<'_>,
    c: &Coupling,
    v0: &Solution,
    cfg: &SolverConfig,
) -> Result<NewtonOutcome> {
    let mut v = v0.clone();
    v.lambda = fam.lambda();
    let mut r = residual(fam, c, &v)?;
    let mut norm = r.sup_norm();
    let mut history = Vec::new();
    if !norm.is_finite() {
        return Err(MfgError::NonConvergence {
            iterations: 0,
            residual: norm,
            reason: "non-finite initial residual".into(),
            last: Box::new(v),
        });
    }

    for iteration in 1..=cfg.max_newton_iters {
        if norm <= cfg.newton_tol {
            return Ok(NewtonOutcome {
                solution: v,
                iterations: iteration - 1,
                residual: norm,
                history,
            });
        }
        let jac = assemble_jacobian(fam, c, &v)?;
        let rhs: Vec<f64> = r.constrained().iter().map(|x| -x).collect();
        let delta = solve_linear(&jac, &rhs)?;
        let floor = cfg.positivity_kappa * v.m.min();

        let mut s = 1.0;
        let mut accepted: Option<(Solution, ResidualVector, f64)> = None;
        for _ in 0..=cfg.max_backtracks {
            let mut trial = v.stepped(&delta, s);
            if trial.m.min() >= floor {
                renormalize(&mut trial);
                match residual(fam, c, &trial) {
                    Ok(rt) => {
                        let nt = rt.sup_norm();
                        if nt <= (1.0 - cfg.armijo_c * s) * norm {
                            accepted = Some((trial, rt, nt));
                            break;
                        }
                    }
                    Err(MfgError::Positivity { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            s *= 0.5;
        }

        let Some((next, rn, nn)) = accepted else {
            return Err(MfgError::NonConvergence {
                iterations: iteration,
                residual: norm,
                reason: "line search exhausted".into(),
                last: Box::new(v),
            });
        };
        v = next;
        r = rn;
        norm = nn;
        history.push(IterateStats {
            residual: norm,
            step: s,
            min_m: v.m.min(),
            mass_error: -r.mass_gap,
            mean_u: r.mean_u,
        });
    }

    if norm <= cfg.newton_tol {
        return Ok(NewtonOutcome {
            solution: v,
            iterations: cfg.max_newton_iters,
            residual: norm,
            history,
        });
    }
    Err(MfgError::NonConvergence {
        iterations: cfg.max_newton_iters,
        residual: norm,
        reason: "iteration limit reached".into(),
        last: Box::new(v),
    })
}

/// One accepted point on the continuation path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationRecord {
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
    pub hbar: f64,
    pub m_min: f64,
    pub m_linf: f64,
    pub du_l2: f64,
    pub iterates: Vec<IterateStats>,
}

impl ContinuationRecord {
    fn new(v: &Solution, iterations: usize, residual: f64, iterates: Vec<IterateStats>) -> Self {
        let du = gradient(&v.u);
        Self {
            lambda: v.lambda,
            iterations,
            residual,
            hbar: v.hbar,
            m_min: v.m.min(),
            m_linf: v.m.sup_norm(),
            du_l2: integrate(&du.dot(&du)).sqrt(),
            iterates,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationTrace {
    /// The λ = 0 starting point (not part of `records`).
    pub start: ContinuationRecord,
    /// Accepted points with strictly increasing λ.
    pub records: Vec<ContinuationRecord>,
    /// Last accepted solution; λ = 1 on success.
    pub solution: Solution,
    pub warnings: Vec<String>,
    pub assumptions: AssumptionReport,
    pub gate: GateResult,
}

fn retryable(e: &MfgError) -> bool {
    matches!(
        e,
        MfgError::NonConvergence { .. } | MfgError::LinearSolve(_) | MfgError::Positivity { .. }
    )
}

pub fn continuation_solve(
    base: &HamiltonianSpec,
    c: &Coupling,
    cfg: &SolverConfig,
) -> Result<ContinuationTrace> {
    continuation_solve_with(base, c, cfg, &[], &mut |_, _| {})
}

/// Marches λ from 0 to 1, landing exactly on every value in `stops` and
/// calling `observer` with each accepted record and its solution.
pub fn continuation_solve_with(
    base: &HamiltonianSpec,
    c: &Coupling,
    cfg: &SolverConfig,
    stops: &[f64],
    observer: &mut dyn FnMut(&ContinuationRecord, &Solution),
) -> Result<ContinuationTrace> {
    cfg.validate()?;
    let grid = *base.grid();
    let assumptions = check_assumptions(&base.at(1.0)?, &cfg.sample_box)?;
    let gate = check_coupling_gate(c, base.gamma(), grid.dim())?;

    let mut warnings = Vec::new();
    let mut failures = Vec::new();
    for check in assumptions.checks.iter().filter(|ch| !ch.pass) {
        failures.push(format!("{} (constant {:e})", check.id, check.constant));
    }
    if !gate.pass {
        failures.push(format!(
            "{} (bound {})",
            gate.id,
            gate.bound.map_or("none".to_string(), |b| b.to_string())
        ));
    }
    if !failures.is_empty() {
        let msg = failures.join(", ");
        if cfg.enforce_gates {
            return Err(MfgError::Gate(msg));
        }
        warnings.push(format!("gates overridden: {msg}"));
    }
    warnings.extend(gate.notes.iter().cloned());

    let mut stops: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|s| *s > 0.0 && *s < 1.0)
        .collect();
    stops.sort_by(f64::total_cmp);

    let mut v = initial_solution(c, grid)?;
    let start_res = residual(&base.at(0.0)?, c, &v)?.sup_norm();
    let start = ContinuationRecord::new(&v, 0, start_res, Vec::new());

    let mut records = Vec::new();
    let mut lambda = 0.0_f64;
    let mut step = cfg.lambda_step_init;

    while lambda < 1.0 {
        let mut target = (lambda + step).min(1.0);
        if 1.0 - target < 1e-12 {
            target = 1.0;
        }
        if let Some(&stop) = stops.iter().find(|&&s| s > lambda) {
            target = target.min(stop);
        }
        let fam = base.at(target)?;
        match newton_solve(&fam, c, &v, cfg) {
            Ok(out) => {
                let rec = ContinuationRecord::new(
                    &out.solution,
                    out.iterations,
                    out.residual,
                    out.history,
                );
                observer(&rec, &out.solution);
                records.push(rec);
                v = out.solution;
                lambda = target;
                step = (step * 1.5).min(cfg.lambda_step_init);
            }
            Err(e) if retryable(&e) => {
                step *= 0.5;
                if step < cfg.lambda_step_min {
                    return Err(MfgError::StepCollapse {
                        lambda,
                        step_min: cfg.lambda_step_min,
                        partial: Box::new(ContinuationTrace {
                            start,
                            records,
                            solution: v,
                            warnings,
                            assumptions,
                            gate,
                        }),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }

    Ok(ContinuationTrace {
        start,
        records,
        solution: v,
        warnings,
        assumptions,
        gate,
    })
}
