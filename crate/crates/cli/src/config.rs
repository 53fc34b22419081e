//! `config.json` schema and its translation into solver inputs.

use std::path::{Path, PathBuf};

use mfg_core::{Coupling, DiagnosticsOptions, HamiltonianSpec, SampleBox, SolverConfig, TorusGrid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::preset;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Log,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dim: usize,
    pub n: usize,
    pub gamma: f64,
    #[serde(default = "default_a")]
    pub a_preset: String,
    #[serde(default = "default_v", alias = "V_preset")]
    pub v_preset: String,
    pub coupling: CouplingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

fn default_a() -> String {
    "const:1".into()
}

fn default_v() -> String {
    "const:0".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub lambda_step_init: f64,
    pub lambda_step_min: f64,
    pub positivity_kappa: f64,
    pub armijo_c: f64,
    pub max_backtracks: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            newton_tol: d.newton_tol,
            max_newton_iters: d.max_newton_iters,
            lambda_step_init: d.lambda_step_init,
            lambda_step_min: d.lambda_step_min,
            positivity_kappa: d.positivity_kappa,
            armijo_c: d.armijo_c,
            max_backtracks: d.max_backtracks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub enforce: bool,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self { enforce: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsOptions,
    #[serde(default)]
    pub checks: SampleBox,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub gates: GateConfig,
}

/// Solver inputs resolved from a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Problem {
    pub base: HamiltonianSpec,
    pub coupling: Coupling,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse { message, .. } => CliError::Parse {
                path: path.into(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn coupling(&self) -> CliResult<Coupling> {
        match (self.problem.coupling, self.problem.alpha) {
            (CouplingKind::Log, None) => Ok(Coupling::Log),
            (CouplingKind::Log, Some(_)) => Err(CliError::Config(
                "alpha is only meaningful for the power coupling".into(),
            )),
            (CouplingKind::Power, Some(alpha)) => Ok(Coupling::power(alpha)?),
            (CouplingKind::Power, None) => {
                Err(CliError::Config("power coupling needs alpha".into()))
            }
        }
    }

    pub fn grid(&self) -> CliResult<TorusGrid> {
        Ok(TorusGrid::new(self.problem.dim, self.problem.n)?)
    }

    pub fn resolve(&self, no_gates: bool) -> CliResult<Problem> {
        let grid = self.grid()?;
        let a = preset::evaluate(&self.problem.a_preset, &grid)?;
        let v = preset::evaluate(&self.problem.v_preset, &grid)?;
        let base = HamiltonianSpec::new(self.problem.gamma, a, v)?;
        let s = self.solver;
        let solver = SolverConfig {
            newton_tol: s.newton_tol,
            max_newton_iters: s.max_newton_iters,
            lambda_step_init: s.lambda_step_init,
            lambda_step_min: s.lambda_step_min,
            positivity_kappa: s.positivity_kappa,
            armijo_c: s.armijo_c,
            max_backtracks: s.max_backtracks,
            enforce_gates: self.gates.enforce && !no_gates,
            sample_box: self.checks,
        };
        solver.validate()?;
        Ok(Problem {
            base,
            coupling: self.coupling()?,
            solver,
            diagnostics: self.diagnostics,
        })
    }
}
