//! Artifact files: `solution.json`, `diagnostics.json`, `summary.json`,
//! `trace.csv` and `sweep.csv`.

use std::fs;
use std::path::Path;

use mfg_core::{ContinuationRecord, Coupling, DiagnosticsReport, ScalarField, Solution, TorusGrid};
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;
use crate::error::{CliError, CliResult};

pub const TRACE_COLUMNS: [&str; 7] = [
    "lambda", "iters", "residual", "hbar", "m_min", "m_linf", "du_l2",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub schema_version: u32,
    pub dim: usize,
    pub n: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub hbar: f64,
    pub u: Vec<f64>,
    pub m: Vec<f64>,
    pub coupling: Coupling,
}

impl SolutionFile {
    pub fn from_solution(v: &Solution, gamma: f64, coupling: Coupling) -> Self {
        let grid = v.grid();
        Self {
            schema_version: SCHEMA_VERSION,
            dim: grid.dim(),
            n: grid.n(),
            gamma,
            lambda: v.lambda,
            hbar: v.hbar,
            u: v.u.values().to_vec(),
            m: v.m.values().to_vec(),
            coupling,
        }
    }

    pub fn to_solution(&self) -> CliResult<Solution> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "solution schema_version {} is not {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let grid = TorusGrid::new(self.dim, self.n)?;
        let u = ScalarField::new(grid, self.u.clone())?;
        let m = ScalarField::new(grid, self.m.clone())?;
        Ok(Solution::new(u, m, self.hbar, self.lambda)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsFile<'a> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: &'a DiagnosticsReport,
}

/// Decimal with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_solution(path: &Path) -> CliResult<SolutionFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn trace_csv(records: &[ContinuationRecord]) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let row = [
            fmt_real(r.lambda),
            r.iterations.to_string(),
            fmt_real(r.residual),
            fmt_real(r.hbar),
            fmt_real(r.m_min),
            fmt_real(r.m_linf),
            fmt_real(r.du_l2),
        ];
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
