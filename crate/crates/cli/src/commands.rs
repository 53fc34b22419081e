//! `check`, `solve`, `sweep` and `diagnose`.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::ValueEnum;
use mfg_core::{
    check_assumptions, check_coupling_gate, continuation_solve_with, diagnose, initial_solution,
    ContinuationRecord, DiagnosticsReport, MfgError, Solution,
};
use serde::Serialize;

use crate::config::{CouplingKind, Format, Problem, RunConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt_real, DiagnosticsFile, SolutionFile};

/// Residual above which `diagnose` flags its input as a non-solution.
pub const RESIDUAL_WARNING: f64 = 1e-6;

pub const SWEEP_COLUMNS: [&str; 19] = [
    "axis",
    "value",
    "status",
    "lambda",
    "hbar",
    "m_linf",
    "m_min",
    "lnm_l1",
    "du_l2",
    "g_l1",
    "g_l2",
    "g_linf",
    "energy_gap",
    "residual",
    "oracle",
    "moser_ratio",
    "bernstein_ratio",
    "logprop_ratio",
    "slack",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepAxis {
    Gamma,
    Alpha,
    N,
    LambdaRecord,
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::Alpha => "alpha",
            SweepAxis::N => "n",
            SweepAxis::LambdaRecord => "lambda-record",
        }
    }
}

#[derive(Serialize)]
struct CheckReport<'a> {
    schema_version: u32,
    pass: bool,
    gate: &'a mfg_core::GateResult,
    assumptions: &'a mfg_core::AssumptionReport,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    schema_version: u32,
    status: i32,
    lambda: f64,
    records: usize,
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Exit status 0 when A1–A4 and the coupling gate pass, 1 otherwise.
pub fn cmd_check(cfg: &RunConfig) -> CliResult<i32> {
    let problem = cfg.resolve(false)?;
    let grid = problem.base.grid();
    let assumptions = check_assumptions(&problem.base.at(1.0)?, &problem.solver.sample_box)?;
    let gate = check_coupling_gate(&problem.coupling, problem.base.gamma(), grid.dim())?;
    let pass = assumptions.passed() && gate.pass;
    let report = CheckReport {
        schema_version: SCHEMA_VERSION,
        pass,
        gate: &gate,
        assumptions: &assumptions,
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Numerical(format!("cannot serialize report: {e}")))?;
    println!("{text}");
    Ok(if pass { 0 } else { 1 })
}

pub struct SolveOutcome {
    pub solution: Solution,
    pub report: DiagnosticsReport,
    pub records: Vec<ContinuationRecord>,
    pub warnings: Vec<String>,
}

fn write_summary(
    cfg: &RunConfig,
    out: &Path,
    status: i32,
    lambda: f64,
    records: usize,
    warnings: &[String],
    error: Option<String>,
) -> CliResult<()> {
    if !cfg.output.wants(Format::Json) {
        return Ok(());
    }
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        status,
        lambda,
        records,
        warnings,
        error,
    };
    io::write_json(&out.join("summary.json"), &summary)
}

/// Rejects diagnostic exponents outside their ranges before any solve starts.
fn validate_diagnostics(problem: &Problem) -> CliResult<()> {
    let start = initial_solution(&problem.coupling, *problem.base.grid())?;
    diagnose(
        &problem.base.at(0.0)?,
        &problem.coupling,
        &start,
        &problem.diagnostics,
    )?;
    Ok(())
}

fn solve_with(
    cfg: &RunConfig,
    out: &Path,
    no_gates: bool,
    stops: &[f64],
    observer: &mut dyn FnMut(&Problem, &ContinuationRecord, &Solution),
) -> CliResult<SolveOutcome> {
    let problem = cfg.resolve(no_gates)?;
    validate_diagnostics(&problem)?;
    io::ensure_dir(out)?;
    let result = continuation_solve_with(
        &problem.base,
        &problem.coupling,
        &problem.solver,
        stops,
        &mut |rec, v| observer(&problem, rec, v),
    );
    let trace = match result {
        Ok(trace) => trace,
        Err(MfgError::StepCollapse {
            lambda,
            step_min,
            partial,
        }) => {
            if cfg.output.wants(Format::Csv) {
                io::write_text(&out.join("trace.csv"), &io::trace_csv(&partial.records))?;
            }
            let err = CliError::Numerical(format!(
                "continuation stalled at lambda = {lambda} (step below {step_min})"
            ));
            write_summary(
                cfg,
                out,
                3,
                lambda,
                partial.records.len(),
                &partial.warnings,
                Some(err.to_string()),
            )?;
            return Err(err);
        }
        Err(e) => {
            let err = CliError::from(e);
            write_summary(
                cfg,
                out,
                err.exit_code(),
                0.0,
                0,
                &[],
                Some(err.to_string()),
            )?;
            return Err(err);
        }
    };
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    let fam = problem.base.at(trace.solution.lambda)?;
    let report = diagnose(
        &fam,
        &problem.coupling,
        &trace.solution,
        &problem.diagnostics,
    )?;
    if cfg.output.wants(Format::Csv) {
        io::write_text(&out.join("trace.csv"), &io::trace_csv(&trace.records))?;
    }
    if cfg.output.wants(Format::Json) {
        let file =
            SolutionFile::from_solution(&trace.solution, problem.base.gamma(), problem.coupling);
        io::write_json(&out.join("solution.json"), &file)?;
        io::write_json(
            &out.join("diagnostics.json"),
            &DiagnosticsFile {
                schema_version: SCHEMA_VERSION,
                report: &report,
            },
        )?;
    }
    write_summary(
        cfg,
        out,
        0,
        trace.solution.lambda,
        trace.records.len(),
        &trace.warnings,
        None,
    )?;
    Ok(SolveOutcome {
        solution: trace.solution,
        report,
        records: trace.records,
        warnings: trace.warnings,
    })
}

pub fn cmd_solve(cfg: &RunConfig, out: &Path, no_gates: bool) -> CliResult<SolveOutcome> {
    solve_with(cfg, out, no_gates, &[], &mut |_, _, _| {})
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn sweep_row(
    axis: SweepAxis,
    value: f64,
    status: i32,
    report: Option<&DiagnosticsReport>,
) -> String {
    let mut cells = vec![axis.name().to_string(), fmt_real(value), status.to_string()];
    match report {
        Some(r) => cells.extend([
            fmt_real(r.lambda),
            fmt_real(r.hbar),
            fmt_real(r.m_linf),
            fmt_real(r.m_min),
            fmt_real(r.lnm_l1),
            fmt_real(r.du_l2),
            fmt_real(r.g_l1),
            fmt_real(r.g_l2),
            fmt_real(r.g_linf),
            fmt_real(r.energy_gap),
            fmt_real(r.residual_sup),
            opt(r.oracle),
            opt(r.moser.map(|m| m.ratio)),
            opt(r.bernstein.map(|b| b.ratio)),
            opt(r.logprop.map(|l| l.ratio)),
            opt(r.logprop.map(|l| l.slack)),
        ]),
        None => cells.extend(std::iter::repeat_n(String::new(), SWEEP_COLUMNS.len() - 3)),
    }
    cells.join(",")
}

pub fn parse_sweep_values(axis: SweepAxis, text: &str) -> CliResult<Vec<f64>> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("bad sweep value {s:?}")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(CliError::Usage("empty sweep value list".into()));
    }
    for &v in &values {
        let ok = match axis {
            SweepAxis::N => v.fract() == 0.0 && v > 0.0,
            SweepAxis::LambdaRecord => v > 0.0 && v <= 1.0,
            _ => true,
        };
        if !ok {
            return Err(CliError::Usage(format!(
                "sweep value {v} is not valid for axis {}",
                axis.name()
            )));
        }
    }
    Ok(values)
}

fn variant(cfg: &RunConfig, axis: SweepAxis, value: f64) -> CliResult<RunConfig> {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Gamma => c.problem.gamma = value,
        SweepAxis::Alpha => {
            if c.problem.coupling != CouplingKind::Power {
                return Err(CliError::Config(
                    "an alpha sweep needs the power coupling".into(),
                ));
            }
            c.problem.alpha = Some(value);
        }
        SweepAxis::N => c.problem.n = value as usize,
        SweepAxis::LambdaRecord => {}
    }
    c.resolve(false)?;
    Ok(c)
}

fn run_parallel<T: Send>(count: usize, job: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(count)
        .max(1);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..count).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let result = job(i);
                *slots[i].lock().expect("sweep slot poisoned") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .expect("sweep slot poisoned")
                .expect("sweep job missing")
        })
        .collect()
}

/// Writes `sweep.csv` and returns 0 when every run succeeded, otherwise the
/// first failing status.
pub fn cmd_sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    values: &[f64],
    out: &Path,
    no_gates: bool,
) -> CliResult<i32> {
    if values.is_empty() {
        return Err(CliError::Usage("empty sweep value list".into()));
    }
    io::ensure_dir(out)?;
    let rows: Vec<(i32, String)> = if axis == SweepAxis::LambdaRecord {
        lambda_record_rows(cfg, values, out, no_gates)?
    } else {
        let configs = values
            .iter()
            .map(|&v| variant(cfg, axis, v))
            .collect::<CliResult<Vec<_>>>()?;
        run_parallel(configs.len(), |i| {
            let dir = out.join(format!("run_{i:03}"));
            match cmd_solve(&configs[i], &dir, no_gates) {
                Ok(o) => (0, sweep_row(axis, values[i], 0, Some(&o.report))),
                Err(e) => {
                    eprintln!("run {i} ({} = {}): {e}", axis.name(), values[i]);
                    (
                        e.exit_code(),
                        sweep_row(axis, values[i], e.exit_code(), None),
                    )
                }
            }
        })
    };
    let mut text = SWEEP_COLUMNS.join(",");
    text.push('\n');
    for (_, row) in &rows {
        text.push_str(row);
        text.push('\n');
    }
    io::write_text(&out.join("sweep.csv"), &text)?;
    Ok(rows.iter().map(|(s, _)| *s).find(|&s| s != 0).unwrap_or(0))
}

fn lambda_record_rows(
    cfg: &RunConfig,
    values: &[f64],
    out: &Path,
    no_gates: bool,
) -> CliResult<Vec<(i32, String)>> {
    let mut wanted = values.to_vec();
    wanted.sort_by(f64::total_cmp);
    wanted.dedup();
    let mut reports: Vec<Option<DiagnosticsReport>> = vec![None; wanted.len()];
    let mut failure: Option<CliError> = None;
    let result = solve_with(
        cfg,
        &out.join("run_000"),
        no_gates,
        &wanted,
        &mut |problem, rec, v| {
            let Some(slot) = wanted.iter().position(|&w| w == rec.lambda) else {
                return;
            };
            let report = problem
                .base
                .at(rec.lambda)
                .and_then(|fam| diagnose(&fam, &problem.coupling, v, &problem.diagnostics));
            match report {
                Ok(r) => reports[slot] = Some(r),
                Err(e) => {
                    failure.get_or_insert(e.into());
                }
            }
        },
    );
    let status = match (&result, &failure) {
        (Err(e), _) | (Ok(_), Some(e)) => {
            eprintln!("lambda-record sweep: {e}");
            e.exit_code()
        }
        _ => 0,
    };
    if let Err(e @ (CliError::Config(_) | CliError::Usage(_) | CliError::Io { .. })) = result {
        return Err(e);
    }
    Ok(wanted
        .iter()
        .zip(&reports)
        .map(|(&w, r)| match r {
            Some(r) => (0, sweep_row(SweepAxis::LambdaRecord, w, 0, Some(r))),
            None => {
                let s = if status == 0 { 3 } else { status };
                (s, sweep_row(SweepAxis::LambdaRecord, w, s, None))
            }
        })
        .collect())
}

/// Recomputes the residual and the full report for a stored solution.
pub fn cmd_diagnose(cfg: &RunConfig, solution: &Path, out: &Path) -> CliResult<DiagnosticsReport> {
    let file = io::read_solution(solution)?;
    let problem = cfg.resolve(true)?;
    let grid = problem.base.grid();
    if file.dim != grid.dim() || file.n != grid.n() {
        return Err(CliError::Config(format!(
            "solution grid (dim {}, n {}) does not match the configuration (dim {}, n {})",
            file.dim,
            file.n,
            grid.dim(),
            grid.n()
        )));
    }
    if file.gamma.to_bits() != problem.base.gamma().to_bits() || file.coupling != problem.coupling {
        return Err(CliError::Config(
            "solution gamma or coupling differs from the configuration".into(),
        ));
    }
    let v = file.to_solution()?;
    let fam = problem.base.at(v.lambda)?;
    let report = diagnose(&fam, &problem.coupling, &v, &problem.diagnostics)?;
    if report.residual_sup > RESIDUAL_WARNING {
        eprintln!(
            "warning: residual sup norm {:e} exceeds {RESIDUAL_WARNING:e}; input is not a converged solution",
            report.residual_sup
        );
    }
    io::ensure_dir(out)?;
    let target: PathBuf = out.join("diagnostics.json");
    if target.canonicalize().ok() == solution.canonicalize().ok() && target.exists() {
        return Err(CliError::Usage(
            "refusing to overwrite the input solution".into(),
        ));
    }
    io::write_json(
        &target,
        &DiagnosticsFile {
            schema_version: SCHEMA_VERSION,
            report: &report,
        },
    )?;
    Ok(report)
}
