//! Named coefficient fields: `const:c`, `sin:k:A`, `cos2d:k:A`, joined by `+`.

use std::f64::consts::PI;
use std::fmt;

use mfg_core::{ScalarField, TorusGrid};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `c`.
    Const(f64),
    /// `A sin(2πk x₁)`.
    Sin { k: i64, amplitude: f64 },
    /// `A cos(2πk x₁) cos(2πk x₂)`.
    Cos2d { k: i64, amplitude: f64 },
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Const(c) => write!(f, "const:{c}"),
            Preset::Sin { k, amplitude } => write!(f, "sin:{k}:{amplitude}"),
            Preset::Cos2d { k, amplitude } => write!(f, "cos2d:{k}:{amplitude}"),
        }
    }
}

fn number(text: &str, term: &str) -> CliResult<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad number {text:?} in preset {term:?}")))?;
    if !v.is_finite() {
        return Err(CliError::Config(format!(
            "non-finite number in preset {term:?}"
        )));
    }
    Ok(v)
}

fn frequency(text: &str, term: &str) -> CliResult<i64> {
    text.trim().parse().map_err(|_| {
        CliError::Config(format!(
            "frequency {text:?} in preset {term:?} must be an integer"
        ))
    })
}

impl Preset {
    pub fn parse_sum(text: &str) -> CliResult<Vec<Preset>> {
        if text.trim().is_empty() {
            return Err(CliError::Config("empty preset".into()));
        }
        text.split('+').map(Preset::parse_term).collect()
    }

    fn parse_term(term: &str) -> CliResult<Preset> {
        let parts: Vec<&str> = term.trim().split(':').collect();
        match parts.as_slice() {
            ["const", c] => Ok(Preset::Const(number(c, term)?)),
            ["sin", k, a] => Ok(Preset::Sin {
                k: frequency(k, term)?,
                amplitude: number(a, term)?,
            }),
            ["cos2d", k, a] => Ok(Preset::Cos2d {
                k: frequency(k, term)?,
                amplitude: number(a, term)?,
            }),
            _ => Err(CliError::Config(format!(
                "unknown preset {term:?}; expected const:c, sin:k:A or cos2d:k:A"
            ))),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Preset::Const(c) => c,
            Preset::Sin { k, amplitude } => amplitude * (2.0 * PI * k as f64 * x[0]).sin(),
            Preset::Cos2d { k, amplitude } => {
                let w = 2.0 * PI * k as f64;
                amplitude * (w * x[0]).cos() * (w * x[1]).cos()
            }
        }
    }
}

/// Samples the sum of the terms in `text` on `grid`.
pub fn evaluate(text: &str, grid: &TorusGrid) -> CliResult<ScalarField> {
    let terms = Preset::parse_sum(text)?;
    if grid.dim() < 2 && terms.iter().any(|t| matches!(t, Preset::Cos2d { .. })) {
        return Err(CliError::Config(format!("preset {text:?} needs dim >= 2")));
    }
    Ok(grid.sample(|x| terms.iter().map(|t| t.value(x)).sum()))
}
