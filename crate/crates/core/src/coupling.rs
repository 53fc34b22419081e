//! Local couplings `g(m) = m^α` and `g(m) = ln m`, with the exponent gates.

use serde::{Deserialize, Serialize};

use crate::error::{MfgError, Result};

/// Smallest density accepted by the logarithmic coupling.
pub const M_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Coupling {
    Power { alpha: f64 },
    Log,
}

impl Coupling {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(MfgError::InvalidParameter(format!(
                "power coupling needs alpha > 0, got {alpha}"
            )));
        }
        Ok(Coupling::Power { alpha })
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Coupling::Power { alpha } => Some(*alpha),
            Coupling::Log => None,
        }
    }

    fn check_domain(&self, m: f64) -> Result<()> {
        let floor = match self {
            Coupling::Power { .. } => 0.0,
            Coupling::Log => M_FLOOR,
        };
        if m.is_nan() || m < floor || (floor == 0.0 && m <= 0.0) {
            return Err(MfgError::Positivity { min_m: m, floor });
        }
        Ok(())
    }

    pub fn g(&self, m: f64) -> Result<f64> {
        self.check_domain(m)?;
        Ok(match self {
            Coupling::Power { alpha } => m.powf(*alpha),
            Coupling::Log => m.ln(),
        })
    }

    pub fn g_prime(&self, m: f64) -> Result<f64> {
        self.check_domain(m)?;
        Ok(match self {
            Coupling::Power { alpha } => alpha * m.powf(alpha - 1.0),
            Coupling::Log => 1.0 / m,
        })
    }

    /// Validates a whole density field against the coupling's domain.
    pub fn check_density(&self, m: &[f64]) -> Result<()> {
        let min = m.iter().copied().fold(f64::INFINITY, f64::min);
        self.check_domain(min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateResult {
    pub id: String,
    pub pass: bool,
    /// Upper bound on α (A7) or on γ (A8); `None` when unbounded.
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// A7 for power couplings (`α <= γ / (d(γ-1))`), A8 for the logarithmic one
/// (`γ < 2 + 1/(d-1)`).
pub fn check_coupling_gate(c: &Coupling, gamma: f64, dim: usize) -> Result<GateResult> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(MfgError::InvalidParameter(format!(
            "gamma must be > 1, got {gamma}"
        )));
    }
    if !(1..=3).contains(&dim) {
        return Err(MfgError::InvalidParameter(format!(
            "dimension {dim} not in 1..=3"
        )));
    }
    let d = dim as f64;
    Ok(match c {
        Coupling::Power { alpha } => {
            let bound = gamma / (d * (gamma - 1.0));
            let mut notes = Vec::new();
            if *alpha < 1.0 {
                notes.push(format!(
                    "m^{alpha} is not bounded by C m near m = 0; the small-density branch of A6.a is not met"
                ));
            }
            GateResult {
                id: "A7".into(),
                pass: *alpha <= bound,
                bound: Some(bound),
                notes,
            }
        }
        Coupling::Log => {
            let bound = if dim == 1 {
                None
            } else {
                Some(2.0 + 1.0 / (d - 1.0))
            };
            GateResult {
                id: "A8".into(),
                pass: bound.is_none_or(|b| gamma < b),
                bound,
                notes: Vec::new(),
            }
        }
    })
}
