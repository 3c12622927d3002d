//! Physical parameters of the driven Dicke ensemble and the probe atom.
//!
//! All frequencies are expressed in units of the cavity frequency scale the
//! caller chooses (conventionally `omega = 1`), and times are dimensionless
//! `omega * t`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative half-width of the band around `g_c` that is classified as critical.
pub const CRITICAL_TOLERANCE: f64 = 1e-9;

/// Minimum `|delta_s| / g_s` for the dispersive elimination of the probe.
pub const DISPERSIVE_RATIO: f64 = 10.0;

/// Ensemble configuration: cavity `omega`, atomic splitting `omega0`,
/// collective coupling `g = g0 * sqrt(N)`, atom number and the probe-induced
/// cavity shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct DickeParams {
    omega: f64,
    omega0: f64,
    g: f64,
    n_atoms: u32,
    delta_tilde: f64,
}

#[derive(Deserialize)]
struct RawParams {
    omega: f64,
    omega0: f64,
    g: f64,
    n_atoms: u32,
    delta_tilde: f64,
}

impl TryFrom<RawParams> for DickeParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        DickeParams::new(raw.omega, raw.omega0, raw.g, raw.n_atoms, raw.delta_tilde)
    }
}

impl DickeParams {
    pub fn new(omega: f64, omega0: f64, g: f64, n_atoms: u32, delta_tilde: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(omega.is_finite() && omega > 0.0) {
            return bad(format!("omega must be positive and finite, got {omega}"));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return bad(format!("omega0 must be positive and finite, got {omega0}"));
        }
        if !(g.is_finite() && g >= 0.0) {
            return bad(format!("g must be non-negative and finite, got {g}"));
        }
        if n_atoms == 0 {
            return bad("n_atoms must be at least 1".into());
        }
        if !(delta_tilde.is_finite() && delta_tilde >= 0.0) {
            return bad(format!("delta_tilde must be non-negative, got {delta_tilde}"));
        }
        if delta_tilde >= omega {
            return bad(format!("delta_tilde = {delta_tilde} must stay below omega = {omega}"));
        }
        Ok(DickeParams {
            omega,
            omega0,
            g,
            n_atoms,
            delta_tilde,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn delta_tilde(&self) -> f64 {
        self.delta_tilde
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::new(self.omega, self.omega0, g, self.n_atoms, self.delta_tilde)
    }

    pub fn with_n_atoms(&self, n_atoms: u32) -> Result<Self> {
        Self::new(self.omega, self.omega0, self.g, n_atoms, self.delta_tilde)
    }

    pub fn with_delta_tilde(&self, delta_tilde: f64) -> Result<Self> {
        Self::new(self.omega, self.omega0, self.g, self.n_atoms, delta_tilde)
    }

    pub fn critical_coupling(&self) -> f64 {
        critical_coupling(self)
    }

    pub fn phase(&self) -> PhaseLabel {
        classify_phase(self)
    }
}

/// `sqrt(omega * omega0) / 2`.
pub fn critical_coupling(p: &DickeParams) -> f64 {
    (p.omega * p.omega0).sqrt() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    Normal,
    SuperRadiant,
    Critical,
}

impl PhaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhaseLabel::Normal => "normal",
            PhaseLabel::SuperRadiant => "super_radiant",
            PhaseLabel::Critical => "critical",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PhaseLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(PhaseLabel::Normal),
            "super_radiant" => Ok(PhaseLabel::SuperRadiant),
            "critical" => Ok(PhaseLabel::Critical),
            other => Err(Error::InvalidParams(format!("unknown phase label {other:?}"))),
        }
    }
}

pub fn classify_phase(p: &DickeParams) -> PhaseLabel {
    let g_c = critical_coupling(p);
    if p.g < g_c * (1.0 - CRITICAL_TOLERANCE) {
        PhaseLabel::Normal
    } else if p.g > g_c * (1.0 + CRITICAL_TOLERANCE) {
        PhaseLabel::SuperRadiant
    } else {
        PhaseLabel::Critical
    }
}

/// State of the probe atom that selects the conditional Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Ground,
    Excited,
}

/// Conditional parameters: the cavity frequency becomes `omega - delta_tilde`
/// for a ground-state probe and `omega + delta_tilde` for an excited one.
pub fn shifted_params(p: &DickeParams, branch: Branch) -> Result<DickeParams> {
    let omega = match branch {
        Branch::Ground => p.omega - p.delta_tilde,
        Branch::Excited => p.omega + p.delta_tilde,
    };
    if omega <= 0.0 {
        return Err(Error::InvalidShift { omega });
    }
    Ok(DickeParams {
        omega,
        delta_tilde: 0.0,
        ..*p
    })
}

/// A far-detuned two-level atom crossing the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeAtom {
    pub omega_s: f64,
    pub g_s: f64,
    pub delta_s: f64,
    pub alpha_amp: Complex64,
    pub beta_amp: Complex64,
}

impl ProbeAtom {
    pub fn new(omega_s: f64, g_s: f64, delta_s: f64, alpha_amp: Complex64, beta_amp: Complex64) -> Result<Self> {
        let norm = alpha_amp.norm_sqr() + beta_amp.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "probe amplitudes must be normalised, |alpha|^2 + |beta|^2 = {norm}"
            )));
        }
        if !(g_s.is_finite() && g_s >= 0.0 && delta_s.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "probe coupling g_s = {g_s} and detuning delta_s = {delta_s} must be finite, g_s >= 0"
            )));
        }
        if delta_s.abs() < DISPERSIVE_RATIO * g_s {
            return Err(Error::RegimeViolation { g_s, delta_s });
        }
        Ok(ProbeAtom {
            omega_s,
            g_s,
            delta_s,
            alpha_amp,
            beta_amp,
        })
    }

    /// Equal superposition `(|g> + |e>) / sqrt(2)` with the detuning measured
    /// from the cavity frequency `omega`.
    pub fn balanced(omega: f64, g_s: f64, delta_s: f64) -> Result<Self> {
        let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(omega + delta_s, g_s, delta_s, amp, amp)
    }

    /// c-number energy `(omega_s + delta_tilde) / 2` carried by the probe's
    /// `sigma_z`; enters `H_e` with `+` and `H_g` with `-`.
    pub fn constant_offset(&self, delta_tilde: f64) -> f64 {
        0.5 * (self.omega_s + delta_tilde)
    }
}

/// Stark shift `g_s^2 / delta_s`; the sign follows the detuning.
pub fn dispersive_shift(probe: &ProbeAtom) -> Result<f64> {
    if probe.delta_s == 0.0 || probe.delta_s.abs() < DISPERSIVE_RATIO * probe.g_s {
        return Err(Error::RegimeViolation {
            g_s: probe.g_s,
            delta_s: probe.delta_s,
        });
    }
    Ok(probe.g_s * probe.g_s / probe.delta_s)
}
