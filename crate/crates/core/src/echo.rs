//! Sampled Loschmidt echo curves shared by the analytic and exact engines.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DickeParams, ProbeAtom};

/// Largest excursion outside `[0, 1]` that is absorbed by clamping.
pub const CLAMP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EchoMethod {
    AnalyticGaussian,
    AnalyticCharacteristic,
    Exact,
}

impl fmt::Display for EchoMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EchoMethod::AnalyticGaussian => "analytic-gaussian",
            EchoMethod::AnalyticCharacteristic => "analytic-characteristic",
            EchoMethod::Exact => "exact",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub method: EchoMethod,
    pub params_snapshot: DickeParams,
}

impl EchoCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }
}

/// Rejects empty, non-finite, negative or non-increasing time grids.
pub fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("time grid is empty".into()));
    }
    if let Some(t) = times.iter().find(|t| !t.is_finite() || **t < 0.0) {
        return Err(Error::InvalidGrid(format!(
            "times must be finite and non-negative, got {t}"
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// `count` evenly spaced times on `[start, stop]`.
pub fn linear_times(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidGrid(format!("time count must be >= 2, got {count}")));
    }
    let span = stop - start;
    let last = (count - 1) as f64;
    let times: Vec<f64> = (0..count).map(|i| start + span * (i as f64 / last)).collect();
    validate_times(&times)?;
    Ok(times)
}

/// Clamps an echo value into `[0, 1]`. The flag is set when the excursion
/// exceeded [`CLAMP_SLACK`], which indicates an upstream bug.
pub fn clamp_echo(value: f64) -> (f64, bool) {
    let excessive = !(-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&value);
    (value.clamp(0.0, 1.0), excessive)
}

/// Off-diagonal element `D * conj(alpha) * beta` of the probe's reduced
/// density matrix. Populations `|alpha|^2`, `|beta|^2` do not evolve.
pub fn reduced_coherence(probe: &ProbeAtom, decoherence: Complex64) -> Complex64 {
    decoherence * probe.alpha_amp.conj() * probe.beta_amp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_grids() {
        assert!(validate_times(&[0.0, 1.0, 2.0]).is_ok());
        assert!(validate_times(&[]).is_err());
        assert!(validate_times(&[0.0, 0.0]).is_err());
        assert!(validate_times(&[1.0, 0.5]).is_err());
        assert!(validate_times(&[-1.0, 0.5]).is_err());
        assert!(validate_times(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn linear_grid_hits_endpoints() {
        let t = linear_times(0.0, 100.0, 101).unwrap();
        assert_eq!(t.len(), 101);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[100], 100.0);
        assert_eq!(t[37], 37.0);
        assert!(linear_times(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn clamp_flags_large_excursions() {
        assert_eq!(clamp_echo(0.5), (0.5, false));
        assert_eq!(clamp_echo(1.0 + 1e-15), (1.0, false));
        assert_eq!(clamp_echo(-1e-16), (0.0, false));
        assert_eq!(clamp_echo(1.0 + 1e-9), (1.0, true));
    }

    #[test]
    fn coherence_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let probe = ProbeAtom::new(1.1, 0.01, 0.1, one, zero).unwrap();
        assert_eq!(reduced_coherence(&probe, Complex64::new(0.3, 0.4)), zero);

        let probe = ProbeAtom::balanced(1.0, 0.01, 0.1).unwrap();
        let c = reduced_coherence(&probe, one);
        assert!((c - Complex64::new(0.5, 0.0)).norm() < 1e-15);

        let c = reduced_coherence(&probe, Complex64::new(1e-9, -1e-9));
        assert!(c.norm() < 1e-9);
        assert!((probe.alpha_amp.norm_sqr() - 0.5).abs() < 1e-15);
        assert!((probe.beta_amp.norm_sqr() - 0.5).abs() < 1e-15);
    }
}
