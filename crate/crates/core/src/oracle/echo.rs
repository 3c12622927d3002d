use num_complex::Complex64;

use super::eigen::{ParitySpectrum, DENSE_LIMIT};
use super::ground::{ground_state, GroundStateOptions, GroundStateResult, PhotonStatistics};
use super::hamiltonian::{build_hamiltonian, SparseHamiltonian};
use super::propagate::{inner, norm, KrylovOptions, KrylovPropagator, Propagator, SpectralPropagator};
use crate::echo::{clamp_echo, validate_times, EchoCurve, EchoMethod};
use crate::error::Result;
use crate::model::{shifted_params, Branch, DickeParams, ProbeAtom};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMethod {
    /// Spectral up to the dense limit, Krylov above it.
    Auto,
    Spectral,
    Krylov,
}

#[derive(Debug, Clone, Copy)]
pub struct EchoOptions {
    pub method: PropagationMethod,
    /// c-number energy added to `H_e` and subtracted from `H_g`.
    pub constant_offset: f64,
    pub ground: GroundStateOptions,
    pub krylov: KrylovOptions,
}

impl Default for EchoOptions {
    fn default() -> Self {
        EchoOptions {
            method: PropagationMethod::Auto,
            constant_offset: 0.0,
            ground: GroundStateOptions::default(),
            krylov: KrylovOptions::default(),
        }
    }
}

impl EchoOptions {
    /// Keeps the probe's `(omega_s + delta_tilde) / 2` term that is normally dropped.
    pub fn with_probe_offset(self, probe: &ProbeAtom, delta_tilde: f64) -> Self {
        EchoOptions {
            constant_offset: probe.constant_offset(delta_tilde),
            ..self
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactEcho {
    pub curve: EchoCurve,
    pub decoherence: Vec<Complex64>,
    /// Largest `| ||psi(t)|| - 1 |` over both branches and all times.
    pub max_norm_error: f64,
    pub max_step_error: f64,
    /// Samples whose `|D|^2` left `[0, 1]` by more than the clamp slack.
    pub clamp_violations: usize,
}

/// `H_g` and `H_e` on the ground state's basis.
pub fn conditional_hamiltonians(
    p: &DickeParams,
    gs: &GroundStateResult,
    constant_offset: f64,
) -> Result<(SparseHamiltonian, SparseHamiltonian)> {
    let h_g = build_hamiltonian(&shifted_params(p, Branch::Ground)?, &gs.basis)?;
    let h_e = build_hamiltonian(&shifted_params(p, Branch::Excited)?, &gs.basis)?;
    if constant_offset == 0.0 {
        Ok((h_g, h_e))
    } else {
        Ok((h_g.shifted(-constant_offset), h_e.shifted(constant_offset)))
    }
}

/// Ground state of `p` followed by [`echo_exact_from_ground`].
pub fn echo_exact(p: &DickeParams, times: &[f64], opts: &EchoOptions) -> Result<(ExactEcho, GroundStateResult)> {
    validate_times(times)?;
    let gs = ground_state(p, &opts.ground)?;
    let echo = echo_exact_from_ground(p, &gs, times, opts)?;
    Ok((echo, gs))
}

/// `D(t) = <G| exp(i H_g t) exp(-i H_e t) |G>` and `L(t) = |D(t)|^2`.
pub fn echo_exact_from_ground(
    p: &DickeParams,
    gs: &GroundStateResult,
    times: &[f64],
    opts: &EchoOptions,
) -> Result<ExactEcho> {
    validate_times(times)?;
    let (h_g, h_e) = conditional_hamiltonians(p, gs, opts.constant_offset)?;
    let spectral = match opts.method {
        PropagationMethod::Auto => h_g.dim() <= DENSE_LIMIT,
        PropagationMethod::Spectral => true,
        PropagationMethod::Krylov => false,
    };
    if spectral {
        let (s_g, s_e) = (ParitySpectrum::new(&h_g), ParitySpectrum::new(&h_e));
        let mut ground = SpectralPropagator::new(&s_g, &gs.vector);
        let mut excited = SpectralPropagator::new(&s_e, &gs.vector);
        sample(p, times, &mut ground, &mut excited)
    } else {
        let mut ground = KrylovPropagator::new(&h_g, &gs.vector, opts.krylov);
        let mut excited = KrylovPropagator::new(&h_e, &gs.vector, opts.krylov);
        sample(p, times, &mut ground, &mut excited)
    }
}

fn sample(
    p: &DickeParams,
    times: &[f64],
    ground: &mut dyn Propagator,
    excited: &mut dyn Propagator,
) -> Result<ExactEcho> {
    let mut decoherence = Vec::with_capacity(times.len());
    let mut values = Vec::with_capacity(times.len());
    let mut max_norm_error = 0.0f64;
    let mut clamp_violations = 0;
    for &t in times {
        let psi_g = ground.state_at(t)?;
        let psi_e = excited.state_at(t)?;
        max_norm_error = max_norm_error
            .max((norm(&psi_g) - 1.0).abs())
            .max((norm(&psi_e) - 1.0).abs());
        let d = inner(&psi_g, &psi_e);
        let (l, violated) = clamp_echo(d.norm_sqr());
        clamp_violations += usize::from(violated);
        decoherence.push(d);
        values.push(l);
    }
    Ok(ExactEcho {
        curve: EchoCurve {
            times: times.to_vec(),
            values,
            method: EchoMethod::Exact,
            params_snapshot: *p,
        },
        decoherence,
        max_norm_error,
        max_step_error: ground.max_step_error().max(excited.max_step_error()),
        clamp_violations,
    })
}

/// `|sum_n p(n) exp(-2 i delta t n)|^2`: the echo with only the `a^dag a`
/// difference between `H_g` and `H_e` retained.
pub fn echo_characteristic(stats: &PhotonStatistics, p: &DickeParams, times: &[f64]) -> Result<EchoCurve> {
    validate_times(times)?;
    let values = times
        .iter()
        .map(|&t| {
            let phase = -2.0 * p.delta_tilde() * t;
            let z: Complex64 = stats
                .distribution
                .iter()
                .enumerate()
                .map(|(n, &prob)| Complex64::from_polar(prob, phase * n as f64))
                .sum();
            clamp_echo(z.norm_sqr()).0
        })
        .collect();
    Ok(EchoCurve {
        times: times.to_vec(),
        values,
        method: EchoMethod::AnalyticCharacteristic,
        params_snapshot: *p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ground::photon_statistics;

    fn params(g: f64, n: u32, delta: f64) -> DickeParams {
        DickeParams::new(1.0, 1.44, g, n, delta).unwrap()
    }

    #[test]
    fn no_shift_means_no_decoherence() {
        let (echo, _) = echo_exact(&params(0.4, 6, 0.0), &[0.0, 1.0, 10.0], &EchoOptions::default()).unwrap();
        for d in &echo.decoherence {
            assert!((d - Complex64::new(1.0, 0.0)).norm() < 1e-10, "{d}");
        }
    }

    #[test]
    fn starts_at_one() {
        let (echo, _) = echo_exact(&params(0.4, 6, 0.01), &[0.0, 1.0], &EchoOptions::default()).unwrap();
        assert!((echo.decoherence[0] - 1.0).norm() < 1e-12);
        assert!(echo.max_norm_error < 1e-8);
        assert_eq!(echo.clamp_violations, 0);
    }

    #[test]
    fn krylov_and_spectral_agree() {
        let p = params(0.7, 6, 0.01);
        let times = [0.0, 2.0, 5.0, 20.0];
        let spectral = EchoOptions {
            method: PropagationMethod::Spectral,
            ..EchoOptions::default()
        };
        let krylov = EchoOptions {
            method: PropagationMethod::Krylov,
            ..EchoOptions::default()
        };
        let (a, gs) = echo_exact(&p, &times, &spectral).unwrap();
        let b = echo_exact_from_ground(&p, &gs, &times, &krylov).unwrap();
        for (x, y) in a.decoherence.iter().zip(&b.decoherence) {
            assert!((x - y).norm() < 1e-8);
        }
        assert!(b.max_norm_error < 1e-8);
    }

    #[test]
    fn characteristic_examples() {
        let p = params(0.3, 4, 0.001);
        let point = PhotonStatistics {
            mean: 3.0,
            variance: 0.0,
            distribution: vec![0.0, 0.0, 0.0, 1.0],
        };
        let curve = echo_characteristic(&point, &p, &[0.0, 10.0, 1000.0]).unwrap();
        assert!(curve.values.iter().all(|l| (l - 1.0).abs() < 1e-14));

        let gs = ground_state(&params(0.3, 10, 0.001), &GroundStateOptions::default()).unwrap();
        let stats = photon_statistics(&gs);
        let curve = echo_characteristic(&stats, &p, &[0.0]).unwrap();
        assert!((curve.values[0] - 1.0).abs() < 1e-12);

        // Second cumulant: -ln L / t^2 -> 4 gamma delta^2 as t -> 0.
        let target = 4.0 * stats.variance * 1e-6;
        let t = 0.5;
        let curve = echo_characteristic(&stats, &p, &[t]).unwrap();
        let rate = -curve.values[0].ln() / (t * t);
        assert!((rate / target - 1.0).abs() < 1e-4, "{rate} vs {target}");
    }

    #[test]
    fn constant_offset_only_changes_the_phase() {
        let p = params(0.3, 8, 0.001);
        let probe = ProbeAtom::balanced(1.0, 0.02, 0.4).unwrap();
        let times = [7.0, 40.0, 100.0];
        let (plain, gs) = echo_exact(&p, &times, &EchoOptions::default()).unwrap();
        let opts = EchoOptions::default().with_probe_offset(&probe, p.delta_tilde());
        let shifted = echo_exact_from_ground(&p, &gs, &times, &opts).unwrap();
        for (i, t) in times.iter().enumerate() {
            assert!((plain.curve.values[i] - shifted.curve.values[i]).abs() < 1e-12);
            let phase = (shifted.decoherence[i] / plain.decoherence[i]).arg();
            let expected = -2.0 * opts.constant_offset * t;
            let wrapped = (phase - expected).rem_euclid(std::f64::consts::TAU);
            assert!(wrapped.min(std::f64::consts::TAU - wrapped) < 1e-8);
        }
    }

    #[test]
    fn short_time_gaussian_law() {
        let p = params(0.3, 8, 0.001);
        let times = [0.125, 0.25, 0.5, 1.0];
        let (echo, gs) = echo_exact(&p, &times, &EchoOptions::default()).unwrap();
        let target = 4.0 * photon_statistics(&gs).variance * 1e-6;
        let residuals: Vec<f64> = times
            .iter()
            .zip(&echo.curve.values)
            .map(|(t, l)| (-l.ln() / (t * t) - target).abs())
            .collect();
        assert!(residuals.windows(2).all(|w| w[0] < w[1]), "{residuals:?}");
    }
}
