//! Thermodynamic-limit polariton theory of the ensemble Hamiltonian.
//!
//! Below `g_c` the Holstein-Primakoff boson and the cavity form two coupled
//! oscillators; above `g_c` the same holds for the fluctuations around the
//! macroscopically displaced mean fields. In both phases the photon operator
//! expands as `a^dag = f1 A^dag + f2 A + f3 B^dag + f4 B`, and the ground
//! state is the polariton vacuum.

use serde::{Deserialize, Serialize};

use crate::echo::{clamp_echo, validate_times, EchoCurve, EchoMethod};
use crate::error::{Error, Result};
use crate::model::{classify_phase, critical_coupling, DickeParams, PhaseLabel};

/// Relative distance from `g_c` inside which frames are flagged near-critical.
pub const NEAR_CRITICAL_BAND: f64 = 1e-2;

/// Lower polariton frequency (relative to `omega`) below which frames are
/// flagged near-critical regardless of the band.
pub const SOFT_MODE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolaritonFrame {
    pub phase: PhaseLabel,
    pub omega_minus: f64,
    pub omega_plus: f64,
    /// Mixing angle in `[0, pi/2]`.
    pub theta: f64,
    /// Photon-sector Bogoliubov coefficients `f1..f4`.
    pub f: [f64; 4],
    /// `omega * omega0 / (4 g^2)`; super-radiant frames only.
    pub mu: Option<f64>,
    pub alpha_disp: f64,
    pub beta_disp: f64,
    pub near_critical: bool,
    /// `omega / omega_minus`, the amplification of rounding in `f` and `gamma`.
    pub condition: f64,
}

impl PolaritonFrame {
    /// `f1^2 - f2^2 + f3^2 - f4^2 - 1`, zero for a canonical transformation.
    pub fn symplectic_residual(&self) -> f64 {
        let [f1, f2, f3, f4] = self.f;
        (f1 * f1 - f2 * f2) + (f3 * f3 - f4 * f4) - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub gamma: f64,
    pub phase: PhaseLabel,
    /// Displacement contribution `alpha [(f1+f2)^2 + (f3+f4)^2]`.
    pub n_term: f64,
    /// Vacuum-fluctuation contribution `2 f1^2 f2^2 + 2 f3^2 f4^2 + (f1 f4 + f2 f3)^2`.
    pub fluctuation_term: f64,
    pub near_critical: bool,
    pub condition: f64,
}

fn near_critical(p: &DickeParams, omega_minus: f64) -> bool {
    let g_c = critical_coupling(p);
    (p.g() / g_c - 1.0).abs() < NEAR_CRITICAL_BAND || omega_minus < SOFT_MODE_FLOOR * p.omega()
}

/// `[f1, f2, f3, f4]` for a photon mode of frequency `omega` mixed into
/// polaritons `omega_minus`, `omega_plus` at angle `theta`.
fn photon_coefficients(omega: f64, omega_minus: f64, omega_plus: f64, theta: f64) -> [f64; 4] {
    let (sin, cos) = theta.sin_cos();
    let lower = 0.5 * cos / (omega * omega_minus).sqrt();
    let upper = 0.5 * sin / (omega * omega_plus).sqrt();
    [
        lower * (omega + omega_minus),
        lower * (omega - omega_minus),
        upper * (omega + omega_plus),
        upper * (omega - omega_plus),
    ]
}

/// Squared eigenfrequencies of a 2x2 oscillator problem with diagonal entries
/// `a`, `b` and determinant `det`. The lower root is taken from the product so
/// that it keeps full relative precision as it approaches zero.
fn squared_frequencies(a: f64, b: f64, det: f64) -> (f64, f64) {
    let upper = 0.5 * (a + b) + 0.5 * ((a - b) * (a - b) + 4.0 * (a * b - det)).sqrt();
    (det / upper, upper)
}

/// Half of a two-argument arctangent of a non-negative numerator, in `[0, pi/2]`.
fn mixing_angle(numerator: f64, denominator: f64) -> f64 {
    0.5 * numerator.atan2(denominator)
}

/// Lower/upper squared frequencies in the super-radiant phase for a given `mu`.
pub(crate) fn super_radiant_squared_frequencies(omega: f64, omega0: f64, mu: f64) -> (f64, f64) {
    let atomic = omega0 * omega0 / (mu * mu);
    let det = omega * omega * omega0 * omega0 * (1.0 - mu * mu) / (mu * mu);
    squared_frequencies(omega * omega, atomic, det)
}

fn require_phase(p: &DickeParams, expected: PhaseLabel) -> Result<()> {
    match classify_phase(p) {
        PhaseLabel::Critical => Err(Error::CriticalPoint {
            g: p.g(),
            g_c: critical_coupling(p),
        }),
        actual if actual != expected => Err(Error::WrongPhase { expected, actual }),
        _ => Ok(()),
    }
}

pub fn normal_frame(p: &DickeParams) -> Result<PolaritonFrame> {
    require_phase(p, PhaseLabel::Normal)?;
    let (omega, omega0, g) = (p.omega(), p.omega0(), p.g());
    let det = omega * omega0 * (omega * omega0 - 4.0 * g * g);
    let (minus_sq, plus_sq) = squared_frequencies(omega * omega, omega0 * omega0, det);
    let (omega_minus, omega_plus) = (minus_sq.sqrt(), plus_sq.sqrt());
    let theta = mixing_angle(4.0 * g * (omega * omega0).sqrt(), omega0 * omega0 - omega * omega);
    Ok(PolaritonFrame {
        phase: PhaseLabel::Normal,
        omega_minus,
        omega_plus,
        theta,
        f: photon_coefficients(omega, omega_minus, omega_plus, theta),
        mu: None,
        alpha_disp: 0.0,
        beta_disp: 0.0,
        near_critical: near_critical(p, omega_minus),
        condition: omega / omega_minus,
    })
}

pub fn super_radiant_frame(p: &DickeParams) -> Result<PolaritonFrame> {
    require_phase(p, PhaseLabel::SuperRadiant)?;
    let (omega, omega0, g) = (p.omega(), p.omega0(), p.g());
    let n = f64::from(p.n_atoms());
    let mu = omega * omega0 / (4.0 * g * g);
    let (minus_sq, plus_sq) = super_radiant_squared_frequencies(omega, omega0, mu);
    let (omega_minus, omega_plus) = (minus_sq.sqrt(), plus_sq.sqrt());
    let theta = mixing_angle(
        2.0 * omega * omega0 * mu * mu,
        omega0 * omega0 - mu * mu * omega * omega,
    );
    Ok(PolaritonFrame {
        phase: PhaseLabel::SuperRadiant,
        omega_minus,
        omega_plus,
        theta,
        f: photon_coefficients(omega, omega_minus, omega_plus, theta),
        mu: Some(mu),
        alpha_disp: g * g * n * (1.0 - mu * mu) / (omega * omega),
        beta_disp: 0.5 * n * (1.0 - mu),
        near_critical: near_critical(p, omega_minus),
        condition: omega / omega_minus,
    })
}

/// Frame for whichever phase `p` is in; errors at the critical point.
pub fn frame(p: &DickeParams) -> Result<PolaritonFrame> {
    match classify_phase(p) {
        PhaseLabel::Normal => normal_frame(p),
        PhaseLabel::SuperRadiant => super_radiant_frame(p),
        PhaseLabel::Critical => Err(Error::CriticalPoint {
            g: p.g(),
            g_c: critical_coupling(p),
        }),
    }
}

/// Ground-state photon-number variance in the polariton vacuum.
pub fn photon_variance(frame: &PolaritonFrame) -> VarianceReport {
    let [f1, f2, f3, f4] = frame.f;
    let cross = f1 * f4 + f2 * f3;
    let fluctuation_term = 2.0 * f1 * f1 * f2 * f2 + 2.0 * f3 * f3 * f4 * f4 + cross * cross;
    let n_term = match frame.phase {
        PhaseLabel::SuperRadiant => frame.alpha_disp * ((f1 + f2) * (f1 + f2) + (f3 + f4) * (f3 + f4)),
        _ => 0.0,
    };
    VarianceReport {
        gamma: n_term + fluctuation_term,
        phase: frame.phase,
        n_term,
        fluctuation_term,
        near_critical: frame.near_critical,
        condition: frame.condition,
    }
}

pub fn analytic_variance(p: &DickeParams) -> Result<VarianceReport> {
    frame(p).map(|f| photon_variance(&f))
}

/// Short-time echo `exp(-4 gamma delta^2 t^2)` on the given grid.
pub fn loschmidt_echo_gaussian(p: &DickeParams, gamma: f64, times: &[f64]) -> Result<EchoCurve> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "photon variance must be finite and non-negative, got {gamma}"
        )));
    }
    validate_times(times)?;
    let rate = 4.0 * gamma * p.delta_tilde() * p.delta_tilde();
    let values = times.iter().map(|t| clamp_echo((-rate * t * t).exp()).0).collect();
    Ok(EchoCurve {
        times: times.to_vec(),
        values,
        method: EchoMethod::AnalyticGaussian,
        params_snapshot: *p,
    })
}

/// `(N, gamma)` for each atom number at fixed couplings, super-radiant only.
pub fn decay_scaling(p: &DickeParams, n_list: &[u32]) -> Result<Vec<(u32, f64)>> {
    require_phase(p, PhaseLabel::SuperRadiant)?;
    n_list
        .iter()
        .map(|&n| {
            let q = p.with_n_atoms(n)?;
            Ok((n, photon_variance(&super_radiant_frame(&q)?).gamma))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn fig2(g: f64) -> DickeParams {
        DickeParams::new(1.0, 1.44, g, 100, 0.001).unwrap()
    }

    #[test]
    fn decoupled_limit() {
        let fr = normal_frame(&fig2(0.0)).unwrap();
        assert_eq!(fr.theta, 0.0);
        assert_relative_eq!(fr.omega_minus, 1.0, epsilon = 1e-15);
        assert_relative_eq!(fr.omega_plus, 1.44, epsilon = 1e-15);
        assert_eq!(fr.f[0], 1.0);
        assert_eq!(fr.f[1], 0.0);
        assert_eq!(fr.f[2], 0.0);
        assert_eq!(fr.f[3], 0.0);
        assert_eq!(photon_variance(&fr).gamma, 0.0);
    }

    #[test]
    fn decoupled_with_inverted_ordering_keeps_photon_in_upper_branch() {
        let p = DickeParams::new(1.0, 0.5, 0.0, 10, 0.0).unwrap();
        let fr = normal_frame(&p).unwrap();
        assert_relative_eq!(fr.theta, std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(fr.omega_plus, 1.0);
        assert_relative_eq!(fr.f[2], 1.0, epsilon = 1e-15);
        assert!(fr.f[0].abs() < 1e-15 && fr.f[3].abs() < 1e-15);
        assert!(photon_variance(&fr).gamma < 1e-30);
    }

    #[test]
    fn resonant_angle_is_quarter_pi() {
        for g in [1e-6, 0.1, 0.3, 0.49] {
            let p = DickeParams::new(1.0, 1.0, g, 10, 0.0).unwrap();
            assert_relative_eq!(normal_frame(&p).unwrap().theta, FRAC_PI_4, epsilon = 1e-15);
        }
    }

    // Frozen from numpy: eigvalsh([[1, 0.72], [0.72, 2.0736]]) -> (0.63871635, 2.43488365),
    // then the closed-form coefficients at theta = atan2(1.44, 1.0736) / 2.
    #[test]
    fn normal_frame_reference_point() {
        let fr = normal_frame(&fig2(0.3)).unwrap();
        assert_relative_eq!(fr.omega_minus, 0.799_197_316_896_577, epsilon = 1e-12);
        assert_relative_eq!(fr.omega_plus, 1.560_411_371_614_97, epsilon = 1e-12);
        assert_relative_eq!(fr.theta, 0.465_072_867_923_328_2, epsilon = 1e-12);
        let expected = [
            0.899_407_989_938_539,
            0.100_380_061_646_511,
            0.459_632_742_973_556,
            -0.100_602_355_849_752,
        ];
        for (got, want) in fr.f.iter().zip(expected) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        assert!(fr.symplectic_residual().abs() < 1e-14);
        assert!(!fr.near_critical);
        let v = photon_variance(&fr);
        assert_relative_eq!(v.gamma, 0.022_544_650_378_999_85, epsilon = 1e-14);
        assert_eq!(v.n_term, 0.0);
    }

    // Frozen from numpy evaluation of the super-radiant closed forms.
    #[test]
    fn super_radiant_reference_point() {
        let fr = super_radiant_frame(&fig2(0.9)).unwrap();
        assert_relative_eq!(fr.mu.unwrap(), 4.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(fr.alpha_disp, 65.0, epsilon = 1e-12);
        assert_relative_eq!(fr.beta_disp, 50.0 * 5.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(fr.omega_minus, 0.886_832_437_522_663_5, epsilon = 1e-12);
        assert_relative_eq!(fr.omega_plus, 3.272_786_003_966_286, epsilon = 1e-12);
        assert_relative_eq!(fr.theta, 0.147_210_789_436_610_3, epsilon = 1e-12);
        let expected = [
            0.990_968_058_655_136,
            0.059_435_823_478_921,
            0.173_217_692_386_006,
            -0.092_138_184_905_305,
        ];
        for (got, want) in fr.f.iter().zip(expected) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }
        assert_relative_eq!(photon_variance(&fr).gamma, 72.158_953_492_081_61, epsilon = 1e-10);
    }

    #[test]
    fn soft_mode_vanishes_at_mu_one() {
        let (minus_sq, plus_sq) = super_radiant_squared_frequencies(1.0, 1.44, 1.0);
        assert_eq!(minus_sq, 0.0);
        assert_relative_eq!(plus_sq, 1.0 + 1.44 * 1.44, epsilon = 1e-15);
        let fr = super_radiant_frame(&fig2(0.6 * (1.0 + 1e-8))).unwrap();
        assert!(fr.omega_minus < 1e-3);
        assert!(fr.near_critical);
    }

    #[test]
    fn strong_coupling_limit() {
        let g = 20.0 * 0.6;
        let fr = super_radiant_frame(&fig2(g)).unwrap();
        assert!(fr.mu.unwrap() < 0.003);
        assert!(fr.theta < 0.01);
        assert_relative_eq!(fr.omega_minus, 1.0, epsilon = 1e-3);
        assert_relative_eq!(fr.f[0], 1.0, epsilon = 1e-3);
        let v = photon_variance(&fr);
        let ratio = v.gamma / (g * g * 100.0);
        assert!((0.95..=1.05).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn wrong_phase_and_critical_errors() {
        assert!(matches!(normal_frame(&fig2(0.9)), Err(Error::WrongPhase { .. })));
        assert!(matches!(super_radiant_frame(&fig2(0.3)), Err(Error::WrongPhase { .. })));
        assert!(matches!(frame(&fig2(0.6)), Err(Error::CriticalPoint { .. })));
        assert!(matches!(normal_frame(&fig2(0.6)), Err(Error::CriticalPoint { .. })));
        assert!(matches!(
            decay_scaling(&fig2(0.3), &[10]),
            Err(Error::WrongPhase { .. })
        ));
    }

    #[test]
    fn near_critical_flag() {
        assert!(frame(&fig2(0.597)).unwrap().near_critical);
        assert!(frame(&fig2(0.603)).unwrap().near_critical);
        assert!(!frame(&fig2(0.59)).unwrap().near_critical);
        assert!(!frame(&fig2(0.61)).unwrap().near_critical);
        let fr = frame(&fig2(0.599)).unwrap();
        assert_relative_eq!(fr.condition, 1.0 / fr.omega_minus);
    }

    #[test]
    fn gaussian_echo_examples() {
        let times = [0.0, 50.0, 100.0];
        let flat = loschmidt_echo_gaussian(&fig2(0.3).with_delta_tilde(0.0).unwrap(), 7.0, &times).unwrap();
        assert!(flat.values.iter().all(|&l| l == 1.0));

        let gamma = photon_variance(&normal_frame(&fig2(0.3)).unwrap()).gamma;
        let curve = loschmidt_echo_gaussian(&fig2(0.3), gamma, &times).unwrap();
        assert_eq!(curve.values[0], 1.0);
        assert_relative_eq!(curve.values[2], (-0.04 * gamma).exp(), epsilon = 1e-15);
        assert_relative_eq!(curve.values[2], 0.999_098_627, epsilon = 1e-8);
        assert_eq!(curve.method, EchoMethod::AnalyticGaussian);

        let gamma = photon_variance(&super_radiant_frame(&fig2(1.2)).unwrap()).gamma;
        assert_relative_eq!(gamma, 139.333_683_067_342_1, epsilon = 1e-10);
        let curve = loschmidt_echo_gaussian(&fig2(1.2), gamma, &[100.0]).unwrap();
        assert_relative_eq!(curve.values[0], 3.797_746_848_563_1e-3, epsilon = 1e-12);

        assert!(loschmidt_echo_gaussian(&fig2(0.3), -1.0, &times).is_err());
        assert!(loschmidt_echo_gaussian(&fig2(0.3), 1.0, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn decay_scaling_examples() {
        let rows = decay_scaling(&fig2(0.9), &[100, 1000, 10000]).unwrap();
        assert!(rows.windows(2).all(|w| w[1].1 > w[0].1));

        let small = photon_variance(&super_radiant_frame(&fig2(0.9).with_n_atoms(100).unwrap()).unwrap());
        let large = photon_variance(&super_radiant_frame(&fig2(0.9).with_n_atoms(200).unwrap()).unwrap());
        assert_relative_eq!(large.n_term, 2.0 * small.n_term, epsilon = 1e-12);
        assert_eq!(large.fluctuation_term, small.fluctuation_term);

        let a = analytic_variance(&fig2(0.3).with_n_atoms(10).unwrap()).unwrap();
        let b = analytic_variance(&fig2(0.3).with_n_atoms(10_000).unwrap()).unwrap();
        assert_eq!(a.gamma, b.gamma);
    }

    #[test]
    fn variance_diverges_towards_critical_point() {
        let g_c = 0.6;
        let below: Vec<f64> = [0.30, 0.45, 0.55, 0.59]
            .iter()
            .map(|k| analytic_variance(&fig2(k / 0.6 * g_c)).unwrap().gamma)
            .collect();
        assert!(below.windows(2).all(|w| w[1] > w[0]), "{below:?}");

        let above: Vec<VarianceReport> = [0.61, 0.65, 0.75]
            .iter()
            .map(|k| analytic_variance(&fig2(k / 0.6 * g_c)).unwrap())
            .collect();
        assert!(
            above.windows(2).all(|w| w[1].fluctuation_term < w[0].fluctuation_term),
            "{above:?}"
        );
        // At N = 100 the displacement term outgrows the fluctuation decay.
        assert!(above.windows(2).all(|w| w[1].gamma > w[0].gamma));
    }

    #[test]
    fn gap_closes_from_both_sides() {
        let below = normal_frame(&fig2(0.999 * 0.6)).unwrap();
        assert!(below.omega_minus < 0.05, "{}", below.omega_minus);
        let lower: Vec<f64> = [0.9, 0.99, 0.999, 0.9999, 0.99999]
            .iter()
            .map(|k| normal_frame(&fig2(k * 0.6)).unwrap().omega_minus)
            .collect();
        assert!(lower.windows(2).all(|w| w[1] < w[0]));
        let upper: Vec<f64> = [1.1, 1.01, 1.001, 1.0001, 1.00001]
            .iter()
            .map(|k| super_radiant_frame(&fig2(k * 0.6)).unwrap().omega_minus)
            .collect();
        assert!(upper.windows(2).all(|w| w[1] < w[0]));
        assert!(upper[4] < 0.01);
    }
}
