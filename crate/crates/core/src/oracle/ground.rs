use serde::{Deserialize, Serialize};

use super::basis::{FockSpinBasis, Parity};
use super::eigen::lowest_eigenpair;
use super::hamiltonian::build_hamiltonian;
use crate::error::{Error, Result};
use crate::model::DickeParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateOptions {
    /// Eigenpair residual tolerance relative to `|E0|`.
    pub tol: f64,
    /// Required `|dE0| / |E0|` between successive cutoffs.
    pub energy_tol: f64,
    /// Required `|d<n>|` between successive cutoffs.
    pub mean_tol: f64,
    /// Overrides the cutoff heuristic for the first solve.
    pub initial_n_max: Option<usize>,
    pub max_n_max: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions {
            tol: 1e-10,
            energy_tol: 1e-8,
            mean_tol: 1e-6,
            initial_n_max: None,
            max_n_max: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    /// Relative ground-energy change at the last cutoff doubling.
    pub energy_shift: f64,
    /// Change of the mean photon number at the last cutoff doubling.
    pub mean_shift: f64,
    pub residual: f64,
    pub cutoffs_tried: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub params: DickeParams,
    pub basis: FockSpinBasis,
    pub energy: f64,
    pub vector: Vec<f64>,
    pub convergence: Convergence,
}

impl GroundStateResult {
    pub fn n_max_used(&self) -> usize {
        self.basis.n_max()
    }

    /// Largest weight in the parity sector the state mostly avoids.
    pub fn parity_leakage(&self) -> f64 {
        let (mut even, mut odd) = (0.0f64, 0.0f64);
        for (i, a) in self.vector.iter().enumerate() {
            match self.basis.parity(i) {
                Parity::Even => even = even.max(a.abs()),
                Parity::Odd => odd = odd.max(a.abs()),
            }
        }
        even.min(odd)
    }
}

/// Mean photon number of the displaced super-radiant ground state, zero
/// otherwise.
pub fn mean_field_photons(p: &DickeParams) -> f64 {
    let mu = p.omega() * p.omega0() / (4.0 * p.g() * p.g());
    if mu < 1.0 {
        p.g() * p.g() * f64::from(p.n_atoms()) * (1.0 - mu * mu) / (p.omega() * p.omega())
    } else {
        0.0
    }
}

/// `ceil(alpha + 10 sqrt(alpha + 1) + 20)` with `alpha` the mean-field photon number.
pub fn initial_cutoff(p: &DickeParams) -> usize {
    let alpha = mean_field_photons(p);
    (alpha + 10.0 * (alpha + 1.0).sqrt() + 20.0).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonStatistics {
    pub mean: f64,
    pub variance: f64,
    /// `p(n)` for `n = 0..=n_max`.
    pub distribution: Vec<f64>,
}

pub fn photon_statistics(gs: &GroundStateResult) -> PhotonStatistics {
    let basis = &gs.basis;
    let spin = basis.spin_dim();
    let distribution: Vec<f64> = gs
        .vector
        .chunks(spin)
        .map(|row| row.iter().map(|a| a * a).sum())
        .collect();
    let total: f64 = distribution.iter().sum();
    let mean = distribution.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total;
    let variance = distribution
        .iter()
        .enumerate()
        .map(|(n, p)| (n as f64 - mean).powi(2) * p)
        .sum::<f64>()
        / total;
    PhotonStatistics {
        mean,
        variance,
        distribution,
    }
}

fn solve_at(p: &DickeParams, n_max: usize, tol: f64) -> Result<GroundStateResult> {
    let basis = FockSpinBasis::new(n_max, p.n_atoms());
    let h = build_hamiltonian(p, &basis)?;
    let pair = lowest_eigenpair(&h, tol)?;
    Ok(GroundStateResult {
        params: *p,
        basis,
        energy: pair.value,
        vector: pair.vector,
        convergence: Convergence {
            energy_shift: f64::INFINITY,
            mean_shift: f64::INFINITY,
            residual: pair.residual,
            cutoffs_tried: 1,
        },
    })
}

/// Ground state of the finite-N Hamiltonian with the photon cutoff doubled
/// until both the energy and the mean photon number stop moving. The result
/// at the largest cutoff is returned.
pub fn ground_state(p: &DickeParams, opts: &GroundStateOptions) -> Result<GroundStateResult> {
    let mut n_max = opts.initial_n_max.unwrap_or_else(|| initial_cutoff(p)).max(1);
    let mut previous = solve_at(p, n_max, opts.tol)?;
    let mut previous_mean = photon_statistics(&previous).mean;
    let mut tried = 1;
    loop {
        n_max *= 2;
        if n_max > opts.max_n_max {
            return Err(Error::NoConvergence {
                reason: format!(
                    "photon cutoff exceeded {} before the ground state converged",
                    opts.max_n_max
                ),
                best_residual: previous.convergence.residual,
            });
        }
        let mut current = solve_at(p, n_max, opts.tol)?;
        let mean = photon_statistics(&current).mean;
        tried += 1;
        let energy_shift = (current.energy - previous.energy).abs() / current.energy.abs().max(1e-300);
        let mean_shift = (mean - previous_mean).abs();
        current.convergence = Convergence {
            energy_shift,
            mean_shift,
            residual: current.convergence.residual,
            cutoffs_tried: tried,
        };
        if energy_shift < opts.energy_tol && mean_shift < opts.mean_tol {
            return Ok(current);
        }
        previous = current;
        previous_mean = mean;
    }
}

/// Fixture dump of a converged ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub params: DickeParams,
    pub n_max_used: usize,
    pub energy: f64,
    pub mean: f64,
    pub variance: f64,
    pub distribution: Vec<f64>,
    pub convergence: Convergence,
}

impl OracleReport {
    pub fn new(gs: &GroundStateResult, stats: &PhotonStatistics) -> Self {
        OracleReport {
            params: gs.params,
            n_max_used: gs.n_max_used(),
            energy: gs.energy,
            mean: stats.mean,
            variance: stats.variance,
            distribution: stats.distribution.clone(),
            convergence: gs.convergence,
        }
    }
}
