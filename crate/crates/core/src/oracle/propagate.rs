//! Real-time evolution `exp(-i H t) |psi>` for a real symmetric `H`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::eigen::{symmetric_eigen, ParitySpectrum};
use super::hamiltonian::SparseHamiltonian;
use crate::error::{Error, Result};

pub trait Propagator {
    /// State at absolute time `t`; successive calls must not go back in time.
    fn state_at(&mut self, t: f64) -> Result<Vec<Complex64>>;

    /// Largest per-step error estimate so far (zero for exact propagation).
    fn max_step_error(&self) -> f64 {
        0.0
    }
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Exact evolution in the eigenbasis of each parity block.
pub struct SpectralPropagator<'a> {
    spectrum: &'a ParitySpectrum,
    coefficients: Vec<DVector<f64>>,
    dim: usize,
}

impl<'a> SpectralPropagator<'a> {
    pub fn new(spectrum: &'a ParitySpectrum, initial: &[f64]) -> Self {
        let coefficients = spectrum
            .sectors
            .iter()
            .map(|s| {
                let local = DVector::from_iterator(s.indices.len(), s.indices.iter().map(|&i| initial[i]));
                s.vectors.tr_mul(&local)
            })
            .collect();
        SpectralPropagator {
            spectrum,
            coefficients,
            dim: initial.len(),
        }
    }
}

impl Propagator for SpectralPropagator<'_> {
    fn state_at(&mut self, t: f64) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::default(); self.dim];
        for (sector, c) in self.spectrum.sectors.iter().zip(&self.coefficients) {
            let (re, im): (Vec<f64>, Vec<f64>) = c
                .iter()
                .zip(sector.values.iter())
                .map(|(c, e)| {
                    let (s, cos) = (e * t).sin_cos();
                    (c * cos, -c * s)
                })
                .unzip();
            let re = &sector.vectors * DVector::from_vec(re);
            let im = &sector.vectors * DVector::from_vec(im);
            for (local, &global) in sector.indices.iter().enumerate() {
                out[global] = Complex64::new(re[local], im[local]);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    pub krylov_dim: usize,
    /// Target error per step.
    pub step_tol: f64,
    /// A step whose error cannot be pushed below this aborts the evolution.
    pub abort_tol: f64,
    pub min_step: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            krylov_dim: 30,
            step_tol: 1e-10,
            abort_tol: 1e-8,
            min_step: 1e-8,
        }
    }
}

/// Short-iterate Lanczos exponential with per-step error control.
pub struct KrylovPropagator<'a> {
    h: &'a SparseHamiltonian,
    state: Vec<Complex64>,
    time: f64,
    opts: KrylovOptions,
    max_error: f64,
    /// Last accepted step, the starting guess for the next one.
    last_step: Option<f64>,
}

struct KrylovSpace {
    basis: Vec<Vec<Complex64>>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// Coupling out of the space; zero when it is invariant.
    beta_out: f64,
    scale: f64,
}

impl KrylovSpace {
    /// `exp(-i T dt) e1` in the Lanczos basis.
    fn propagated(&self, dt: f64) -> Vec<Complex64> {
        let k = self.eigenvalues.len();
        let weights: Vec<Complex64> = (0..k)
            .map(|j| Complex64::from_polar(self.eigenvectors[(0, j)], -self.eigenvalues[j] * dt))
            .collect();
        (0..k)
            .map(|i| (0..k).map(|j| weights[j] * self.eigenvectors[(i, j)]).sum())
            .collect()
    }

    fn error_estimate(&self, coefficients: &[Complex64]) -> f64 {
        self.scale * self.beta_out * coefficients.last().map_or(0.0, |c| c.norm())
    }
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(h: &'a SparseHamiltonian, initial: &[f64], opts: KrylovOptions) -> Self {
        KrylovPropagator {
            h,
            state: initial.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            time: 0.0,
            opts,
            max_error: 0.0,
            last_step: None,
        }
    }

    fn krylov_space(&self) -> KrylovSpace {
        let dim = self.state.len();
        let scale = norm(&self.state);
        let m = self.opts.krylov_dim.min(dim).max(1);
        let mut basis = vec![self.state.iter().map(|x| x / scale).collect::<Vec<_>>()];
        let mut alphas = Vec::with_capacity(m);
        let mut betas = Vec::with_capacity(m);
        let mut w = vec![Complex64::default(); dim];
        let mut beta_out = 0.0;
        loop {
            let j = basis.len() - 1;
            self.h.apply(&basis[j], &mut w);
            let alpha = inner(&basis[j], &w).re;
            alphas.push(alpha);
            // Three-term recurrence: a short Krylov space for the exponential
            // does not lose enough orthogonality to need more.
            w.iter_mut().zip(&basis[j]).for_each(|(x, y)| *x -= y * alpha);
            if j > 0 {
                let b = betas[j - 1];
                w.iter_mut().zip(&basis[j - 1]).for_each(|(x, y)| *x -= y * b);
            }
            let beta = norm(&w);
            if beta < 1e-13 * alphas[j].abs().max(1.0) {
                break;
            }
            if basis.len() == m {
                beta_out = beta;
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|x| x / beta).collect());
        }
        let k = alphas.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let (eigenvalues, eigenvectors) = symmetric_eigen(&t);
        KrylovSpace {
            basis,
            eigenvalues,
            eigenvectors,
            beta_out,
            scale,
        }
    }

    fn advance_to(&mut self, target: f64) -> Result<()> {
        while target - self.time > 0.0 {
            let space = self.krylov_space();
            let remaining = target - self.time;
            let mut dt = self.last_step.map_or(remaining, |h| (2.0 * h).min(remaining));
            let (coefficients, error) = loop {
                let c = space.propagated(dt);
                let error = space.error_estimate(&c);
                if error <= self.opts.step_tol {
                    break (c, error);
                }
                if dt / 2.0 < self.opts.min_step {
                    if error > self.opts.abort_tol {
                        return Err(Error::StepTooLarge {
                            t: self.time,
                            estimate: error,
                            limit: self.opts.abort_tol,
                        });
                    }
                    break (c, error);
                }
                dt /= 2.0;
            };
            let mut next = vec![Complex64::default(); self.state.len()];
            for (q, c) in space.basis.iter().zip(&coefficients) {
                let c = c * space.scale;
                next.iter_mut().zip(q).for_each(|(x, y)| *x += c * y);
            }
            self.state = next;
            self.max_error = self.max_error.max(error);
            if dt < remaining {
                self.last_step = Some(dt);
            }
            // Land exactly on the target to avoid a sliver step from rounding.
            self.time = if target - (self.time + dt) < 1e-14 * target.abs().max(1.0) {
                target
            } else {
                self.time + dt
            };
        }
        Ok(())
    }
}

impl Propagator for KrylovPropagator<'_> {
    fn state_at(&mut self, t: f64) -> Result<Vec<Complex64>> {
        if t < self.time {
            return Err(Error::InvalidGrid(format!(
                "propagation cannot go back from t = {} to t = {t}",
                self.time
            )));
        }
        self.advance_to(t)?;
        Ok(self.state.clone())
    }

    fn max_step_error(&self) -> f64 {
        self.max_error
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DickeParams;
    use crate::oracle::basis::FockSpinBasis;
    use crate::oracle::hamiltonian::build_hamiltonian;

    fn setup(g: f64) -> (SparseHamiltonian, Vec<f64>) {
        let p = DickeParams::new(1.0, 1.44, g, 6, 0.0).unwrap();
        let h = build_hamiltonian(&p, &FockSpinBasis::new(24, 6)).unwrap();
        let mut psi: Vec<f64> = (0..h.dim())
            .map(|i| ((i * 7 % 11) as f64 - 5.0) * (-(i as f64) / 30.0).exp())
            .collect();
        let n = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|x| *x /= n);
        (h, psi)
    }

    #[test]
    fn krylov_matches_spectral() {
        for g in [0.3, 0.9] {
            let (h, psi) = setup(g);
            let spectrum = ParitySpectrum::new(&h);
            let mut exact = SpectralPropagator::new(&spectrum, &psi);
            let mut krylov = KrylovPropagator::new(&h, &psi, KrylovOptions::default());
            for t in [0.0, 0.5, 3.0, 10.0] {
                let a = exact.state_at(t).unwrap();
                let b = krylov.state_at(t).unwrap();
                let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                assert!(norm(&diff) < 1e-8, "g={g} t={t} diff={}", norm(&diff));
                assert!((norm(&b) - 1.0).abs() < 1e-8);
            }
            assert!(krylov.max_step_error() <= 1e-10);
        }
    }

    #[test]
    fn spectral_evolution_of_an_eigenstate_is_a_phase() {
        let (h, _) = setup(0.5);
        let spectrum = ParitySpectrum::new(&h);
        let (e0, v0) = spectrum.lowest(h.dim());
        let mut prop = SpectralPropagator::new(&spectrum, &v0);
        let psi = prop.state_at(2.5).unwrap();
        let v: Vec<Complex64> = v0.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let overlap = inner(&v, &psi);
        assert!((overlap - Complex64::from_polar(1.0, -e0 * 2.5)).norm() < 1e-12);
    }

    #[test]
    fn krylov_refuses_to_go_backwards() {
        let (h, psi) = setup(0.3);
        let mut krylov = KrylovPropagator::new(&h, &psi, KrylovOptions::default());
        krylov.state_at(1.0).unwrap();
        assert!(krylov.state_at(0.5).is_err());
    }

    #[test]
    fn step_too_large_when_tolerances_cannot_be_met() {
        let (h, psi) = setup(0.9);
        let opts = KrylovOptions {
            krylov_dim: 2,
            step_tol: 1e-16,
            abort_tol: 1e-15,
            min_step: 0.5,
        };
        let mut krylov = KrylovPropagator::new(&h, &psi, opts);
        assert!(matches!(krylov.state_at(5.0), Err(Error::StepTooLarge { .. })));
    }
}
