use std::ops::{Add, Mul};

use nalgebra::DMatrix;

use super::basis::FockSpinBasis;
use crate::error::{Error, Result};
use crate::model::DickeParams;

/// Real symmetric matrix in compressed-row form. Every diagonal entry is
/// stored explicitly, even when zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    basis: FockSpinBasis,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    dropped_couplings: usize,
}

impl SparseHamiltonian {
    fn from_triplets(basis: FockSpinBasis, mut triplets: Vec<(usize, usize, f64)>, dropped_couplings: usize) -> Self {
        let dim = basis.dim();
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseHamiltonian {
            basis,
            row_ptr,
            cols,
            vals,
            dropped_couplings,
        }
    }

    pub fn basis(&self) -> &FockSpinBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Couplings that would have reached `n_max + 1` and were left out.
    pub fn dropped_couplings(&self) -> usize {
        self.dropped_couplings
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim())
            .flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (r, self.cols[i], self.vals[i])))
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (self.cols[i], self.vals[i]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(col, _)| col == c).map_or(0.0, |(_, v)| v)
    }

    pub fn is_symmetric(&self) -> bool {
        self.triplets().all(|(r, c, v)| self.get(c, r) == v)
    }

    /// `y = H x`.
    pub fn apply<T>(&self, x: &[T], y: &mut [T])
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = T::default();
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + x[self.cols[i]] * self.vals[i];
            }
            *out = acc;
        }
    }

    /// Copy with `shift` added to every diagonal element.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for r in 0..out.dim() {
            for i in out.row_ptr[r]..out.row_ptr[r + 1] {
                if out.cols[i] == r {
                    out.vals[i] += shift;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Dense restriction to the given (sorted) flat indices.
    pub fn block(&self, indices: &[usize]) -> DMatrix<f64> {
        let mut local = vec![usize::MAX; self.dim()];
        for (i, &g) in indices.iter().enumerate() {
            local[g] = i;
        }
        let mut m = DMatrix::zeros(indices.len(), indices.len());
        for (i, &g) in indices.iter().enumerate() {
            for (c, v) in self.row(g) {
                let j = local[c];
                if j != usize::MAX {
                    m[(i, j)] = v;
                }
            }
        }
        m
    }
}

/// `omega a^dag a + omega0 J_z + (g / sqrt N) (a^dag + a)(J_+ + J_-)` on the
/// truncated basis, counter-rotating terms included.
pub fn build_hamiltonian(p: &DickeParams, basis: &FockSpinBasis) -> Result<SparseHamiltonian> {
    if basis.n_atoms() != p.n_atoms() {
        return Err(Error::BasisMismatch {
            basis: basis.n_atoms(),
            params: p.n_atoms(),
        });
    }
    if basis.n_max() == 0 && p.g() > 0.0 {
        return Err(Error::CutoffTooSmall { n_max: 0 });
    }
    let j = basis.j();
    let spin = basis.spin_dim();
    let coupling = p.g() / f64::from(p.n_atoms()).sqrt();
    let ladder = |m: f64, step: f64| (j * (j + 1.0) - m * (m + step)).max(0.0).sqrt();

    let mut triplets = Vec::with_capacity(basis.dim() * 5);
    let mut dropped = 0;
    for n in 0..=basis.n_max() {
        for k in 0..spin {
            let i = basis.index(n, k);
            let m = basis.m(k);
            triplets.push((i, i, p.omega() * n as f64 + p.omega0() * m));
            if coupling == 0.0 {
                continue;
            }
            // a^dag J_+ and a^dag J_-; the a J_-+ partners are the transposes.
            let photon = ((n + 1) as f64).sqrt();
            for (step, target_k) in [(1.0, k + 1), (-1.0, k.wrapping_sub(1))] {
                if target_k >= spin {
                    continue;
                }
                if n == basis.n_max() {
                    dropped += 1;
                    continue;
                }
                let v = coupling * photon * ladder(m, step);
                let t = basis.index(n + 1, target_k);
                triplets.push((t, i, v));
                triplets.push((i, t, v));
            }
        }
    }
    Ok(SparseHamiltonian::from_triplets(*basis, triplets, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, n: u32) -> DickeParams {
        DickeParams::new(1.0, 1.44, g, n, 0.0).unwrap()
    }

    #[test]
    fn decoupled_is_diagonal() {
        let b = FockSpinBasis::new(5, 4);
        let h = build_hamiltonian(&params(0.0, 4), &b).unwrap();
        assert_eq!(h.nnz(), b.dim());
        assert!(h.triplets().all(|(r, c, _)| r == c));
        assert_eq!(h.get(b.index(0, 0), b.index(0, 0)), -1.44 * 2.0);
        assert_eq!(h.dropped_couplings(), 0);
    }

    #[test]
    fn single_atom_is_quantum_rabi() {
        // omega a^dag a + (omega0/2) sigma_z + g (a + a^dag) sigma_x with g0 = g.
        let (omega, omega0, g) = (1.0, 1.44, 0.37);
        let b = FockSpinBasis::new(6, 1);
        let p = DickeParams::new(omega, omega0, g, 1, 0.0).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap().to_dense();
        let mut rabi = DMatrix::<f64>::zeros(b.dim(), b.dim());
        for n in 0..=6usize {
            for s in 0..2usize {
                let i = b.index(n, s);
                let sz = if s == 1 { 1.0 } else { -1.0 };
                rabi[(i, i)] = omega * n as f64 + 0.5 * omega0 * sz;
                if n < 6 {
                    let t = b.index(n + 1, 1 - s);
                    let v = g * ((n + 1) as f64).sqrt();
                    rabi[(t, i)] = v;
                    rabi[(i, t)] = v;
                }
            }
        }
        assert!((h - rabi).abs().max() < 1e-15);
    }

    #[test]
    fn exactly_symmetric() {
        let b = FockSpinBasis::new(12, 7);
        let h = build_hamiltonian(&params(0.8, 7), &b).unwrap();
        assert!(h.is_symmetric());
        let d = h.to_dense();
        assert_eq!(d.transpose(), d);
    }

    #[test]
    fn couplings_preserve_parity() {
        let b = FockSpinBasis::new(9, 6);
        let h = build_hamiltonian(&params(0.5, 6), &b).unwrap();
        assert!(h.triplets().all(|(r, c, _)| b.parity(r) == b.parity(c)));
    }

    #[test]
    fn records_dropped_couplings() {
        let b = FockSpinBasis::new(3, 4);
        let h = build_hamiltonian(&params(0.5, 4), &b).unwrap();
        // Every spin state at n_max has an up and a down neighbour except the ends.
        assert_eq!(h.dropped_couplings(), 2 * 5 - 2);
    }

    #[test]
    fn errors() {
        let b = FockSpinBasis::new(3, 4);
        assert!(matches!(
            build_hamiltonian(&params(0.5, 5), &b),
            Err(Error::BasisMismatch { .. })
        ));
        let b = FockSpinBasis::new(0, 4);
        assert!(matches!(
            build_hamiltonian(&params(0.5, 4), &b),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn apply_matches_dense() {
        let b = FockSpinBasis::new(8, 5);
        let h = build_hamiltonian(&params(0.7, 5), &b).unwrap();
        let x: Vec<f64> = (0..b.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; b.dim()];
        h.apply(&x, &mut y);
        let dense = h.to_dense() * nalgebra::DVector::from_vec(x);
        for (a, b) in y.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn shift_moves_only_the_diagonal() {
        let b = FockSpinBasis::new(4, 3);
        let h = build_hamiltonian(&params(0.5, 3), &b).unwrap();
        let s = h.shifted(0.25);
        let diff = s.to_dense() - h.to_dense();
        assert!((diff - DMatrix::identity(b.dim(), b.dim()) * 0.25).abs().max() < 1e-15);
    }
}
