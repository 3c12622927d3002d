use serde::{Deserialize, Serialize};

/// Truncated product basis `|n> (x) |J, m>` with `0 <= n <= n_max` and
/// `J = N/2`. States are stored photon-major: `index = n * (N + 1) + k`
/// where `k = m + J` runs over `0..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpinBasis {
    n_max: usize,
    n_atoms: u32,
}

/// Eigenvalue of the parity operator `exp(i pi (a^dag a + J_z + J))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl FockSpinBasis {
    pub fn new(n_max: usize, n_atoms: u32) -> Self {
        FockSpinBasis { n_max, n_atoms }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn j(&self) -> f64 {
        f64::from(self.n_atoms) / 2.0
    }

    pub fn spin_dim(&self) -> usize {
        self.n_atoms as usize + 1
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1) * self.spin_dim()
    }

    pub fn index(&self, n: usize, k: usize) -> usize {
        debug_assert!(n <= self.n_max && k < self.spin_dim());
        n * self.spin_dim() + k
    }

    /// `(n, k)` for a flat index, with `m = k - J`.
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.spin_dim(), index % self.spin_dim())
    }

    pub fn m(&self, k: usize) -> f64 {
        k as f64 - self.j()
    }

    pub fn parity(&self, index: usize) -> Parity {
        let (n, k) = self.coords(index);
        if (n + k) % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Flat indices belonging to one parity sector, in increasing order.
    pub fn sector(&self, parity: Parity) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.parity(i) == parity).collect()
    }
}
