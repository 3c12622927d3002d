//! Exact finite-N reference: truncated Fock x spin-J diagonalisation and
//! real-time evolution of the decoherence factor.

pub mod basis;
pub mod echo;
pub mod eigen;
pub mod ground;
pub mod hamiltonian;
pub mod propagate;

pub use basis::{FockSpinBasis, Parity};
pub use echo::{echo_characteristic, echo_exact, echo_exact_from_ground, EchoOptions, ExactEcho, PropagationMethod};
pub use eigen::{lowest_eigenpair, Eigenpair, ParitySpectrum, DENSE_LIMIT};
pub use ground::{
    ground_state, mean_field_photons, photon_statistics, GroundStateOptions, GroundStateResult, OracleReport,
    PhotonStatistics,
};
pub use hamiltonian::{build_hamiltonian, SparseHamiltonian};
pub use propagate::KrylovOptions;
