//! Dynamic sensitivity of the Dicke model near its superradiant transition.
//!
//! A far-detuned probe atom shifts the cavity frequency by `delta_tilde`, so
//! the ensemble evolves under `H_g` or `H_e` depending on the probe state. The
//! overlap of the two evolutions is the Loschmidt echo `L(t) = |D(t)|^2`.
//!
//! * [`polariton`] evaluates the thermodynamic-limit polariton spectrum, the
//!   ground-state photon-number variance `gamma` and the short-time echo
//!   `exp(-4 gamma delta^2 t^2)` in both phases.
//! * [`oracle`] diagonalises the finite-N Hamiltonian in a truncated
//!   Fock x spin basis and evolves the exact decoherence factor.
//! * [`sweep`] runs parameter grids over `(g, t)` or `(g, N)` in parallel.

pub mod cli;
pub mod echo;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod polariton;
pub mod sweep;

pub use echo::{reduced_coherence, EchoCurve, EchoMethod};
pub use error::{Error, Result};
pub use model::{
    classify_phase, critical_coupling, dispersive_shift, shifted_params, Branch, DickeParams, PhaseLabel, ProbeAtom,
};
pub use polariton::{
    decay_scaling, loschmidt_echo_gaussian, normal_frame, photon_variance, super_radiant_frame, PolaritonFrame,
    VarianceReport,
};
