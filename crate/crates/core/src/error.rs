use crate::model::PhaseLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("probe outside the dispersive regime: |delta_s| = {delta_s} < 10 * g_s = {}", 10.0 * g_s)]
    RegimeViolation { g_s: f64, delta_s: f64 },

    #[error("shifted cavity frequency {omega} is not positive")]
    InvalidShift { omega: f64 },

    #[error("expected a {expected} configuration, got {actual}")]
    WrongPhase { expected: PhaseLabel, actual: PhaseLabel },

    #[error("g = {g} sits at the critical point g_c = {g_c}; the thermodynamic-limit formulas are undefined there")]
    CriticalPoint { g: f64, g_c: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("basis built for N = {basis} but parameters have N = {params}")]
    BasisMismatch { basis: u32, params: u32 },

    #[error("photon cutoff n_max = {n_max} is too small for a coupled Hamiltonian")]
    CutoffTooSmall { n_max: usize },

    #[error("no convergence: {reason} (best residual {best_residual:.3e})")]
    NoConvergence { reason: String, best_residual: f64 },

    #[error("propagation step error {estimate:.3e} exceeds {limit:.1e} at t = {t}")]
    StepTooLarge { t: f64, estimate: f64, limit: f64 },

    #[error("N = {n_atoms} exceeds the exact-diagonalization budget of {budget}")]
    BudgetExceeded { n_atoms: u32, budget: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
