//! Error type shared across the crate.

/// Failures surfaced by configuration validation, the numerical kernels
/// and the brute-force oracle.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A structurally invalid model or request (zero ensemble size,
    /// missing common sites for a common-site excitation, bad grids).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The full-Hilbert-space oracle was asked for more qubits than the
    /// configured cap allows.
    #[error("oracle request needs {requested} total qubits, cap is {cap}")]
    CapExceeded { requested: u32, cap: u32 },

    /// A state entry became non-finite during time integration.
    #[error("integration produced a non-finite value at step {step}")]
    IntegrationDiverged { step: usize },

    /// The Jacobi eigensolver failed to reach its convergence threshold.
    #[error("eigensolver did not converge within {0} sweeps")]
    EigenNoConvergence(usize),
}
