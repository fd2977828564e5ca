//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the carpet pipeline.
#[derive(Debug, Error)]
pub enum CarpetError {
    /// The carpet family needs N ≥ 2.
    #[error("N must be at least 2, got {0}")]
    InvalidN(u32),

    /// A size guard (cell count, mesh size, level) was exceeded.
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    /// Point-merge cluster wider than 10× the snap tolerance: the geometry
    /// and the tolerance disagree, which indicates a construction bug.
    #[error("snap tolerance failure: merge cluster of diameter {diameter:e} exceeds 10 × tol = {:e}", 10.0 * tol)]
    ToleranceFailure { diameter: f64, tol: f64 },

    /// A geometric symmetry did not map the vertex/node set onto itself.
    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),

    /// Boundary sets passed to a solve were empty or overlapping.
    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),

    /// No path between the two terminal sets: effective resistance is
    /// infinite. Reported as a distinguished value so sweeps can record it.
    #[error("terminal sets are disconnected; effective resistance is infinite")]
    Disconnected,

    /// The iterative solver missed its residual target.
    #[error("solver failed to converge: residual {residual:e} after {iterations} iterations")]
    SolverFailure { iterations: usize, residual: f64 },

    /// The direct solver rejected the system matrix.
    #[error("factorization failed: {0}")]
    Factorization(String),

    /// A mesh triangle straddles a sector boundary ray, so the sector
    /// decomposition is not defined for it.
    #[error("mesh triangle {0} straddles a sector boundary")]
    StraddlingTriangle(usize),

    /// Boundary fluxes must sum to zero.
    #[error("flux sum must vanish, got {0:e}")]
    FluxSumNonzero(f64),

    /// Queried side index is not an A/B side.
    #[error("side {0} is not an A or B side")]
    InvalidSide(usize),

    /// A sequence operation needs more data.
    #[error("sequence too short: {0}")]
    SequenceTooShort(String),

    /// Resistance sequences must be positive and finite for ratio analysis.
    #[error("sequence entry {index} is not a positive finite number: {value}")]
    NonPositiveEntry { index: usize, value: f64 },

    /// JSON serialization failure (should not happen for our types).
    #[error("serialization: {0}")]
    Serialize(#[from] serde_json::Error),

    /// Filesystem problems while writing artifacts.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CarpetError>;
