//! Error type shared by all modules.

use thiserror::Error;

/// Everything that can go wrong while evaluating geometry, integrating, or
/// solving spectra. Variants mirror the failure modes of the operations that
/// raise them; most are recoverable signals (a singular metric marks a
/// physically inaccessible point, not a bug).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoreError {
    /// The conformal factor h dropped to (or below) the configured floor, so
    /// the metric gamma/h is no longer usable at this point.
    #[error("metric singular: h = {h:.3e} at or below floor {floor:.3e}")]
    MetricSingular { h: f64, floor: f64 },

    /// Operation only defined for one degree of freedom.
    #[error("unsupported dimension: n = {n}, operation requires n = 1")]
    UnsupportedDimension { n: usize },

    /// Adaptive integrator could not keep the local error in tolerance even
    /// at the smallest representable step.
    #[error("step size underflow at t = {t:.6e}")]
    StepSizeUnderflow { t: f64 },

    /// No fast motion to measure (J below threshold).
    #[error("degenerate fast motion: J = {j:.3e} below 1e-14")]
    DegenerateFastMotion { j: f64 },

    /// Two trajectories share no common time range.
    #[error("empty overlap between trajectory time ranges")]
    EmptyOverlap,

    /// Not enough sweep points (or decade span) for a convergence fit.
    #[error("insufficient data for fit: {0}")]
    InsufficientData(String),

    /// Phase-plane origin r = 0 reached; cylindrical coordinates undefined.
    #[error("origin singular: r^2 = {r_squared:.3e}")]
    OriginSingular { r_squared: f64 },

    /// The p = 1 closed-form branch was requested away from p = 1.
    #[error("branch mismatch: |p - 1| = {deviation:.3e} exceeds 1e-9")]
    BranchMismatch { deviation: f64 },

    /// Quadrature endpoints outside the admissible interval.
    #[error("quadrature domain error: {0}")]
    DomainError(String),

    /// A-posteriori wall-decay or refinement check failed for the grid.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// Iterative eigensolver did not reach the residual target.
    #[error("eigensolver did not converge: {0}")]
    SolverNoConvergence(String),

    /// Eigenvalue clustering could not separate the lowest two towers.
    #[error("band identification ambiguous: {0}")]
    BandIdentificationAmbiguous(String),

    /// Malformed argument (dimension mismatch, non-finite input, bad config).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
