//! Error taxonomy shared by every module.

use alloc::string::String;

/// Failure modes of the holonomy kernels.
///
/// Numerical refusals (degeneracies, near-orthogonal overlaps, underflowing
/// steps) carry the diagnostic magnitudes needed to understand and report
/// them; they are contracts, not panics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A family evaluation was not Hermitian within tolerance.
    #[error("model evaluation is not Hermitian: ‖H − H†‖ = {deviation:.3e} exceeds {tolerance:.3e}")]
    NonHermitian { deviation: f64, tolerance: f64 },

    /// An iterative eigensolve failed to converge.
    #[error("eigensolver failed to converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    EigenNonConvergence { sweeps: usize, off_norm: f64 },

    /// An operation that requires an isolated level hit a (near-)degeneracy.
    #[error("level {level} is degenerate at this point: gap {gap:.3e} below {tolerance:.3e} of the spectral range")]
    Degenerate { level: usize, gap: f64, tolerance: f64 },

    /// A discrete overlap in a phase product was too close to orthogonal.
    #[error("overlap between loop samples {index} and {index_next} has magnitude {magnitude:.3e}; refine the loop")]
    NearOrthogonalOverlap {
        index: usize,
        index_next: usize,
        magnitude: f64,
    },

    /// Relative phase of two (near-)orthogonal states is undefined.
    #[error("relative phase undefined: |⟨A|B⟩| = {magnitude:.3e}")]
    UndefinedPhase { magnitude: f64 },

    /// Geodesic between antipodal states is not unique.
    #[error("geodesic not unique: endpoint states are orthogonal (|⟨ψ0|ψ1⟩| = {magnitude:.3e})")]
    NonUniqueGeodesic { magnitude: f64 },

    /// Consecutive loop directions are antipodal; the spherical geodesic
    /// between them is ambiguous.
    #[error("solid angle ambiguous: samples {index} and {index_next} are antipodal")]
    AntipodalSegment { index: usize, index_next: usize },

    /// A finite-difference or integrator step shrank below representable size.
    #[error("step size underflow: {step:.3e} at {context}")]
    StepUnderflow { step: f64, context: &'static str },

    /// A closed surface was not watertight / consistently oriented.
    #[error("surface is not watertight: {detail}")]
    NotWatertight { detail: String },

    /// Census residual stayed above tolerance after refinement.
    #[error("flux census did not converge: residual {residual:.3e} (2π units) after {levels} refinement levels")]
    CensusNotConverged { residual: f64, levels: usize },

    /// Requested multiplet is not degenerate or not isolated.
    #[error("invalid multiplet selection: {detail}")]
    Multiplet { detail: String },

    /// Frame alignment left an anti-Hermitian residual above tolerance.
    #[error("frame alignment failed: anti-Hermitian residual {residual:.3e}")]
    AlignmentFailure { residual: f64 },

    /// A multiplet rotated out of itself during transport.
    #[error("parallel transport broke down at sample {index}: smallest overlap singular value {sigma_min:.3e}")]
    TransportBreakdown { index: usize, sigma_min: f64 },

    /// Superadiabatic iteration hit a vanishing effective field.
    #[error("superadiabatic iteration broke down at order {order}: effective field magnitude {min_field:.3e}")]
    IterationBreakdown { order: usize, min_field: f64 },

    /// A transition probability fell below what the arithmetic can resolve.
    #[error("probability {value:.3e} is below the resolvable floor {floor:.3e}; increase the slowness parameter")]
    PrecisionLoss { value: f64, floor: f64 },

    /// A numerical procedure lost validity (gauge pivot vanished, computed
    /// matrix lost a structural property, …).
    #[error("numerical failure: {detail}")]
    Numerical { detail: String },

    /// Input outside an operation's mathematical domain.
    #[error("domain error: {detail}")]
    Domain { detail: String },

    /// Action-angle chart could not be constructed.
    #[error("action-angle chart failed: {detail}")]
    Chart { detail: String },

    /// An adiabatic invariant drifted more than the contract allows.
    #[error("adiabaticity lost: invariant drifted by {drift:.3e} (tolerance {tolerance:.3e}); slow the cycle down")]
    Adiabaticity { drift: f64, tolerance: f64 },

    /// A periodic trajectory was expected but none was detected.
    #[error("period detection failed: {detail}")]
    PeriodDetection { detail: String },

    /// The inertia tensor became singular during a shape cycle.
    #[error("inertia tensor singular at cycle parameter {s:.6}: smallest eigenvalue {lambda_min:.3e}")]
    SingularInertia { s: f64, lambda_min: f64 },

    /// A gap-indexed lattice quantity was requested where no gap is open.
    #[error("no open spectral gap: {detail}")]
    GapClosed { detail: String },

    /// Invalid configuration of an operation.
    #[error("invalid input: {detail}")]
    InvalidInput { detail: String },
}

impl Error {
    pub fn domain(detail: impl Into<String>) -> Self {
        Error::Domain {
            detail: detail.into(),
        }
    }

    pub fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidInput {
            detail: detail.into(),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
