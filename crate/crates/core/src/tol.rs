//! Numerical tolerances shared across the crate.

/// Max-norm bound on `M†M − I` for a unitary matrix.
pub const UNITARITY: f64 = 1e-10;
/// Max-norm bound on `P − P†` for a projector.
pub const HERMITICITY: f64 = 1e-12;
/// Max-norm bound on `P² − P` for a projector.
pub const IDEMPOTENCY: f64 = 1e-10;
/// Allowed deviation of a rank-one projector's trace from 1.
pub const TRACE: f64 = 1e-10;
/// Orthogonality and completeness of a context's projectors.
pub const CONTEXT: f64 = 1e-10;

/// Range slack for an individual probability.
pub const PROB_ENTRY: f64 = 1e-12;
/// Row and column sums of stochastic matrices.
pub const PROB_SUM: f64 = 1e-10;

/// Reconstruction of `Σ` from its singular value decomposition.
pub const SVD_RECONSTRUCTION: f64 = 1e-9;
/// Imaginary residue tolerated on traces that are real in exact arithmetic.
pub const IMAG_RESIDUE: f64 = 1e-10;
/// Imaginary residue tolerated on Born-rule traces.
pub const BORN_IMAG_RESIDUE: f64 = 1e-12;

/// Triangle inequality slack in the 3×3 chain condition.
pub const CHAIN: f64 = 1e-12;

/// Born probabilities below this are treated as exact zeros when sampling.
pub const SAMPLING_ZERO: f64 = 1e-12;
/// Largest row-sum drift that sampling renormalizes silently.
pub const SAMPLING_RENORMALIZE: f64 = 1e-9;
