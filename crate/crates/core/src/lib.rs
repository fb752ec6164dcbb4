//! Probability matrices between measurement contexts.
//!
//! The crate covers four related pieces of machinery:
//!
//! * [`stochastic`]: validated stochastic matrices and the
//!   stochastic ⊃ bistochastic ⊃ unistochastic ⊃ orthostochastic taxonomy.
//! * [`decomposition`]: the square-root matrix `Σ_ij = exp(iφ_ij)·√p_ij`, its
//!   singular value decomposition `Σ = U·R·V†`, the two conjugated projector
//!   families and the trace formula `p_ij = Tr(P_i'·R·P_j''·R)`.
//! * [`certification`]: deciding whether a bistochastic matrix is unistochastic
//!   (or orthostochastic), with a phase certificate or a refutation witness.
//! * [`csm`] and [`simulator`]: contexts of rank-one projectors, Born-rule
//!   probability matrices, context transforms, and a Monte-Carlo measurement
//!   simulator.
//!
//! Trial loops and optimizer restarts run on rayon when the `parallel`
//! feature is enabled (the default); see [`Execution`].

pub mod certification;
pub mod csm;
pub mod decomposition;
pub mod error;
mod exec;
pub mod linalg;
pub mod sampling;
pub mod simulator;
pub mod stochastic;
pub mod tol;

pub use certification::{
    certify_orthostochastic, certify_unistochastic, chain_condition_3x3, search_phases,
    unitarity_defect, CertOptions, Certificate, ChainCheck, ChainWitness, PhaseObjective,
    SearchOutcome, Verdict,
};
pub use csm::{
    born_probability, build_observable, context_transform, overlap_matrix, probability_matrix,
    reverse_matrix, shared_modalities, Context, ContextTransform, Modality,
};
pub use decomposition::{
    build_sigma, gleason_determinant, projector_frame, reconstruct, reconstruct_all, svd,
    PhaseMatrix, ProjectorFrame, SigmaMatrix, SvdTriple,
};
pub use error::{Error, Result, Violation};
pub use exec::Execution;
pub use linalg::{
    basis_projector, conjugate_by, haar_random_unitary, sample_haar_unitary, ComplexMatrix,
    DiagNonneg, Projector, UnitaryMatrix,
};
pub use simulator::{
    measure, run_sequence, spin_coupling_contexts, spin_half_contexts, RunReport, StepReport,
    SystemState,
};
pub use stochastic::{classify, is_bistochastic, squared_moduli, validate_stochastic, Classification, MatrixClass, ProbMatrix};

pub use num_complex::Complex64;
