//! Detection of multipartite entanglement through sampled relaxations of
//! robust semidefinite programs.
//!
//! The pipeline: pick a separability structure (full separability, a fixed
//! bipartition, or m-separability), draw product vectors uniformly at random,
//! turn each draw into a small linear matrix inequality on a candidate
//! witness `W` with `Tr W = 1`, minimize `Tr(W rho)` over the resulting SDP,
//! and certify the answer a posteriori by Monte-Carlo estimation of the
//! constraint-violation probability.
//!
//! A negative optimum flags `rho` as entangled with respect to the chosen
//! structure; sample counts for a chosen confidence level come from the
//! scenario-optimization bound, and validation sample counts from the
//! Chernoff bound.

pub mod experiments;
pub mod io;
pub mod linalg;
pub mod partition;
pub mod sdp;
pub mod states;
pub mod validation;
pub mod witness;

pub use linalg::{ComplexMatrix, DimsSpec, C64};
pub use partition::{Partition, PartitionStructure};
pub use sdp::{AffineBlock, SdpProblem, SdpSolution, SolveOptions, SolveStatus};
pub use states::{DensityMatrix, ProductVector, RngStream, StreamLabel};
pub use validation::{PptReport, ValidationReport, Verdict};
pub use witness::{SampledProgram, WitnessResult};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not Hermitian (residual {residual:.3e} > tolerance {tol:.3e})")]
    NotHermitian { residual: f64, tol: f64 },
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("missing block assignment: {0}")]
    MissingAssignment(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver failed with status {0:?}")]
    Solver(sdp::SolveStatus),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
