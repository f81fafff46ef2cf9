use thiserror::Error;

/// Errors produced by the operator-algebra toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    Empty,

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("not a projection (eigenvalue {0} is not within tolerance of 0 or 1)")]
    NotProjection(f64),

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("iterative meet did not converge after {iterations} iterations (last step {step:e})")]
    MeetNotConverged { iterations: usize, step: f64 },

    #[error("algebra is not abelian (commutator residual {0:e})")]
    NotAbelian(f64),

    #[error("projection lattice too large: {0} minimal projections (limit {1})")]
    LatticeTooLarge(usize, usize),

    #[error("central decomposition failed: eigenvalue clusters not separated after {0} attempts")]
    ClusterAmbiguity(usize),

    #[error("algebras do not commute (residual {0:e})")]
    NonCommuting(f64),

    #[error("operator is not in the algebra (residual {0:e})")]
    NotInAlgebra(f64),

    #[error("operator norm {0} exceeds 1")]
    NotContraction(f64),

    #[error("restriction is not central for the given algebras (residual {0:e})")]
    NotCentral(f64),

    #[error("no eigenvector of the state is fixed by every total coincidence (best residual {0:e})")]
    NoInvariantVector(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
