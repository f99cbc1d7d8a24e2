use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Fock cutoff must be at least 2, got {0}")]
    InvalidCutoff(usize),
    #[error("only one or two ions are supported, got {0}")]
    UnsupportedIonCount(usize),
    #[error("operators live on different spaces: {0} vs {1}")]
    BasisMismatch(String, String),
    #[error("cannot embed a {got}-dimensional operator into a {expected}-dimensional factor")]
    Embedding { expected: usize, got: usize },
    #[error("factor not present in space: {0}")]
    MissingFactor(String),
    #[error("partial trace needs at least one kept factor")]
    EmptyKeep,
    #[error("Hamiltonian is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("jump rate must be non-negative, got {0}")]
    NegativeRate(f64),
    #[error("generator is not trace preserving (relative defect {0:e})")]
    NotTracePreserving(f64),
    #[error("steady state is not unique: {0}")]
    Degenerate(String),
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("iterative solve did not converge: {0}")]
    NoConvergence(String),
    #[error("problem with {needed} unknowns exceeds the memory budget of {budget}")]
    MemoryBudget { needed: usize, budget: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("operator has zero trace")]
    ZeroTrace,
    #[error("trace is {0}, expected 1")]
    NonUnitTrace(f64),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("expected a {expected}-mode phonon operator")]
    ModeCount { expected: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
