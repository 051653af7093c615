use thiserror::Error;

/// Errors raised by the degree, discretization and continuation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate region: side {axis} has zero or negative width")]
    DegenerateRegion { axis: usize },

    #[error("non-finite value encountered while evaluating {what}")]
    NonFinite { what: &'static str },

    #[error("admissibility violated: boundary margin {margin:e} below required {required:e}")]
    Admissibility { margin: f64, required: f64 },

    #[error("incomplete certificate: {0}")]
    IncompleteCertificate(String),

    #[error("not a corrector: L + A is singular")]
    NotACorrector,

    #[error("orientation missing or invalid: {0}")]
    Orientation(String),

    #[error("transversality failure: rank {rank} < {required}")]
    Transversality { rank: usize, required: usize },

    #[error("subspace condition violated: residual {residual:e} exceeds {tol:e}")]
    Subspace { residual: f64, tol: f64 },

    #[error("approximations disagree after {halvings} halvings (last eps = {eps:e})")]
    EpsTooLarge { eps: f64, halvings: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("discretization invariant failed: {0}")]
    Construction(String),

    #[error("lambda window violation: b = {b} exceeds certified {certified}")]
    LambdaWindow { b: f64, certified: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
