use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A forcing order hits a pole of a trace coefficient or zeroes its prefactor.
    #[error("degenerate forcing order {lambda} (order-{order} coefficient)")]
    DegenerateOrder { lambda: f64, order: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    BadShape { expected: usize, got: usize },

    #[error("matrix is numerically singular")]
    SingularMatrix,

    #[error("vertex closure for type {vertex_type} is singular on a grid with nx = {nx}")]
    SingularClosure { vertex_type: String, nx: usize },

    #[error("2x2 pivot block of the Schur factorization is singular")]
    SingularBlock,

    /// A fractional order outside the supported range of the requested operation.
    #[error("unsupported order {0}")]
    BadOrder(f64),

    #[error("no convergence at {x}: estimate {estimate:.3e} above tolerance {tol:.1e}")]
    NoConvergence { x: f64, estimate: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("structure not reducible: {0}")]
    NotReducible(String),

    #[error("solution blew up at step {step} (t = {t})")]
    Blowup { step: usize, t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
