use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid Jacobi parameters alpha={alpha}, beta={beta}: both must exceed -1/2")]
    InvalidJacobiParams { alpha: f64, beta: f64 },

    #[error("node solver did not converge for order {order} (eigenvalue index {index})")]
    NodeSolver { order: usize, index: usize },

    #[error("quadrature self-check failed at level {level}: defect {defect:e}")]
    QuadratureCheck { level: i32, defect: f64 },

    #[error("broken cutoff profile at xi={xi}: negative radicand {radicand:e}")]
    BrokenProfile { xi: f64, radicand: f64 },

    #[error("length mismatch: expected at least {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index mismatch: {0}")]
    IndexMismatch(String),

    #[error("non-positive singular value b_{index} = {value}")]
    SingularValue { index: usize, value: f64 },

    #[error("unresolved integrand: relative change {change:e} under order doubling")]
    Unresolved { change: f64 },

    #[error("invalid noise level epsilon={0}")]
    InvalidEpsilon(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("bad frame container: {0}")]
    Format(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
