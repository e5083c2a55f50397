use thiserror::Error;

pub type Result<T> = std::result::Result<T, QlcError>;

#[derive(Debug, Error)]
pub enum QlcError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian: anti-Hermitian residual {residual:e} exceeds tolerance")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eig:e}")]
    NotPositive { min_eig: f64 },

    #[error("trace {trace} is not usable as a state normalization")]
    BadTrace { trace: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("states are not supported on the declared block: off-block mass {leak:e}")]
    OffBlockMass { leak: f64 },

    #[error("construction is infeasible: {0}")]
    Infeasible(String),

    #[error("internal consistency check failed: {0}")]
    Diagnostic(String),
}

impl QlcError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        QlcError::InvalidArgument(msg.into())
    }
}
