use thiserror::Error;

/// Errors raised by the forward model, the solvers and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear solver did not reach tolerance: residual {residual:e} > {target:e} after {steps} refinement steps")]
    LinearSolver {
        residual: f64,
        target: f64,
        steps: usize,
    },

    #[error("newton iteration failed after {iterations} iterations: residual {residual:e}")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical solvers (as opposed to bad input or I/O).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::LinearSolver { .. } | Error::NewtonDivergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
