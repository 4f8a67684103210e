use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {key}: {message}")]
    Config { key: String, message: String },

    #[error("{0}")]
    Core(#[from] dopinv_core::Error),

    #[error("solver failure during reconstruction: {0}")]
    SolverFailure(String),

    #[error("reconstruction stopped without meeting a convergence criterion ({0})")]
    NotConverged(String),

    #[error("gradient check failed: relative l2 error {0:e} exceeds {1:e}")]
    GradientCheck(f64, f64),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(e) if e.is_solver_failure() => 3,
            CliError::Core(_) => 2,
            CliError::SolverFailure(_) => 3,
            CliError::NotConverged(_) => 4,
            CliError::GradientCheck(..) => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
