//! Demo commands reproducing the worked examples and exploring the matrix
//! product bounds.

pub mod arcsin;
pub mod matmul_bounds;
pub mod nn_train;
pub mod quadratic;
pub mod report;

pub use arcsin::cmd_arcsin;
pub use matmul_bounds::{cmd_matmul_bounds, BoundsOptions, Dist};
pub use nn_train::cmd_nn_train;
pub use quadratic::{cmd_quadratic, Method};
pub use report::{DemoReport, Row};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Anything else; exit code 1.
    #[error("{0}")]
    Internal(String),
}

impl From<preciseum_core::Error> for CliError {
    fn from(e: preciseum_core::Error) -> Self {
        match e {
            preciseum_core::Error::Format(_) | preciseum_core::Error::Validation(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}
