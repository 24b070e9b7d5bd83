use ldp_core::LdpError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// Malformed or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),
    /// A numerical routine failed on a valid configuration.
    #[error("numerical failure: {0}")]
    Numerical(#[from] LdpError),
    /// A Monte Carlo run produced nothing usable.
    #[error("numerical failure: {0}")]
    Degenerate(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            LabError::Numerical(_) | LabError::Degenerate(_) => 3,
            LabError::Io(_) => 1,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
