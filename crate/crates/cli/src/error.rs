use thiserror::Error;

/// Failure of a CLI run, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] hetanm::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for usage and data problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(hetanm::Error::InvalidData("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(hetanm::Error::ClusteringFailure).exit_code(), 3);
        let failed = hetanm::Error::EstimationFailure { attempts: 3, last: Box::new(hetanm::Error::ClusteringFailure) };
        assert_eq!(CliError::Core(failed).exit_code(), 3);
    }
}
