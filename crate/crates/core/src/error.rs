use std::fmt;

use thiserror::Error;

/// Pipeline stage a failure originated in, used to annotate errors bubbling
/// out of [`crate::direction_test::test_direction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Standardize,
    LatentFit,
    Clustering,
    Residualize,
    Statistic,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Standardize => "standardize",
            Stage::LatentFit => "latent fit",
            Stage::Clustering => "clustering",
            Stage::Residualize => "residualize",
            Stage::Statistic => "statistic",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("sample too small: need at least {min}, got {n}")]
    SampleTooSmall { n: usize, min: usize },

    #[error("numerical failure{}: {reason}", iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    NumericalFailure { reason: String, iteration: Option<usize> },

    #[error("latent parameter estimation failed after {attempts} attempts: {last}")]
    EstimationFailure { attempts: usize, last: Box<Error> },

    #[error("clustering failed: every chain was degenerate")]
    ClusteringFailure,

    #[error("gibbs sampler failed: {rejected} of {total} sweeps rejected as degenerate")]
    GibbsFailure { rejected: usize, total: usize },

    #[error("cluster {cluster} has {size} observations, at least {min} required")]
    ClusterTooSmall { cluster: usize, size: usize, min: usize },

    #[error("invalid null moments: {0}")]
    InvalidMoments(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn numerical(reason: impl Into<String>) -> Self {
        Error::NumericalFailure { reason: reason.into(), iteration: None }
    }

    pub(crate) fn at(self, stage: Stage) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, looking through stage annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::NumericalFailure { .. }
                | Error::EstimationFailure { .. }
                | Error::ClusteringFailure
                | Error::GibbsFailure { .. }
                | Error::InvalidMoments(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
