use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown configuration key `{key}`")]
    UnknownKey { key: String },

    #[error("cannot parse `{key}` value `{value}`: {reason}")]
    Parse {
        key: String,
        value: String,
        reason: String,
    },

    #[error("odd-subset enumeration limited to {limit} hops, got {hops}; use the product form")]
    EnumerationTooLarge { hops: usize, limit: usize },

    #[error("trace window of {cells} cells exceeds the limit of {limit}")]
    TraceTooLarge { cells: usize, limit: usize },

    #[error("limit of K-out-of-N as N grows needs an explicit growth policy")]
    AmbiguousGrowth,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the failure comes from user input rather than the run itself.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::UnknownKey { .. }
                | Error::Parse { .. }
                | Error::EnumerationTooLarge { .. }
                | Error::TraceTooLarge { .. }
                | Error::AmbiguousGrowth
                | Error::Dimension(_)
        )
    }
}
