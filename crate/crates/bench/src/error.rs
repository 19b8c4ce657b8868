use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] bhpt::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("bad experiment config: {0}")]
    Config(String),
    #[error("bad record: {0}")]
    Record(String),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
