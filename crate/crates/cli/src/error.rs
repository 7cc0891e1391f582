use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] congestion_core::Error),

    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    /// Input files that are readable but unusable.
    #[error("invalid input: {0}")]
    Input(String),

    /// Flag combinations clap cannot reject on its own.
    #[error("{0}")]
    Usage(String),

    #[error("writing output: {0}")]
    Csv(#[from] csv::Error),

    #[error("writing output: {0}")]
    Write(#[from] std::io::Error),
}

impl CliError {
    /// 1 for bad data, 2 for bad parameters.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_data_error() => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Read { .. } | CliError::Input(_) | CliError::Csv(_) | CliError::Write(_) => 1,
        }
    }
}
