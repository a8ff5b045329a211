use thiserror::Error;

/// Failure of a CLI invocation, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Capacity(String),
    #[error("{0}")]
    Internal(String),
    #[error("{0}")]
    Io(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Capacity(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    /// Same class, message prefixed with `stage: `.
    pub fn in_stage(self, stage: &str) -> Self {
        let wrap = |m: String| format!("{stage}: {m}");
        match self {
            CliError::Validation(m) => CliError::Validation(wrap(m)),
            CliError::Parse(m) => CliError::Parse(wrap(m)),
            CliError::Capacity(m) => CliError::Capacity(wrap(m)),
            CliError::Internal(m) => CliError::Internal(wrap(m)),
            CliError::Io(m) => CliError::Io(wrap(m)),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<pathinf::Error> for CliError {
    fn from(e: pathinf::Error) -> Self {
        use pathinf::Error as E;
        let msg = e.to_string();
        match e {
            E::Capacity { .. } => CliError::Capacity(msg),
            E::Dimension(_) | E::Config(_) | E::Invalid(_) => CliError::Validation(msg),
            E::Degenerate(_) | E::Contract(_) => CliError::Internal(msg),
        }
    }
}

/// Tags a core result with the stage that produced it.
pub trait StageExt<T> {
    fn stage(self, stage: &str) -> CliResult<T>;
}

impl<T, E: Into<CliError>> StageExt<T> for std::result::Result<T, E> {
    fn stage(self, stage: &str) -> CliResult<T> {
        self.map_err(|e| e.into().in_stage(stage))
    }
}
