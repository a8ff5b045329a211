use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error(
        "candidate capacity exceeded: more than {cap} distinct candidate states after \
         {rows_processed} of {rows_total} observation rows; raise the candidate cap or \
         restrict the analysis to a subset of variables"
    )]
    Capacity {
        cap: usize,
        rows_processed: usize,
        rows_total: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate result: {0}")]
    Degenerate(String),

    #[error("contract violation: {0}")]
    Contract(String),
}
