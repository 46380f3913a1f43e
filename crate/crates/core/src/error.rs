use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layout error: {0}")]
    Layout(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("contract violation: {0}")]
    Contract(String),
    /// A difference equation was requested outside the amplitudes where it holds.
    #[error("outside validity regime: {0}")]
    Regime(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("trajectory {trajectory} step {step}: {source}")]
    Trajectory {
        trajectory: u64,
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
