use thiserror::Error;

/// Errors produced by the signal-processing pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("analog class has no constellation")]
    NoConstellation,

    #[error("AM overmodulation: envelope minimum {0} is not positive")]
    Overmodulation(f64),

    #[error("timing offset {0} outside [-0.5, 0.5]")]
    TimingOffsetRange(f64),

    #[error("cannot normalize an all-zero stream")]
    ZeroPower,

    #[error("no timing tone: |X_m| below threshold (constant-envelope or degenerate input)")]
    NoTimingTone,

    #[error("insufficient symbols: got {got}, need at least {need}")]
    InsufficientSymbols { got: usize, need: usize },

    #[error("SNR too low for noise compensation: M21 - sigma^2 = {0}")]
    SnrTooLow(f64),

    #[error("degenerate covariance in cycle-frequency test at alpha = {0}")]
    DegenerateCovariance(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failure modes that the Monte Carlo harness counts as
    /// "no decision" rather than treating as fatal.
    pub fn is_no_decision(&self) -> bool {
        matches!(
            self,
            Error::SnrTooLow(_)
                | Error::InsufficientSymbols { .. }
                | Error::NoTimingTone
                | Error::DegenerateCovariance(_)
        )
    }
}
