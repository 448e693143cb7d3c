use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("negative or non-finite event time {0} ps")]
    NegativeEventTime(f64),

    #[error("gray state index {0} outside the 5-bit cycle")]
    StateOutOfRange(u32),

    #[error("invalid sampling-matrix code: {0}")]
    InvalidCode(String),

    #[error("fine code {code} outside [1, {n}]")]
    CodeOutOfRange { code: usize, n: usize },

    #[error("cannot configure finer than the raw TDC: n_vir = {n_vir} exceeds n = {n}")]
    ResolutionTooFine { n_vir: usize, n: usize },

    #[error("hit count mismatch: raw timestamps total {raw} but grid expects {grid}")]
    HitCountMismatch { raw: u64, grid: u64 },

    #[error("raw bin {raw_bin} addresses virtual bin {address} which collected no compensated hits")]
    DeadAddress { raw_bin: usize, address: usize },

    #[error("histogram accumulator overflow at virtual bin {0}")]
    AccumulatorOverflow(usize),

    #[error("histogram has zero total counts")]
    ZeroCounts,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors raised while building or applying calibration tables, as opposed
    /// to malformed input or configuration.
    pub fn is_calibration(&self) -> bool {
        matches!(
            self,
            Error::ResolutionTooFine { .. }
                | Error::HitCountMismatch { .. }
                | Error::DeadAddress { .. }
                | Error::AccumulatorOverflow(_)
                | Error::ZeroCounts
        )
    }
}
