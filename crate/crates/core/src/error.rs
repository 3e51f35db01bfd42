use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: lo = {lo} must be smaller than hi = {hi}")]
    InvalidRange { lo: u64, hi: u64 },

    #[error("range of {requested} entries exceeds the resource guard of {max}")]
    RangeTooLarge { requested: u64, max: u64 },

    #[error("{what} requires an even argument, got {value}")]
    EvenRequired { what: &'static str, value: u64 },

    #[error("{what} = {value} is below the minimum of {min}")]
    TooSmall {
        what: &'static str,
        value: u64,
        min: u64,
    },

    #[error("{a} and {m} are not coprime")]
    NotCoprime { a: u64, m: u64 },

    #[error("factorization of {n} exceeded the effort budget of {budget} iterations")]
    FactorizationTimeout { n: String, budget: u64 },

    #[error("exponent {k} exceeds the configured maximum of {max}")]
    ExponentTooLarge { k: u32, max: u32 },

    #[error("Romanov main term is unavailable at k = {k} ({cause}); largest usable truncation is M = {usable}")]
    RomanovTruncated { k: u32, usable: u32, cause: String },

    #[error("factor table line {line}: {reason}")]
    FactorTable { line: usize, reason: String },

    #[error("{0}")]
    Domain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("checkpoint file is not valid JSON: {0}")]
    Checkpoint(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by resource limits rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::RangeTooLarge { .. }
                | Error::FactorizationTimeout { .. }
                | Error::RomanovTruncated { .. }
                | Error::ExponentTooLarge { .. }
        )
    }
}
