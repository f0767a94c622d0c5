use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested dense allocation exceeds the configured memory budget.
    #[error("resource error: {entries} dense entries exceed the budget of {budget}")]
    Resource { entries: u128, budget: u128 },

    /// An input violates a structural contract (Hermiticity, dimensions, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numerical routine failed or missed its accuracy contract.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Probability leaked into the truncation edge band beyond the hard limit.
    #[error(
        "truncation inadequate: edge-band probability {leakage:.3e} at t = {time}; \
         last safe time {safe_horizon}"
    )]
    Truncation {
        time: f64,
        leakage: f64,
        safe_horizon: f64,
    },

    /// The occupation cutoff cannot represent a requested state accurately.
    #[error("cutoff inadequate: {0}")]
    CutoffInadequate(String),

    /// A coherence denominator vanished.
    #[error("near-zero denominator in {factor}: {value:.3e}")]
    NearZeroDenominator { factor: &'static str, value: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by the finite occupation cutoff.
    pub fn is_truncation(&self) -> bool {
        matches!(self, Error::Truncation { .. } | Error::CutoffInadequate(_))
    }
}
