use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates a model invariant.
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("time {t} outside segment window [{start}, {end}]")]
    OutsideWindow { t: f64, start: f64, end: f64 },

    #[error("t must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("argument {name} = {value} outside domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// The kernel denominator `1 - gamma*pi*nu*R/(2 rho) * I1(rho R)` is not positive.
    #[error("kernel denominator non-positive ({denominator}) at rho = {rho}")]
    KernelDomain { rho: f64, denominator: f64 },

    #[error("node index {index} out of range (n = {n})")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("rendezvous routing regime violated: {0}")]
    InvalidRegime(String),

    #[error("malformed input {path:?}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("plot rendering failed: {0}")]
    Plot(String),
}

impl Error {
    /// True for errors that stem from bad user input rather than runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Domain { .. }
                | Error::NonPositiveTime(_)
                | Error::NodeOutOfRange { .. }
                | Error::InvalidRegime(_)
        )
    }
}
