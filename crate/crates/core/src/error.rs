use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("aliasing budget exceeded: discarded tail fraction {fraction:.3e} > budget {budget:.3e}")]
    AliasingBudgetExceeded { fraction: f64, budget: f64 },

    #[error("blowup detected at t = {t:.6e}: norm {norm:.3e} exceeds guard {guard:.3e}")]
    BlowupDetected { t: f64, norm: f64, guard: f64 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("tolerance not met: achieved {achieved:.3e}, requested {requested:.3e}")]
    ToleranceNotMet { achieved: f64, requested: f64 },

    #[error("sign mismatch: {0}")]
    SignMismatch(String),

    #[error("certificate failed: {0}")]
    CertificateFailed(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("singular Gramian: {0}")]
    SingularGramian(String),

    #[error("no contraction: ratio {ratio:.3e} at sweep {sweep}")]
    NoContraction { ratio: f64, sweep: usize },

    #[error("radius not reached: distance {distance:.3e}, radius {radius:.3e}")]
    RadiusNotReached { distance: f64, radius: f64 },

    #[error("configuration error: {0}")]
    ConfigError(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the CLI: 2 configuration, 3 numeric failure, 4 tolerance not met.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigError(_) | Error::Parse(_) | Error::Io(_) => 2,
            Error::ToleranceNotMet { .. } => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
