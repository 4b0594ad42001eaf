use std::path::PathBuf;

/// Errors raised across the simulator and analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symplectic (max |S^T Omega S - Omega| = {deviation:e})")]
    NotSymplectic { deviation: f64 },

    #[error("matrix is not symmetric (max relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("covariance violates the uncertainty bound (smallest symplectic eigenvalue {smallest})")]
    Unphysical { smallest: f64 },

    #[error(
        "xi = 0 is the QND limit where the swap coupling (1/xi)sqrt(1-exp(-2 gamma_sw T)) is \
         undefined; use the QND input-output relations instead"
    )]
    QndLimit,

    #[error(
        "xi^2 = {xi_squared} is outside (0, 1): imaginary xi describes entanglement between the \
         light and atoms, which this toolkit does not simulate"
    )]
    ImaginaryXiRegime { xi_squared: f64 },

    #[error("coupling product xi^2 kappa^2 = {value} exceeds 1")]
    CouplingOutOfRange { value: f64 },

    #[error("time step too coarse: gamma*dt = {gamma_dt} exceeds the accuracy guard {limit}")]
    StepTooCoarse { gamma_dt: f64, limit: f64 },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("at least {required} cycles are needed, got {found}")]
    InsufficientCycles { required: usize, found: usize },

    #[error("acquisition configurations of the ensembles differ: {0}")]
    ConfigMismatch(String),

    #[error("mode functions of the two channels do not match (overlap {overlap:.4} < {required})")]
    MismatchedModes { overlap: f64, required: f64 },

    #[error("the rate profile is identically zero")]
    ZeroProfile,

    #[error("invalid record file: {0}")]
    Format(String),

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("output directory {0} is not empty; pass --force to overwrite")]
    OutputExists(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Whether the error stems from user configuration rather than the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::ImaginaryXiRegime { .. }
                | Error::QndLimit
                | Error::StepTooCoarse { .. }
                | Error::Config { .. }
                | Error::OutputExists(_)
                | Error::ConfigMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
