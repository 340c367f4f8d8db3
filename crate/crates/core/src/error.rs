use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The operator description or a run parameter failed validation.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("frequency must be nonzero for symbol evaluation")]
    ZeroFrequency,

    #[error("t = {t} lies outside the working interval [{a}, {b}]")]
    OutsideWorkInterval { t: f64, a: f64, b: f64 },

    /// `Δ(·, ξ)` vanishes identically along the direction.
    #[error("degenerate direction {dir:?}: discriminant vanishes identically on the working interval")]
    DegenerateDirection { dir: Vec<f64> },

    #[error("operator is not hyperbolic at t = {t}, xi = {xi:?}: {reason}")]
    NotHyperbolic { t: f64, xi: Vec<f64>, reason: String },

    #[error("step size underflow (h = {h:e}) at t = {t}, xi = {xi:?}")]
    StepUnderflow { h: f64, t: f64, xi: Vec<f64> },

    #[error("non-finite value encountered at t = {t}, xi = {xi:?}")]
    NonFinite { t: f64, xi: Vec<f64> },

    /// `|V|` left the representable range; the mode grows faster than the
    /// integrator can follow.
    #[error("mode amplitude overflow at t = {t}, xi = {xi:?}")]
    Overflow { t: f64, xi: Vec<f64> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Validation failures (bad input) as opposed to numerical aborts.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::ZeroFrequency
                | Error::OutsideWorkInterval { .. }
                | Error::NotHyperbolic { .. }
                | Error::DegenerateDirection { .. }
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}
