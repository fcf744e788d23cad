use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    DimensionMismatch { expected: usize, found: usize },
    /// A non-finite value where a finite one is required. The payload names the quantity.
    NonFinite(&'static str),
    /// Curvature radicand below the round-off threshold. Cannot happen for finite input.
    NegativeRadicand(f64),
    NegativeCurvature(f64),
    InvalidConfig(&'static str),
    TimeRegression { previous: f64, current: f64 },
    MissingCheckpoint { rollback_to: f64 },
    Diverged { t: f64 },
    StepUnderflow { t: f64, dt: f64, dt_min: f64 },
    InvalidHorizon { t_start: f64, t_end: f64 },
    RootNotBracketed,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::NegativeRadicand(r) => write!(f, "curvature radicand is negative ({r:e})"),
            Error::NegativeCurvature(k) => write!(f, "curvature must be nonnegative, got {k:e}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::TimeRegression { previous, current } => {
                write!(f, "sample time went backwards: {current:e} < {previous:e}")
            }
            Error::MissingCheckpoint { rollback_to } => {
                write!(f, "no checkpoint available at t = {rollback_to:e}")
            }
            Error::Diverged { t } => write!(f, "integration diverged at t = {t:e}"),
            Error::StepUnderflow { t, dt, dt_min } => write!(
                f,
                "time step underflow at t = {t:e}: dt = {dt:e} below half of dt_min = {dt_min:e}"
            ),
            Error::InvalidHorizon { t_start, t_end } => {
                write!(f, "end time {t_end:e} must exceed start time {t_start:e}")
            }
            Error::RootNotBracketed => write!(f, "contact-duration root could not be bracketed"),
        }
    }
}

impl core::error::Error for Error {}
