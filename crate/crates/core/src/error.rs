use thiserror::Error;

/// Errors raised by the tail-asymptotics engine and its models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("below-mean: R = {r} does not exceed the mean {mean}")]
    BelowMean { r: f64, mean: f64 },

    #[error("no-convergence: {0}")]
    NoConvergence(String),

    #[error("alpha-unknown: the model declares no regular-variation index")]
    AlphaUnknown,

    #[error("quadrature-failure: {intervals} subintervals used, error estimate {error:e}")]
    QuadratureFailure { intervals: usize, error: f64 },

    #[error("insufficient-span: samples cover {decades:.3} decades, need at least one")]
    InsufficientSpan { decades: f64 },

    #[error("nonpositive-sample at x = {x}, f = {f}")]
    NonpositiveSample { x: f64, f: f64 },

    #[error("moment-exploded at t*={t_star} (requested t={t})")]
    MomentExploded { t: f64, t_star: f64 },

    #[error("step-underflow at t = {t} (step {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("precondition-violated: {0}")]
    PreconditionViolated(String),

    #[error("no-bracket: critical moment search exceeded the scan cap")]
    NoBracket,

    #[error("fit-ill-conditioned: condition number {cond:e}")]
    FitIllConditioned { cond: f64 },

    #[error("infinite-critical-moment on the requested side")]
    InfiniteCriticalMoment,

    #[error("unsupported-case: {0}")]
    UnsupportedCase(String),

    #[error("series-nonconvergence after {iterations} iterations")]
    SeriesNonconvergence { iterations: usize },

    #[error("p-too-close-to-critical: p = {p} exceeds 0.8 * mu* = {limit}")]
    PTooCloseToCritical { p: f64, limit: f64 },

    #[error("invalid-dt: {dt}")]
    InvalidDt { dt: f64 },

    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and nonnegative",
        })
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
