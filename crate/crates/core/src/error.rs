use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("sampling period must be positive, got {0}")]
    InvalidSampleTime(f64),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("sampling periods differ: plant {plant} s, nominal {nominal} s")]
    SampleTimeMismatch { plant: f64, nominal: f64 },

    #[error(
        "closed-form loop analysis requires zero viscous friction \
         (plant b = {plant}, nominal b = {nominal})"
    )]
    FrictionNotNeglected { plant: f64, nominal: f64 },

    #[error("disturbance input vector is zero")]
    DegenerateDisturbanceInput,

    #[error("observer eigenvalue collides with the Jordan block at 1 (alpha * g = {alpha_gain:e})")]
    NearDefective { alpha_gain: f64 },

    #[error("matrix has no defective double eigenvalue: {0}")]
    NotDefective(&'static str),

    #[error("outer loop does not decouple the observer mode (coupling {coupling:e})")]
    NotSeparable { coupling: f64 },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("invalid transfer function: {0}")]
    InvalidTransferFunction(&'static str),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("simulation diverged at step {step} (|q| = {magnitude:e})")]
    Diverged { step: usize, magnitude: f64 },
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            requirement: "positive and finite",
            value,
        })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            requirement: "non-negative and finite",
            value,
        })
    }
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            requirement: "finite",
            value,
        })
    }
}
