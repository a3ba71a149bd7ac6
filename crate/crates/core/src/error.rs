use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(&'static str),

    #[error("speed density has an atom convention at 0; use the symmetric window m*((-eps,eps)) = 2 eps")]
    SpeedAtZero,

    #[error("exponential time {tau} exceeds path horizon {horizon}")]
    HorizonExceeded { tau: f64, horizon: f64 },

    #[error("{what} did not converge (achieved {achieved:e}, required {required:e})")]
    NonConvergence {
        what: &'static str,
        achieved: f64,
        required: f64,
    },

    #[error("argument {x} outside the overflow guard |x| <= {limit}")]
    Overflow { x: f64, limit: f64 },

    #[error("bracket [{lo}, {hi}] has no sign change")]
    Bracket { lo: f64, hi: f64 },

    #[error("singular linear system at row {row}")]
    SingularSystem { row: usize },

    #[error("probe y = {y} lies outside a profile grid")]
    ProbeOutsideGrid { y: f64 },
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
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
