use thiserror::Error;

use crate::bell::BellResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The Hardy ratio is undefined; the carried result still has `ch` and every term.
    #[error("Hardy ratio undefined: denominator {} is not above the guard", .0.h_denominator)]
    NonPositiveDenominator(Box<BellResult>),

    #[error("no start reached a point with denominator >= {den_min}")]
    NoFeasiblePoint { den_min: f64 },

    #[error("empty search range [{lo}, {hi}]")]
    EmptyRange { lo: f64, hi: f64 },

    #[error("energy {energy} GeV outside the positivity domain [0, {limit}]")]
    OutOfDomain { energy: f64, limit: f64 },

    #[error("distance conversion needs a positive energy")]
    ZeroEnergy,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
