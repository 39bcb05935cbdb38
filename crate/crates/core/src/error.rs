use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no-arbitrage condition 0 < d < e^(r dt) < u violated (d={d}, growth={growth}, u={u})")]
    Arbitrage { d: f64, growth: f64, u: f64 },

    #[error("real-world up-probability {p_tilde} is outside (0, 1)")]
    ProbabilityOutOfRange { p_tilde: f64 },

    #[error("maturity {maturity} years times {steps_per_year} steps/year is not an integer step count")]
    NonIntegralSteps { maturity: f64, steps_per_year: u32 },

    #[error("node index out of range: step {step}, up-moves {ups}, horizon {horizon}")]
    IndexOutOfRange { step: usize, ups: usize, horizon: usize },

    #[error("invalid surrender schedule: {0}")]
    InvalidSchedule(String),

    #[error("{what} needs {steps} steps, above the enumeration limit of {limit}")]
    EnumerationLimit { what: &'static str, steps: usize, limit: usize },

    #[error("invalid fee bracket: {0}")]
    InvalidBracket(String),

    #[error("bisection did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("outcome distribution is empty or its probabilities do not sum to one")]
    InvalidDistribution,

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
