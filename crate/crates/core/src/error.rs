use thiserror::Error;

/// Errors raised by the bound, pricing and detection engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no martingale drift exists: alpha^2 = {alpha_sq} < (beta + 1)^2 = {shifted_beta_sq}")]
    NoMartingaleDrift { alpha_sq: f64, shifted_beta_sq: f64 },

    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("infeasible constraint: {0}")]
    InfeasibleConstraint(String),

    /// A traded price lies outside the single-derivative no-arbitrage interval.
    #[error("price {price} of derivative {index} lies outside its no-arbitrage interval [{lower}, {upper}]")]
    InfeasiblePrice {
        index: usize,
        price: f64,
        lower: f64,
        upper: f64,
    },

    #[error("target {theta} outside the attainable range [{low}, {high}]")]
    OutOfRange { theta: f64, low: f64, high: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("market spec error at {location}: {message}")]
    Spec { location: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
