use thiserror::Error;

/// Errors raised by the solvers and checkers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("v_L ({v_low}) must be strictly below v_H ({v_high})")]
    Ordering { v_low: f64, v_high: f64 },

    #[error("{name} must be a positive finite number, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("quality cap {cap} is below 1/c = {min}")]
    CapTooSmall { cap: f64, min: f64 },

    #[error("{what} = {value} lies outside [0, 1]")]
    Domain { what: &'static str, value: f64 },

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("no admissible root of {equation} in [{lo}, {hi}]")]
    NoRoot {
        equation: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("closed-form and envelope transfers differ by {gap:e} at theta = {theta}")]
    Consistency { theta: f64, gap: f64 },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("grid size {got} is below the minimum of {min}")]
    GridTooSmall { got: usize, min: usize },

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error("malformed schedule: {0}")]
    Schedule(String),
}

pub type Result<T> = std::result::Result<T, Error>;
