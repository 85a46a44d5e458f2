use thiserror::Error;

use crate::spectroscopy::Transition;

/// Errors raised by the rotocool library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid species field `{field}`: {reason}")]
    InvalidSpecies { field: &'static str, reason: String },

    #[error("2J_max = {two_j_max} incompatible with 2Ω = {two_omega}: {reason}")]
    Parity {
        two_j_max: i32,
        two_omega: i32,
        reason: &'static str,
    },

    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),

    #[error("{}transition {transition} cannot be tuned to λ_c = {lambda_c:e} m", step.map(|s| format!("step {s}: ")).unwrap_or_default())]
    InfeasibleTransition {
        step: Option<usize>,
        transition: Transition,
        lambda_c: f64,
    },

    #[error("step {step}: tuning field {field:e} V/m exceeds limit {limit:e} V/m")]
    ExceedsFieldLimit { step: usize, field: f64, limit: f64 },

    #[error("state {0} of the plan is missing from the initial population")]
    StateSpaceMismatch(String),

    #[error("config error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
