use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular denominator tau - u1*xi1 at x2 = {x2}")]
    SingularDenominator { x2: f64 },

    #[error("start latitude {x2} lies in the forbidden region (V = {value})")]
    ForbiddenRegion { x2: f64, value: f64 },

    #[error("bracket is not periodic: {0}")]
    NotPeriodic(String),

    #[error("insufficient tail for asymptotic fit: {0}")]
    InsufficientTail(String),

    #[error("xi1^2 = {xi1_sq} is below the threshold N = {n}")]
    BelowThreshold { xi1_sq: f64, n: f64 },

    #[error("seed outside the admissible window: {0}")]
    OutOfWindow(String),

    #[error("no turning points for xi1 = {xi1}: {reason}")]
    NoTurningPoints { xi1: f64, reason: String },

    #[error("energy {h} is at or below the bottom of the well {min}")]
    BelowWell { h: f64, min: f64 },

    #[error("potential has {count} turning points at energy {h}; single well required")]
    MultiWell { h: f64, count: usize },

    #[error("cubic has complex roots (discriminant {discriminant})")]
    ComplexRoots { discriminant: f64 },

    #[error("pathological trajectory class: {0}")]
    Pathological(String),

    #[error("sampling box touches xi1 = 0")]
    BoxTouchesZeroXi1,

    #[error("no root found: {0}")]
    NoRoot(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
