use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at index {index} in {what}")]
    NonFinite { what: &'static str, index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("time interval must be positive (t_to - t_from = {0})")]
    NonPositiveInterval(f64),

    #[error("degenerate field: every point has density below the floor {floor:e}")]
    DegenerateField { floor: f64 },

    #[error("caustic: sin(omega * dt) = {sin:e} vanishes at omega * dt = {phase}")]
    Caustic { phase: f64, sin: f64 },

    #[error("trace too short: need at least {needed} snapshots, have {have}")]
    TraceTooShort { needed: usize, have: usize },

    #[error("position {x} lies in a masked (node) region")]
    MaskedPoint { x: f64 },

    #[error("position {x} lies outside the usable domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("too few samples in window: {count} < {needed}")]
    InsufficientSamples { count: usize, needed: usize },

    #[error("vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
