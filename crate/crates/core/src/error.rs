//! Error type shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("hurst parameter must lie in the open interval (0, 1), got {0}")]
    InvalidHurst(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("kernel H-derivative is singular at s = {s} (t = {t}); quadrature nodes must avoid s = 0 and s = t")]
    SingularPoint { t: f64, s: f64 },

    #[error("beta-norm requires beta > max(1, 1 - p); got beta = {beta} with p = {p} (need beta > {min})")]
    BetaConstraint { beta: f64, p: f64, min: f64 },

    #[error("process grids do not match (operands were built on different grids)")]
    GridMismatch,

    #[error("covariance factorization failed at pivot {pivot}; matrix is numerically indefinite, retry with diagonal jitter of about {suggested_jitter:e}")]
    Factorization { pivot: usize, suggested_jitter: f64 },

    #[error("non-finite utility sample on path {path_index} (seed {seed}); inspect that path's inputs")]
    NonFiniteSample { path_index: u64, seed: u64 },

    #[error("Riccati solution exceeded the overflow guard at step {step} (|C| > {guard:e}); use a shorter horizon")]
    RiccatiBlowUp { step: usize, guard: f64 },

    #[error("tilted weights need a strictly negative value estimate, got u = {0}")]
    NonNegativeValue(f64),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
