//! Model parameters shared across the engine.

use crate::error::{EngineError, Result};
use crate::kernel::HurstParam;

/// Which drift/volatility structure the market carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    /// Fractional OU market price of risk, unit volatility.
    Model1,
    /// Fractional OU log-volatility; priced through its auxiliary market
    /// with drift `e^{-sigma} mu` (mu = 1) and unit volatility.
    Model2,
    /// Deterministic constant market price of risk.
    ConstantDrift(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub hurst: HurstParam,
    /// Mean-reversion rate of the fOU factor (1/time).
    pub alpha: f64,
    /// Initial level of the fOU factor (drift for Model 1, log-vol for Model 2).
    pub initial_level: f64,
    /// Correlation between the factor driver W and the return martingale.
    pub rho: f64,
    /// Risk aversion, strictly negative.
    pub p: f64,
    pub horizon: f64,
    pub model: ModelKind,
}

impl ModelParams {
    pub fn new(
        hurst: HurstParam,
        alpha: f64,
        initial_level: f64,
        rho: f64,
        p: f64,
        horizon: f64,
        model: ModelKind,
    ) -> Result<Self> {
        if !(p < 0.0) {
            return Err(EngineError::InvalidParam {
                name: "p",
                reason: format!("risk aversion must be < 0, got {p}"),
            });
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(EngineError::InvalidParam {
                name: "rho",
                reason: format!("correlation must lie in (0, 1], got {rho}"),
            });
        }
        if !(alpha >= 0.0) {
            return Err(EngineError::InvalidParam {
                name: "alpha",
                reason: format!("mean reversion must be >= 0, got {alpha}"),
            });
        }
        if !(horizon > 0.0) {
            return Err(EngineError::InvalidParam {
                name: "horizon",
                reason: format!("must be > 0, got {horizon}"),
            });
        }
        Ok(Self { hurst, alpha, initial_level, rho, p, horizon, model })
    }

    /// Conjugate exponent `q = p / (1 - p)`, in (-1, 0).
    pub fn q(&self) -> f64 {
        self.p / (1.0 - self.p)
    }
}
