//! Markovian base-case solver: the backward Riccati system for the
//! power-utility value function under an OU market price of risk, the
//! optimal feedback rule, and the tilted-measure weights.
//!
//! For `d lambda = -alpha (lambda - theta) dt + sigma_l dW`,
//! `dR = lambda dt + dM`, `corr(dW, dM) = rho`, the exponent ansatz
//! `u(t, x, lambda) = (x^p / p) exp(A + B lambda + C lambda^2 / 2)` reduces
//! the HJB equation to
//!
//!   C' = -p (1 + rho sigma_l C)^2 / (1-p) + 2 alpha C - sigma_l^2 C^2
//!   B' = -p rho sigma_l B (1 + rho sigma_l C) / (1-p) + alpha B
//!        - alpha theta C - sigma_l^2 B C
//!   A' = -p rho^2 sigma_l^2 B^2 / (2 (1-p)) - alpha theta B
//!        - sigma_l^2 (B^2 + C) / 2
//!
//! with terminal conditions A(T) = B(T) = C(T) = 0 and optimal feedback
//! `pi(t, lambda) = (lambda + rho sigma_l (B + C lambda)) / (1 - p)`.
//! The coefficients are not taken on faith: the Monte Carlo validation suite
//! gates them against `estimate_value` under the derived feedback rule.

use crate::error::{EngineError, Result};
use crate::market::StrategySpec;
use crate::params::{ModelKind, ModelParams};
use std::sync::Arc;

const BLOW_UP_GUARD: f64 = 1e8;

/// Inputs to the Riccati system. `theta` (mean level) and `lambda_vol` are
/// generalizations used by sensitivity oracles; the base market has
/// `theta = 0`, `lambda_vol = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiParams {
    pub alpha: f64,
    pub theta: f64,
    pub rho: f64,
    pub p: f64,
    pub horizon: f64,
    pub lambda_vol: f64,
}

impl RiccatiParams {
    pub fn from_model(params: &ModelParams) -> Result<Self> {
        match params.model {
            ModelKind::Model1 if params.hurst.is_half() => Ok(Self {
                alpha: params.alpha,
                theta: 0.0,
                rho: params.rho,
                p: params.p,
                horizon: params.horizon,
                lambda_vol: 1.0,
            }),
            ModelKind::Model1 => Err(EngineError::Unsupported(format!(
                "the Riccati base case requires H = 1/2 exactly, got {}",
                params.hurst.value()
            ))),
            _ => Err(EngineError::Unsupported(
                "the Riccati base case applies to the OU-drift model only".into(),
            )),
        }
    }
}

/// Backward solution of the three scalar coefficient ODEs on a uniform grid.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub params: RiccatiParams,
    /// Node times 0 = t_0 < ... < t_n = T.
    pub times: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

fn derivatives(rp: &RiccatiParams, y: [f64; 3]) -> [f64; 3] {
    let [_, b, c] = y;
    let q_factor = -rp.p / (1.0 - rp.p);
    let sv = rp.lambda_vol;
    let rc = 1.0 + rp.rho * sv * c;
    let c_dot = q_factor * rc * rc + 2.0 * rp.alpha * c - sv * sv * c * c;
    let b_dot = q_factor * rp.rho * sv * b * rc + rp.alpha * b
        - rp.alpha * rp.theta * c
        - sv * sv * b * c;
    let a_dot = q_factor * rp.rho * rp.rho * sv * sv * b * b / 2.0
        - rp.alpha * rp.theta * b
        - sv * sv * (b * b + c) / 2.0;
    [a_dot, b_dot, c_dot]
}

/// Fixed-step RK4 backward from the terminal zeros.
pub fn solve_riccati_raw(rp: &RiccatiParams, n_steps: usize) -> Result<RiccatiSolution> {
    if n_steps < 1 {
        return Err(EngineError::InvalidParam {
            name: "n_steps",
            reason: "need at least one step".into(),
        });
    }
    if !(rp.p < 0.0) {
        return Err(EngineError::InvalidParam {
            name: "p",
            reason: format!("risk aversion must be < 0, got {}", rp.p),
        });
    }
    let n = n_steps;
    let dt = rp.horizon / n as f64;
    let mut a = vec![0.0; n + 1];
    let mut b = vec![0.0; n + 1];
    let mut c = vec![0.0; n + 1];
    let mut y = [0.0_f64; 3];
    for k in (0..n).rev() {
        let h = -dt;
        let k1 = derivatives(rp, y);
        let k2 = derivatives(rp, add(y, scale(k1, 0.5 * h)));
        let k3 = derivatives(rp, add(y, scale(k2, 0.5 * h)));
        let k4 = derivatives(rp, add(y, scale(k3, h)));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !y.iter().all(|v| v.is_finite()) || y[2].abs() > BLOW_UP_GUARD {
            return Err(EngineError::RiccatiBlowUp { step: k, guard: BLOW_UP_GUARD });
        }
        a[k] = y[0];
        b[k] = y[1];
        c[k] = y[2];
    }
    let times = (0..=n).map(|k| k as f64 * dt).collect();
    Ok(RiccatiSolution { params: *rp, times, a, b, c })
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Base-case solver for the model parameters (H = 1/2, OU drift).
pub fn solve_riccati(params: &ModelParams, n_steps: usize) -> Result<RiccatiSolution> {
    solve_riccati_raw(&RiccatiParams::from_model(params)?, n_steps)
}

impl RiccatiSolution {
    /// Linear interpolation of (A, B, C) at an arbitrary time.
    pub fn coefficients_at(&self, t: f64) -> (f64, f64, f64) {
        let n = self.times.len() - 1;
        let dt = self.params.horizon / n as f64;
        let pos = (t / dt).clamp(0.0, n as f64);
        let k = (pos.floor() as usize).min(n - 1);
        let w = pos - k as f64;
        (
            self.a[k] + w * (self.a[k + 1] - self.a[k]),
            self.b[k] + w * (self.b[k + 1] - self.b[k]),
            self.c[k] + w * (self.c[k + 1] - self.c[k]),
        )
    }
}

/// Value of the solved problem at unit capital:
/// `u = (1/p) exp(A(0) + B(0) l0 + C(0) l0^2 / 2)`; strictly negative.
pub fn value_ko(sol: &RiccatiSolution, lambda0: f64) -> f64 {
    let expo = sol.a[0] + sol.b[0] * lambda0 + 0.5 * sol.c[0] * lambda0 * lambda0;
    expo.exp() / sol.params.p
}

/// Optimal feedback rule derived together with the Riccati system.
pub fn strategy_ko(sol: &RiccatiSolution) -> StrategySpec {
    let sol = Arc::new(sol.clone());
    let p = sol.params.p;
    let rho_sv = sol.params.rho * sol.params.lambda_vol;
    StrategySpec::new(move |t, st| {
        let (_, b, c) = sol.coefficients_at(t);
        (st.drift + rho_sv * (b + c * st.drift)) / (1.0 - p)
    })
}

/// Tilted-measure weights `w_i = U(X_i) / u = X_i^p / (p u)`; positive, mean
/// close to one when `u` is consistent with the sampled strategy.
pub fn tilted_weights(terminal_wealth: &[f64], u: f64, p: f64) -> Result<Vec<f64>> {
    if !(u < 0.0) {
        return Err(EngineError::NonNegativeValue(u));
    }
    Ok(terminal_wealth
        .iter()
        .map(|x| x.powf(p) / (p * u))
        .collect())
}

/// Closed-form complete-market value for a deterministic constant drift:
/// `(1/p) exp(q mu^2 T / 2)` with `q = p / (1-p)`. This is also the Merton
/// value `(1/p) exp(p mu^2 T / (2 (1-p)))`.
pub fn complete_market_value(mu: f64, p: f64, horizon: f64) -> f64 {
    let q = p / (1.0 - p);
    (q * mu * mu * horizon / 2.0).exp() / p
}
