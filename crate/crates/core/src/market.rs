//! Returns, wealth processes, stochastic exponentials, supermartingale
//! deflators, power-utility evaluation, and the log-volatility market's
//! auxiliary transform.
//!
//! Wealth always uses the log-Euler (exact stochastic-exponential) step, so
//! it stays strictly positive; with p < 0 the utility explodes as wealth
//! approaches zero, which direct Euler occasionally triggers.

use crate::error::{EngineError, Result};
use crate::estimate::{collect_paths, MCEstimate};
use crate::grid::Grid;
use crate::noise::{sample_noise, NoiseBundle};
use crate::params::{ModelKind, ModelParams};
use crate::paths::{KernelOp, ProcessPath};
use std::sync::Arc;

/// Per-step market state fed to strategy rules.
#[derive(Debug, Clone, Copy)]
pub struct StepState {
    /// Market price of risk at the step's left node.
    pub drift: f64,
    /// Log-volatility at the left node (0 in unit-volatility markets).
    pub log_vol: f64,
}

/// A proportional investment rule `(t, state) -> pi_t`.
#[derive(Clone)]
pub struct StrategySpec {
    rule: Arc<dyn Fn(f64, StepState) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for StrategySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("StrategySpec(..)")
    }
}

impl StrategySpec {
    pub fn new(rule: impl Fn(f64, StepState) -> f64 + Send + Sync + 'static) -> Self {
        Self { rule: Arc::new(rule) }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c)
    }

    /// Myopic rule `pi = drift / (1 - p)`, optionally rescaled.
    pub fn myopic(p: f64, scale: f64) -> Self {
        Self::new(move |_, st| scale * st.drift / (1.0 - p))
    }

    /// Merton proportion for a constant drift.
    pub fn merton(mu: f64, p: f64) -> Self {
        Self::constant(mu / (1.0 - p))
    }

    #[inline]
    pub fn proportion(&self, t: f64, state: StepState) -> f64 {
        (self.rule)(t, state)
    }

    /// Pointwise sum with another rule (used for perturbation tests).
    pub fn plus(&self, other: &StrategySpec, weight: f64) -> Self {
        let a = self.clone();
        let b = other.clone();
        Self::new(move |t, st| a.proportion(t, st) + weight * b.proportion(t, st))
    }
}

/// Wealth-invariant transform into the auxiliary market: `pi -> pi e^{sigma}`.
pub fn model2_transform(strategy: &StrategySpec) -> StrategySpec {
    let inner = strategy.clone();
    StrategySpec::new(move |t, st| inner.proportion(t, st) * st.log_vol.exp())
}

/// A simulated market: returns plus the state paths strategies read.
#[derive(Debug, Clone)]
pub struct MarketPath {
    pub returns: ProcessPath,
    pub drift: ProcessPath,
    /// Log-volatility path strategies may read (auxiliary markets keep it
    /// even though their returns have unit volatility).
    pub log_vol: Option<ProcessPath>,
    /// False only for the raw log-volatility market, whose returns carry
    /// `e^{sigma}` volatility.
    pub unit_vol: bool,
}

impl MarketPath {
    fn state(&self, k: usize) -> StepState {
        StepState {
            drift: self.drift.values[k],
            log_vol: self.log_vol.as_ref().map_or(0.0, |s| s.values[k]),
        }
    }

    /// Quadratic variation of the returns per unit time at step k.
    fn qv(&self, k: usize) -> f64 {
        if self.unit_vol {
            1.0
        } else {
            (2.0 * self.log_vol.as_ref().expect("raw market has log-vol").values[k]).exp()
        }
    }
}

/// Euler accumulation of `dR = drift dt + dM`, unit volatility.
pub fn return_path(drift: &ProcessPath, noise: &NoiseBundle, rho: f64) -> Result<ProcessPath> {
    if !drift.grid.same_as(&noise.grid) {
        return Err(EngineError::GridMismatch);
    }
    let dt = drift.grid.dt();
    let n = drift.grid.n_pos();
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for k in 0..n {
        acc += drift.values[k] * dt + noise.dm(k, rho);
        values.push(acc);
    }
    Ok(ProcessPath::new(values, Arc::clone(&drift.grid)))
}

/// Raw log-volatility market `dR = mu dt + e^{sigma} dM` (kept for the
/// wealth-invariance check against the auxiliary market).
pub fn return_path_with_vol(
    mu: f64,
    log_vol: &ProcessPath,
    noise: &NoiseBundle,
    rho: f64,
) -> Result<ProcessPath> {
    if !log_vol.grid.same_as(&noise.grid) {
        return Err(EngineError::GridMismatch);
    }
    let dt = log_vol.grid.dt();
    let n = log_vol.grid.n_pos();
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for k in 0..n {
        acc += mu * dt + log_vol.values[k].exp() * noise.dm(k, rho);
        values.push(acc);
    }
    Ok(ProcessPath::new(values, Arc::clone(&log_vol.grid)))
}

/// Wealth `x0 * E(int pi dR)` in log-Euler form:
/// `X_{k+1} = X_k exp(pi dR - pi^2 qv dt / 2)`; strictly positive.
pub fn wealth_path(strategy: &StrategySpec, market: &MarketPath, x0: f64) -> ProcessPath {
    debug_assert!(x0 > 0.0);
    let grid = &market.returns.grid;
    let dt = grid.dt();
    let n = grid.n_pos();
    let mut values = Vec::with_capacity(n + 1);
    let mut log_x = x0.ln();
    values.push(x0);
    for k in 0..n {
        let pi = strategy.proportion(grid.node(k), market.state(k));
        let dr = market.returns.values[k + 1] - market.returns.values[k];
        log_x += pi * dr - 0.5 * pi * pi * market.qv(k) * dt;
        values.push(log_x.exp());
    }
    ProcessPath::new(values, Arc::clone(grid))
}

/// Supermartingale deflator `Z = E(-drift . M)`:
/// `Z_{k+1} = Z_k exp(-drift dM - drift^2 dt / 2)`; Z_0 = 1, Z > 0.
pub fn deflator_path(drift: &ProcessPath, noise: &NoiseBundle, rho: f64) -> Result<ProcessPath> {
    if !drift.grid.same_as(&noise.grid) {
        return Err(EngineError::GridMismatch);
    }
    let dt = drift.grid.dt();
    let n = drift.grid.n_pos();
    let mut values = Vec::with_capacity(n + 1);
    let mut log_z = 0.0;
    values.push(1.0);
    for k in 0..n {
        let lam = drift.values[k];
        log_z += -lam * noise.dm(k, rho) - 0.5 * lam * lam * dt;
        values.push(log_z.exp());
    }
    Ok(ProcessPath::new(values, Arc::clone(&drift.grid)))
}

/// Direction process for the Model 2 sensitivity: the H-derivative of
/// `e^{-sigma}` is `-e^{-sigma} Dlambda` pointwise.
pub fn dvol_process(log_vol: &ProcessPath, dlambda: &ProcessPath) -> Result<ProcessPath> {
    log_vol.check_same_grid(dlambda)?;
    let values = log_vol
        .values
        .iter()
        .zip(&dlambda.values)
        .map(|(s, d)| -(-s).exp() * d)
        .collect();
    Ok(ProcessPath::new(values, Arc::clone(&log_vol.grid)))
}

/// One market model bound to a grid, with the kernel operator prebuilt so
/// path generation inside MC loops is matrix-vector work only.
#[derive(Debug)]
pub struct ModelSim {
    pub params: ModelParams,
    pub grid: Arc<Grid>,
    kernel_op: Option<KernelOp>,
}

impl ModelSim {
    pub fn new(params: ModelParams, grid: Arc<Grid>) -> Self {
        let needs_op = !matches!(params.model, ModelKind::ConstantDrift(_));
        let kernel_op = needs_op.then(|| KernelOp::fbm(&grid, params.hurst));
        Self { params, grid, kernel_op }
    }

    /// The fOU factor path (drift for Model 1, log-vol for Model 2).
    pub fn factor(&self, noise: &NoiseBundle) -> Option<ProcessPath> {
        self.kernel_op.as_ref().map(|op| {
            crate::paths::ou_convolution(&op.sample(noise), self.params.alpha, self.params.initial_level)
        })
    }

    /// The unit-volatility market this model is priced in (the auxiliary
    /// market for Model 2).
    pub fn market(&self, noise: &NoiseBundle) -> Result<MarketPath> {
        match self.params.model {
            ModelKind::ConstantDrift(mu) => {
                let drift = ProcessPath::new(
                    vec![mu; self.grid.n_pos() + 1],
                    Arc::clone(&self.grid),
                );
                let returns = return_path(&drift, noise, self.params.rho)?;
                Ok(MarketPath { returns, drift, log_vol: None, unit_vol: true })
            }
            ModelKind::Model1 => {
                let drift = self.factor(noise).expect("model 1 has a factor");
                let returns = return_path(&drift, noise, self.params.rho)?;
                Ok(MarketPath { returns, drift, log_vol: None, unit_vol: true })
            }
            ModelKind::Model2 => {
                let sigma = self.factor(noise).expect("model 2 has a factor");
                let drift = ProcessPath::new(
                    sigma.values.iter().map(|s| (-s).exp()).collect(),
                    Arc::clone(&self.grid),
                );
                let returns = return_path(&drift, noise, self.params.rho)?;
                Ok(MarketPath { returns, drift, log_vol: Some(sigma), unit_vol: true })
            }
        }
    }

    /// Effective strategy in the unit-volatility market. For Model 2 the
    /// given rule is read as an original-market strategy and transformed.
    pub fn effective_strategy(&self, strategy: &StrategySpec) -> StrategySpec {
        match self.params.model {
            ModelKind::Model2 => model2_transform(strategy),
            _ => strategy.clone(),
        }
    }

    /// Terminal utility `U(X_T) = X_T^p / p` of one path.
    pub fn utility(&self, strategy: &StrategySpec, noise: &NoiseBundle) -> Result<f64> {
        let market = self.market(noise)?;
        let wealth = wealth_path(strategy, &market, 1.0);
        Ok(wealth.terminal().powf(self.params.p) / self.params.p)
    }
}

/// Monte Carlo lower bound `E[U(X_T^pi)]` for a fixed strategy; always
/// negative for p < 0.
pub fn estimate_value(
    strategy: &StrategySpec,
    params: &ModelParams,
    grid: &Arc<Grid>,
    n_paths: u64,
    seed: u64,
) -> Result<MCEstimate> {
    let sim = ModelSim::new(*params, Arc::clone(grid));
    let effective = sim.effective_strategy(strategy);
    let samples = collect_paths(n_paths, |i| {
        sim.utility(&effective, &sample_noise(grid, seed, i))
            .expect("grids are consistent by construction")
    });
    if let Some(idx) = samples.iter().position(|u| !u.is_finite()) {
        return Err(EngineError::NonFiniteSample { path_index: idx as u64, seed });
    }
    Ok(MCEstimate::from_samples(&samples, seed))
}
