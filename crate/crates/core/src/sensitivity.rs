//! Sensitivity estimators for the value function: drift-direction (Gateaux)
//! derivatives under the tilted measure, the Hurst-parameter derivative and
//! first-order expansion around the Markovian point, strong-mean-reversion
//! asymptotics, and the estimated suboptimality bound.
//!
//! Every estimator here runs base and perturbed markets on common noise
//! bundles, so differences of estimates subtract out path noise; that is
//! what makes the o(eps) residual tests resolvable at desk-scale path
//! counts.

use crate::error::{EngineError, Result};
use crate::estimate::{collect_paths, MCEstimate};
use crate::grid::Grid;
use crate::kim_omberg::{complete_market_value, solve_riccati, strategy_ko, value_ko};
use crate::market::{MarketPath, ModelSim, StepState, StrategySpec};
use crate::noise::{sample_noise, NoiseBundle};
use crate::params::{ModelKind, ModelParams};
use crate::paths::{
    dlambda_from_derivative_driver, norm_beta_from_integrals, ou_convolution, HurstDerivativeForm,
    KernelOp, ProcessPath,
};
use std::sync::Arc;

/// A Markovian base problem whose optimizer and value are available in
/// closed-or-ODE form: the OU-drift model at H = 1/2, or a constant drift.
/// Other models are admitted with an externally supplied near-optimal
/// strategy and value.
#[derive(Debug)]
pub struct MarkovBase {
    pub params: ModelParams,
    pub grid: Arc<Grid>,
    /// Best available value of the base problem (negative).
    pub value: f64,
    /// Base-optimal strategy the tilted measure is built from.
    pub strategy: StrategySpec,
}

impl MarkovBase {
    pub fn new(params: &ModelParams, grid: &Arc<Grid>, n_riccati: usize) -> Result<Self> {
        match params.model {
            ModelKind::Model1 => {
                let sol = solve_riccati(params, n_riccati)?;
                Ok(Self {
                    params: *params,
                    grid: Arc::clone(grid),
                    value: value_ko(&sol, params.initial_level),
                    strategy: strategy_ko(&sol),
                })
            }
            ModelKind::ConstantDrift(mu) => Ok(Self {
                params: *params,
                grid: Arc::clone(grid),
                value: complete_market_value(mu, params.p, params.horizon),
                strategy: StrategySpec::merton(mu, params.p),
            }),
            ModelKind::Model2 => Err(EngineError::Unsupported(
                "the log-volatility model has no built-in base optimizer; use with_supplied_base".into(),
            )),
        }
    }

    /// Admit any model with caller-provided base value and strategy.
    pub fn with_supplied_base(
        params: &ModelParams,
        grid: &Arc<Grid>,
        value: f64,
        strategy: StrategySpec,
    ) -> Result<Self> {
        if !(value < 0.0) {
            return Err(EngineError::NonNegativeValue(value));
        }
        Ok(Self { params: *params, grid: Arc::clone(grid), value, strategy })
    }
}

/// Terminal wealth of a fixed proportion process (log-Euler, unit vol).
fn terminal_wealth_fixed(pi: &[f64], returns: &ProcessPath, dt: f64) -> f64 {
    let mut log_x = 0.0;
    for (k, p) in pi.iter().enumerate() {
        let dr = returns.values[k + 1] - returns.values[k];
        log_x += p * dr - 0.5 * p * p * dt;
    }
    log_x.exp()
}

/// Proportions the base strategy takes along a market path.
fn proportions(strategy: &StrategySpec, market: &MarketPath) -> Vec<f64> {
    let grid = &market.returns.grid;
    (0..grid.n_pos())
        .map(|k| {
            strategy.proportion(
                grid.node(k),
                StepState {
                    drift: market.drift.values[k],
                    log_vol: market.log_vol.as_ref().map_or(0.0, |s| s.values[k]),
                },
            )
        })
        .collect()
}

/// Gateaux derivative of the value function in a drift direction:
/// `p u E[ (dP~/dP) int direction dR ]`, with the tilted density realized as
/// per-path weights `U(X_T)/u` and the integral discretized against the base
/// returns. The direction is generated on the same bundle as the base path.
pub fn gateaux_derivative<D>(
    base: &MarkovBase,
    direction: D,
    n_paths: u64,
    seed: u64,
) -> Result<MCEstimate>
where
    D: Fn(&NoiseBundle) -> ProcessPath + Sync,
{
    let sim = ModelSim::new(base.params, Arc::clone(&base.grid));
    let effective = sim.effective_strategy(&base.strategy);
    let p = base.params.p;
    let u = base.value;
    let dt = base.grid.dt();

    let samples: Vec<Result<f64>> = collect_paths(n_paths, |i| {
        let noise = sample_noise(&base.grid, seed, i);
        let market = sim.market(&noise)?;
        let dir = direction(&noise);
        dir.check_same_grid(&market.returns)?;
        let pi = proportions(&effective, &market);
        let x_t = terminal_wealth_fixed(&pi, &market.returns, dt);
        let weight = x_t.powf(p) / (p * u);
        let mut g = 0.0;
        for k in 0..base.grid.n_pos() {
            g += dir.values[k] * (market.returns.values[k + 1] - market.returns.values[k]);
        }
        Ok(p * u * weight * g)
    });
    let samples: Vec<f64> = samples.into_iter().collect::<Result<_>>()?;
    Ok(MCEstimate::from_samples(&samples, seed))
}

fn hurst_direction(
    base: &MarkovBase,
    form: HurstDerivativeForm,
) -> impl Fn(&NoiseBundle) -> ProcessPath + Sync + '_ {
    let dop = KernelOp::fbm_hurst_derivative(&base.grid, base.params.hurst);
    let alpha = base.params.alpha;
    let is_logvol = matches!(base.params.model, ModelKind::Model2);
    let fbm_op = is_logvol.then(|| KernelOp::fbm(&base.grid, base.params.hurst));
    let x0 = base.params.initial_level;
    move |noise: &NoiseBundle| {
        let dl = dlambda_from_derivative_driver(&dop.sample(noise), alpha, form);
        match &fbm_op {
            None => dl,
            Some(op) => {
                let sigma = ou_convolution(&op.sample(noise), alpha, x0);
                crate::market::dvol_process(&sigma, &dl).expect("same bundle, same grid")
            }
        }
    }
}

/// Hurst derivative of the value function at a Markovian base: the Gateaux
/// estimator along the drift's H-derivative process (for the log-volatility
/// model, along `-e^{-sigma} Dlambda`).
pub fn hurst_derivative_with_base(
    base: &MarkovBase,
    form: HurstDerivativeForm,
    n_paths: u64,
    seed: u64,
) -> Result<MCEstimate> {
    gateaux_derivative(base, hurst_direction(base, form), n_paths, seed)
}

/// [`hurst_derivative_with_base`] with the base problem solved internally
/// (OU drift at H = 1/2 or constant drift).
pub fn hurst_derivative(
    params: &ModelParams,
    grid: &Arc<Grid>,
    n_riccati: usize,
    n_paths: u64,
    seed: u64,
) -> Result<MCEstimate> {
    let base = MarkovBase::new(params, grid, n_riccati)?;
    hurst_derivative_with_base(&base, HurstDerivativeForm::Full, n_paths, seed)
}

/// One row of the first-order-in-H expansion table.
#[derive(Debug, Clone)]
pub struct ExpansionRow {
    pub eps: f64,
    /// Value of the base-optimal strategy evaluated in the H = 1/2 + eps
    /// market (an O(eps^2)-suboptimal stand-in for the true value there).
    pub direct: MCEstimate,
    /// `base + eps * derivative`.
    pub expansion: f64,
    pub residual: f64,
    pub residual_se: f64,
}

impl ExpansionRow {
    pub fn ratio(&self) -> f64 {
        self.residual / self.eps.abs()
    }

    pub fn ratio_se(&self) -> f64 {
        self.residual_se / self.eps.abs()
    }
}

/// First-order expansion report around the Markovian point.
#[derive(Debug, Clone)]
pub struct ExpansionReport {
    /// MC value of the base strategy in the base market on the common
    /// bundles (so the eps = 0 residual vanishes by construction).
    pub base: MCEstimate,
    pub derivative: MCEstimate,
    /// ODE value of the base problem, for cross-reference.
    pub markov_value: f64,
    /// Sorted by eps.
    pub rows: Vec<ExpansionRow>,
}

impl ExpansionReport {
    /// (|eps|, residual/|eps|, se) ladder for one sign, largest |eps| first.
    pub fn ratio_ladder(&self, positive: bool) -> Vec<(f64, f64, f64)> {
        let mut lad: Vec<(f64, f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.eps != 0.0 && (r.eps > 0.0) == positive)
            .map(|r| (r.eps.abs(), r.ratio(), r.ratio_se()))
            .collect();
        lad.sort_by(|a, b| b.0.total_cmp(&a.0));
        lad
    }
}

/// Expansion of the value in the Hurst parameter at H = 1/2: base value and
/// derivative from the Markovian solution, direct values from the base
/// strategy transplanted (as a process, on common noise) into each perturbed
/// market.
pub fn hurst_expansion(
    params: &ModelParams,
    grid: &Arc<Grid>,
    eps_list: &[f64],
    n_riccati: usize,
    n_paths: u64,
    seed: u64,
) -> Result<ExpansionReport> {
    if !matches!(params.model, ModelKind::Model1) || !params.hurst.is_half() {
        return Err(EngineError::Unsupported(
            "the Hurst expansion is built around the OU-drift model at H = 1/2".into(),
        ));
    }
    for &e in eps_list {
        params.hurst.shifted(e)?;
    }
    let base = MarkovBase::new(params, grid, n_riccati)?;
    let alpha = params.alpha;
    let x0 = params.initial_level;
    let rho = params.rho;
    let p = params.p;
    let dt = grid.dt();
    let u = base.value;

    let base_op = KernelOp::fbm(grid, params.hurst);
    let deriv_op = KernelOp::fbm_hurst_derivative(grid, params.hurst);
    let eps_ops: Vec<(f64, KernelOp)> = eps_list
        .iter()
        .map(|&e| Ok((e, KernelOp::fbm(grid, params.hurst.shifted(e)?))))
        .collect::<Result<_>>()?;

    struct PathOut {
        u0: f64,
        deriv: f64,
        u_eps: Vec<f64>,
    }

    let outs: Vec<PathOut> = collect_paths(n_paths, |i| {
        let noise = sample_noise(grid, seed, i);
        let drift0 = ou_convolution(&base_op.sample(&noise), alpha, x0);
        let returns0 = crate::market::return_path(&drift0, &noise, rho).expect("same grid");
        let pi: Vec<f64> = (0..grid.n_pos())
            .map(|k| {
                base.strategy
                    .proportion(grid.node(k), StepState { drift: drift0.values[k], log_vol: 0.0 })
            })
            .collect();
        let x0_t = terminal_wealth_fixed(&pi, &returns0, dt);
        let u0 = x0_t.powf(p) / p;

        let dl = dlambda_from_derivative_driver(
            &deriv_op.sample(&noise),
            alpha,
            HurstDerivativeForm::Full,
        );
        let mut g = 0.0;
        for k in 0..grid.n_pos() {
            g += dl.values[k] * (returns0.values[k + 1] - returns0.values[k]);
        }
        // p u (U(X)/u) g, written so the value cancels exactly.
        let deriv = x0_t.powf(p) * g;

        let u_eps = eps_ops
            .iter()
            .map(|(_, op)| {
                let drift = ou_convolution(&op.sample(&noise), alpha, x0);
                let returns = crate::market::return_path(&drift, &noise, rho).expect("same grid");
                terminal_wealth_fixed(&pi, &returns, dt).powf(p) / p
            })
            .collect();
        PathOut { u0, deriv, u_eps }
    });

    let u0: Vec<f64> = outs.iter().map(|o| o.u0).collect();
    let deriv: Vec<f64> = outs.iter().map(|o| o.deriv).collect();
    let base_est = MCEstimate::from_samples(&u0, seed);
    let deriv_est = MCEstimate::from_samples(&deriv, seed);

    let mut rows = Vec::with_capacity(eps_list.len());
    for (j, &e) in eps_list.iter().enumerate() {
        let ue: Vec<f64> = outs.iter().map(|o| o.u_eps[j]).collect();
        let direct = MCEstimate::from_samples(&ue, seed);
        let resid: Vec<f64> = outs
            .iter()
            .map(|o| o.u_eps[j] - o.u0 - e * o.deriv)
            .collect();
        let resid_est = MCEstimate::from_samples(&resid, seed);
        rows.push(ExpansionRow {
            eps: e,
            direct,
            expansion: base_est.mean + e * deriv_est.mean,
            residual: resid_est.mean.abs(),
            residual_se: resid_est.stderr,
        });
    }
    rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));

    Ok(ExpansionReport { base: base_est, derivative: deriv_est, markov_value: u, rows })
}

/// One row of the strong-mean-reversion table.
#[derive(Debug, Clone)]
pub struct MeanRevRow {
    pub eps: f64,
    /// Estimated `u^eps - u^0`; a lower bound since `u^eps` is the best of a
    /// myopic candidate family.
    pub gap: MCEstimate,
    pub ratio: f64,
    pub ratio_se: f64,
}

#[derive(Debug, Clone)]
pub struct MeanRevReport {
    pub mu: f64,
    pub delta: f64,
    /// Exact constant-drift limit value.
    pub u0: f64,
    pub rows: Vec<MeanRevRow>,
}

/// Value gap between the fast-mean-reverting drift `mu + nu^eps` (OU rate
/// `1/eps`) and its constant-drift limit, scaled by `eps^delta`.
///
/// `u^eps` is approximated from below by the best of: no investment, the
/// limit Merton proportion, and rescaled myopic rules. The OU factor is
/// stepped with its exact transition (the convolution quadrature is useless
/// at rates of order `1/eps`), using the same W increments as the returns.
pub fn meanrev_gap(
    mu: f64,
    eps_list: &[f64],
    delta: f64,
    rho: f64,
    p: f64,
    grid: &Arc<Grid>,
    n_paths: u64,
    seed: u64,
) -> Result<MeanRevReport> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(EngineError::InvalidParam {
            name: "delta",
            reason: format!("the asymptotic rate needs delta in (0, 1/2), got {delta}"),
        });
    }
    if eps_list.iter().any(|&e| e <= 0.0) {
        return Err(EngineError::InvalidParam {
            name: "eps",
            reason: "mean-reversion scales must be positive".into(),
        });
    }
    let u0 = complete_market_value(mu, p, grid.horizon());
    let candidates: Vec<StrategySpec> = vec![
        StrategySpec::zero(),
        StrategySpec::merton(mu, p),
        StrategySpec::myopic(p, 0.8),
        StrategySpec::myopic(p, 0.9),
        StrategySpec::myopic(p, 1.0),
        StrategySpec::myopic(p, 1.1),
        StrategySpec::myopic(p, 1.2),
    ];
    let dt = grid.dt();
    let n_cand = candidates.len();

    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let rate = 1.0 / eps;
        let decay = (-dt * rate).exp();
        let innov = ((1.0 - decay * decay) * eps / 2.0).sqrt() / dt.sqrt();
        let utilities: Vec<Vec<f64>> = collect_paths(n_paths, |i| {
            let noise = sample_noise(grid, seed, i);
            let n = grid.n_pos();
            let mut drift_vals = Vec::with_capacity(n + 1);
            let mut nu = 0.0;
            drift_vals.push(mu);
            for k in 0..n {
                nu = decay * nu + innov * noise.dw_pos[k];
                drift_vals.push(mu + nu);
            }
            let drift = ProcessPath::new(drift_vals, Arc::clone(grid));
            let returns = crate::market::return_path(&drift, &noise, rho).expect("same grid");
            candidates
                .iter()
                .map(|c| {
                    let pi: Vec<f64> = (0..n)
                        .map(|k| {
                            c.proportion(
                                grid.node(k),
                                StepState { drift: drift.values[k], log_vol: 0.0 },
                            )
                        })
                        .collect();
                    terminal_wealth_fixed(&pi, &returns, dt).powf(p) / p
                })
                .collect()
        });
        let mut best = MCEstimate { mean: f64::NEG_INFINITY, stderr: 0.0, n_paths, seed };
        for c in 0..n_cand {
            let vals: Vec<f64> = utilities.iter().map(|u| u[c]).collect();
            let est = MCEstimate::from_samples(&vals, seed);
            if est.mean > best.mean {
                best = est;
            }
        }
        let gap = MCEstimate {
            mean: best.mean - u0,
            stderr: best.stderr,
            n_paths,
            seed,
        };
        let scale = eps.powf(delta);
        rows.push(MeanRevRow {
            eps,
            gap,
            ratio: gap.mean / scale,
            ratio_se: gap.stderr / scale,
        });
    }
    rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    Ok(MeanRevReport { mu, delta, u0, rows })
}

/// Estimated suboptimality bound for running a base-optimal strategy in a
/// perturbed-drift market, next to the directly measured gap.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// Exponential-moment constant, by Monte Carlo.
    pub c2: MCEstimate,
    /// Empirical per-path cap on `exp(2|p| int |pi| |drift gap| dt)`.
    pub k_max: f64,
    /// `E^{1/2} [ (int |pi| |drift gap| dt)^2 ]`.
    pub quad_term: MCEstimate,
    /// Fitted value-continuity constant.
    pub c1_fitted: f64,
    /// Beta-norm of the drift difference.
    pub norm_diff: MCEstimate,
    /// `c2 * k_max * quad + c1 * norm`; labeled an estimated bound.
    pub bound: MCEstimate,
    /// Best-available alternative value minus the strategy's MC value there.
    pub direct_gap: MCEstimate,
    /// False when a C2 sample was non-finite or the cap exceeded its ceiling.
    pub applicable: bool,
}

/// Inputs for [`suboptimality_bound`] beyond the two drift generators.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub strategy: StrategySpec,
    pub p: f64,
    pub rho: f64,
    /// Best available value under the base drift.
    pub value_base: f64,
    /// Best available value under the alternative drift.
    pub value_alt: f64,
    /// Norm exponent for the drift difference (must exceed 1 - p).
    pub beta: f64,
    /// Declare the bound inapplicable when the empirical cap exceeds this.
    pub k_ceiling: f64,
}

pub fn suboptimality_bound<D1, D2>(
    inputs: &BoundInputs,
    drift_base: D1,
    drift_alt: D2,
    grid: &Arc<Grid>,
    n_paths: u64,
    seed: u64,
) -> Result<BoundReport>
where
    D1: Fn(&NoiseBundle) -> ProcessPath + Sync,
    D2: Fn(&NoiseBundle) -> ProcessPath + Sync,
{
    let min = (1.0 - inputs.p).max(1.0);
    if !(inputs.beta > min) {
        return Err(EngineError::BetaConstraint { beta: inputs.beta, p: inputs.p, min });
    }
    let p = inputs.p;
    let dt = grid.dt();

    struct PathOut {
        c2: f64,
        k: f64,
        quad: f64,
        alt_utility: f64,
        diff_sq_integral: f64,
    }

    let outs: Vec<PathOut> = collect_paths(n_paths, |i| {
        let noise = sample_noise(grid, seed, i);
        let lam = drift_base(&noise);
        let lam_alt = drift_alt(&noise);
        let pi: Vec<f64> = (0..grid.n_pos())
            .map(|k| {
                inputs.strategy.proportion(
                    grid.node(k),
                    StepState { drift: lam.values[k], log_vol: 0.0 },
                )
            })
            .collect();

        let mut mart = 0.0;
        let mut drift_int = 0.0;
        let mut sq_int = 0.0;
        let mut gap_int = 0.0;
        for k in 0..grid.n_pos() {
            let dm = noise.dm(k, inputs.rho);
            mart += pi[k] * dm;
            drift_int += pi[k] * lam.values[k] * dt;
            sq_int += pi[k] * pi[k] * dt;
            gap_int += pi[k].abs() * (lam_alt.values[k] - lam.values[k]).abs() * dt;
        }
        let c2 = (2.0 * p * mart + 2.0 * p * drift_int - p * sq_int).exp();
        let k_cap = (2.0 * p.abs() * gap_int).exp();

        let returns_alt =
            crate::market::return_path(&lam_alt, &noise, inputs.rho).expect("same grid");
        let alt_utility = terminal_wealth_fixed(&pi, &returns_alt, dt).powf(p) / p;

        // Trapezoid of the squared drift difference for the beta norm.
        let mut diff_sq = 0.0;
        for k in 0..=grid.n_pos() {
            let d = lam_alt.values[k] - lam.values[k];
            let w = if k == 0 || k == grid.n_pos() { 0.5 } else { 1.0 };
            diff_sq += w * d * d * dt;
        }
        PathOut { c2, k: k_cap, quad: gap_int * gap_int, alt_utility, diff_sq_integral: diff_sq }
    });

    let c2_samples: Vec<f64> = outs.iter().map(|o| o.c2).collect();
    let c2 = MCEstimate::from_samples(&c2_samples, seed);
    let k_max = outs.iter().map(|o| o.k).fold(0.0, f64::max);
    let applicable = c2_samples.iter().all(|v| v.is_finite()) && k_max <= inputs.k_ceiling;

    let quad_samples: Vec<f64> = outs.iter().map(|o| o.quad).collect();
    let quad_mean = MCEstimate::from_samples(&quad_samples, seed);
    let quad_term = if quad_mean.mean > 0.0 {
        MCEstimate {
            mean: quad_mean.mean.sqrt(),
            stderr: quad_mean.stderr / (2.0 * quad_mean.mean.sqrt()),
            n_paths,
            seed,
        }
    } else {
        MCEstimate::exact(0.0, n_paths, seed)
    };

    let integrals: Vec<f64> = outs.iter().map(|o| o.diff_sq_integral).collect();
    let norm_diff = norm_beta_from_integrals(&integrals, inputs.beta, seed);
    let c1_fitted = if norm_diff.mean > 1e-15 {
        (inputs.value_alt - inputs.value_base).abs() / norm_diff.mean
    } else {
        0.0
    };

    let bound_mean = c2.mean * k_max * quad_term.mean + c1_fitted * norm_diff.mean;
    let bound_se = ((k_max * quad_term.mean * c2.stderr).powi(2)
        + (c2.mean * k_max * quad_term.stderr).powi(2)
        + (c1_fitted * norm_diff.stderr).powi(2))
    .sqrt();

    let alt_utilities: Vec<f64> = outs.iter().map(|o| o.alt_utility).collect();
    let alt_value = MCEstimate::from_samples(&alt_utilities, seed);
    let direct_gap = MCEstimate {
        mean: inputs.value_alt - alt_value.mean,
        stderr: alt_value.stderr,
        n_paths,
        seed,
    };

    Ok(BoundReport {
        c2,
        k_max,
        quad_term,
        c1_fitted,
        norm_diff,
        bound: MCEstimate { mean: bound_mean, stderr: bound_se, n_paths, seed },
        direct_gap,
        applicable,
    })
}
