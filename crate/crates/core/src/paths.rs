//! Path construction: fBm through the cell-averaged kernel representation,
//! its Hurst-derivative process, fractional Ornstein-Uhlenbeck drifts, an
//! exact dense-factorization sampler for validation, and the beta-norm.

use crate::error::{EngineError, Result};
use crate::estimate::{collect_paths, pairwise_sum, MCEstimate};
use crate::grid::Grid;
use crate::kernel::{kernel_cell_integral, kernel_dh_cell_integral, HurstParam};
use crate::noise::NoiseBundle;
use crate::rng::{standard_normal, Axis};
use std::sync::Arc;

/// A real-valued process sampled on the positive output nodes.
#[derive(Debug, Clone)]
pub struct ProcessPath {
    pub values: Vec<f64>,
    pub grid: Arc<Grid>,
}

impl ProcessPath {
    pub fn new(values: Vec<f64>, grid: Arc<Grid>) -> Self {
        debug_assert_eq!(values.len(), grid.n_pos() + 1);
        Self { values, grid }
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Trapezoid `int_0^T f(t)^2 dt` over the output nodes.
    pub fn squared_time_integral(&self) -> f64 {
        let dt = self.grid.dt();
        let v = &self.values;
        let n = v.len() - 1;
        let mut acc = 0.5 * (v[0] * v[0] + v[n] * v[n]);
        for x in &v[1..n] {
            acc += x * x;
        }
        acc * dt
    }

    pub fn check_same_grid(&self, other: &ProcessPath) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(EngineError::GridMismatch)
        }
    }
}

/// Which kernel a precomputed operator integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum KernelKind {
    Fbm,
    FbmHurstDerivative,
}

/// Precomputed cell-averaged kernel coefficients mapping a noise bundle to a
/// process path. Building one is O(nodes x cells) worth of closed-form cell
/// integrals; applying it is a matrix-vector product, so MC loops build it
/// once and share it read-only across workers.
#[derive(Debug)]
pub struct KernelOp {
    grid: Arc<Grid>,
    hurst: HurstParam,
    /// Row k holds coefficients for output node k over [neg cells | fine pos cells].
    rows: Vec<Vec<f64>>,
    /// Brownian fast path: the kernel is the indicator of (0, t).
    indicator: bool,
}

impl KernelOp {
    pub fn fbm(grid: &Arc<Grid>, hurst: HurstParam) -> Self {
        Self::build(grid, hurst, KernelKind::Fbm)
    }

    pub fn fbm_hurst_derivative(grid: &Arc<Grid>, hurst: HurstParam) -> Self {
        Self::build(grid, hurst, KernelKind::FbmHurstDerivative)
    }

    fn build(grid: &Arc<Grid>, hurst: HurstParam, kind: KernelKind) -> Self {
        let indicator = kind == KernelKind::Fbm && hurst.is_half();
        let n_neg = grid.n_neg();
        let n_fine = grid.n_pos_fine();
        let refine = grid.refine();
        let mut rows = Vec::with_capacity(grid.n_pos() + 1);
        rows.push(Vec::new());
        if !indicator {
            for k in 1..=grid.n_pos() {
                let t = grid.node(k);
                let active_fine = k * refine;
                let mut row = Vec::with_capacity(n_neg + active_fine);
                for j in 0..n_neg {
                    let (lo, hi) = grid.neg_cell(j);
                    let integral = match kind {
                        KernelKind::Fbm => kernel_cell_integral(hurst, t, lo, hi),
                        KernelKind::FbmHurstDerivative => kernel_dh_cell_integral(hurst, t, lo, hi),
                    };
                    row.push(integral / (hi - lo));
                }
                // Kernel support ends at s = t, so only cells below node k matter.
                for j in 0..active_fine.min(n_fine) {
                    let (lo, hi) = grid.pos_cell(j);
                    let integral = match kind {
                        KernelKind::Fbm => kernel_cell_integral(hurst, t, lo, hi),
                        KernelKind::FbmHurstDerivative => kernel_dh_cell_integral(hurst, t, lo, hi),
                    };
                    row.push(integral / (hi - lo));
                }
                rows.push(row);
            }
        }
        Self { grid: Arc::clone(grid), hurst, rows, indicator }
    }

    pub fn hurst(&self) -> HurstParam {
        self.hurst
    }

    /// Integrate the kernel against a bundle's dW.
    pub fn sample(&self, noise: &NoiseBundle) -> ProcessPath {
        debug_assert!(noise.grid.same_as(&self.grid));
        let n_pos = self.grid.n_pos();
        let mut values = Vec::with_capacity(n_pos + 1);
        values.push(0.0);
        if self.indicator {
            let mut acc = 0.0;
            let refine = self.grid.refine();
            for k in 0..n_pos {
                for j in 0..refine {
                    acc += noise.dw_pos_fine[k * refine + j];
                }
                values.push(acc);
            }
        } else {
            let n_neg = self.grid.n_neg();
            for k in 1..=n_pos {
                let row = &self.rows[k];
                let mut acc = 0.0;
                for (c, dw) in row[..n_neg].iter().zip(&noise.dw_neg) {
                    acc += c * dw;
                }
                for (c, dw) in row[n_neg..].iter().zip(&noise.dw_pos_fine) {
                    acc += c * dw;
                }
                values.push(acc);
            }
        }
        ProcessPath::new(values, Arc::clone(&self.grid))
    }
}

/// fBm at the bundle's grid nodes, `B^H_t = sum over cells of the
/// cell-averaged kernel times dW`. Convenience wrapper; MC loops should hold
/// a [`KernelOp`] instead of rebuilding it per path.
pub fn fbm_path(noise: &NoiseBundle, hurst: HurstParam) -> ProcessPath {
    KernelOp::fbm(&noise.grid, hurst).sample(noise)
}

/// Ornstein-Uhlenbeck convolution of a driver path:
/// `x_t = e^{-alpha t} x0 + b_t - alpha int_0^t b_u e^{-alpha (t-u)} du`
/// with the integral accumulated by an exponentially damped trapezoid.
/// `alpha = 0` returns `x0 + b_t` exactly.
pub fn ou_convolution(driver: &ProcessPath, alpha: f64, x0: f64) -> ProcessPath {
    let grid = &driver.grid;
    let dt = grid.dt();
    let damp = (-alpha * dt).exp();
    let b = &driver.values;
    let mut values = Vec::with_capacity(b.len());
    values.push(x0 + b[0]);
    let mut integral = 0.0;
    let mut decay = 1.0;
    for k in 1..b.len() {
        integral = damp * integral + 0.5 * dt * (damp * b[k - 1] + b[k]);
        decay *= damp;
        values.push(decay * x0 + b[k] - alpha * integral);
    }
    ProcessPath::new(values, Arc::clone(grid))
}

/// Fractional Ornstein-Uhlenbeck path `d x = -alpha x dt + dB^H`, serving as
/// the Model 1 drift and the Model 2 log-volatility.
pub fn fou_path(noise: &NoiseBundle, hurst: HurstParam, alpha: f64, x0: f64) -> ProcessPath {
    ou_convolution(&fbm_path(noise, hurst), alpha, x0)
}

/// Which form of the drift H-derivative to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HurstDerivativeForm {
    /// Kernel-derivative integral plus the mean-reversion convolution term.
    #[default]
    Full,
    /// Kernel-derivative integral alone (drops the convolution term); kept
    /// for side-by-side comparison of the two published displays.
    KernelTermOnly,
}

/// Hurst derivative of the fOU drift on the same noise as [`fou_path`].
pub fn dlambda_path(
    noise: &NoiseBundle,
    hurst: HurstParam,
    alpha: f64,
    form: HurstDerivativeForm,
) -> ProcessPath {
    let db = KernelOp::fbm_hurst_derivative(&noise.grid, hurst).sample(noise);
    dlambda_from_derivative_driver(&db, alpha, form)
}

/// Same as [`dlambda_path`] given a precomputed derivative-kernel path.
pub fn dlambda_from_derivative_driver(
    db: &ProcessPath,
    alpha: f64,
    form: HurstDerivativeForm,
) -> ProcessPath {
    match form {
        HurstDerivativeForm::Full => ou_convolution(db, alpha, 0.0),
        HurstDerivativeForm::KernelTermOnly => db.clone(),
    }
}

/// Exact sampler for the fBm law at the output nodes, by dense Cholesky
/// factorization of the covariance
/// `(|t|^{2H} + |s|^{2H} - |t-s|^{2H}) / 2`. Validation oracle only.
#[derive(Debug)]
pub struct ExactFbmSampler {
    grid: Arc<Grid>,
    lower: Vec<Vec<f64>>,
}

pub const EXACT_SAMPLER_MAX_NODES: usize = 512;

impl ExactFbmSampler {
    pub fn new(grid: &Arc<Grid>, hurst: HurstParam) -> Result<Self> {
        let n = grid.n_pos();
        if n > EXACT_SAMPLER_MAX_NODES {
            return Err(EngineError::InvalidParam {
                name: "n_pos",
                reason: format!("dense factorization is capped at {EXACT_SAMPLER_MAX_NODES} nodes, got {n}"),
            });
        }
        let h2 = 2.0 * hurst.value();
        let cov = |i: usize, j: usize| {
            let ti = grid.node(i + 1);
            let tj = grid.node(j + 1);
            0.5 * (ti.powf(h2) + tj.powf(h2) - (ti - tj).abs().powf(h2))
        };
        let mut lower = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = cov(i, j);
                for k in 0..j {
                    sum -= lower[i][k] * lower[j][k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(EngineError::Factorization {
                            pivot: i,
                            suggested_jitter: 1e-12 * cov(i, i).abs().max(1.0),
                        });
                    }
                    lower[i][j] = sum.sqrt();
                } else {
                    lower[i][j] = sum / lower[j][j];
                }
            }
        }
        Ok(Self { grid: Arc::clone(grid), lower })
    }

    pub fn sample(&self, seed: u64, path_index: u64) -> ProcessPath {
        let n = self.lower.len();
        let z: Vec<f64> = (0..n)
            .map(|j| standard_normal(seed, path_index, Axis::Oracle, j as u64))
            .collect();
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        for i in 0..n {
            let mut acc = 0.0;
            for (l, zj) in self.lower[i][..=i].iter().zip(&z) {
                acc += l * zj;
            }
            values.push(acc);
        }
        ProcessPath::new(values, Arc::clone(&self.grid))
    }
}

/// One exactly-distributed fBm path (see [`ExactFbmSampler`] for MC use).
pub fn exact_fbm_oracle(grid: &Arc<Grid>, hurst: HurstParam, seed: u64) -> Result<ProcessPath> {
    Ok(ExactFbmSampler::new(grid, hurst)?.sample(seed, 0))
}

/// Monte Carlo estimate of the drift norm
/// `E[(int_0^T x_t^2 dt)^beta]^{1/(2 beta)}`, with the standard error pushed
/// through the outer power by the delta method. Requires `beta > max(1, 1-p)`
/// so the norm controls the value function at risk aversion `p`.
pub fn norm_beta<F>(sampler: F, beta: f64, p: f64, n_paths: u64, seed: u64) -> Result<MCEstimate>
where
    F: Fn(u64) -> ProcessPath + Sync,
{
    let min = (1.0 - p).max(1.0);
    if !(beta > min) {
        return Err(EngineError::BetaConstraint { beta, p, min });
    }
    let integrals = collect_paths(n_paths, |i| sampler(i).squared_time_integral());
    Ok(norm_beta_from_integrals(&integrals, beta, seed))
}

/// The beta-norm given precomputed squared time integrals `int x_t^2 dt`
/// (used when another estimator already walked the paths).
pub fn norm_beta_from_integrals(integrals: &[f64], beta: f64, seed: u64) -> MCEstimate {
    let n_paths = integrals.len() as u64;
    let powered: Vec<f64> = integrals.iter().map(|q| q.powf(beta)).collect();
    let mean = pairwise_sum(&powered) / n_paths as f64;
    let centered: Vec<f64> = powered.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = if n_paths > 1 {
        pairwise_sum(&centered) / (n_paths as f64 - 1.0)
    } else {
        0.0
    };
    let se_mean = (var / n_paths as f64).sqrt();
    let (value, stderr) = if mean <= 0.0 {
        (0.0, 0.0)
    } else {
        let exponent = 1.0 / (2.0 * beta);
        let value = mean.powf(exponent);
        (value, exponent * mean.powf(exponent - 1.0) * se_mean)
    };
    MCEstimate { mean: value, stderr, n_paths, seed }
}
