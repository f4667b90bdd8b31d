//! Monte Carlo sensitivity engine for power-utility portfolio choice in
//! markets whose drift or log-volatility is driven by fractional Brownian
//! motion.
//!
//! The crate covers, bottom up:
//!
//! * [`kernel`] — the fBm moving-average kernel, its Hurst derivative, and
//!   the normalization integrals, with exact per-cell antiderivatives;
//! * [`paths`] — reproducible noise-driven path construction (fBm, fractional
//!   OU, the drift's Hurst-derivative process) plus an exact dense sampler
//!   used as a law oracle, and the beta-norm of drift processes;
//! * [`market`] — returns, log-Euler wealth, supermartingale deflators, and
//!   power-utility evaluation, including the log-volatility model's
//!   auxiliary-market transform;
//! * [`kim_omberg`] — the Markovian base-case value function via a backward
//!   Riccati system, its optimal feedback rule, and tilted-measure weights;
//! * [`sensitivity`] — drift-direction and Hurst-parameter derivatives of the
//!   value function, first-order expansions, strong-mean-reversion
//!   asymptotics, and the estimated suboptimality bound.
//!
//! Every stochastic quantity is returned as an [`estimate::MCEstimate`]
//! carrying its standard error, path count and seed. All randomness is
//! counter-based: results are bit-identical for any worker count.

pub mod error;
pub mod estimate;
pub mod grid;
pub mod kernel;
pub mod kim_omberg;
pub mod market;
pub mod noise;
pub mod params;
pub mod paths;
pub mod quad;
pub mod rng;
pub mod sensitivity;
pub mod stats;

pub use error::{EngineError, Result};
pub use estimate::MCEstimate;
pub use grid::Grid;
pub use kernel::HurstParam;
pub use params::{ModelKind, ModelParams};
pub use paths::ProcessPath;
pub use quad::QuadratureSpec;
