//! Time discretization: uniform output nodes on [0, T], optionally refined
//! noise cells on the positive axis, and a geometrically graded negative axis
//! down to -s_cut (kernel mass concentrates near s = 0).

use crate::error::{EngineError, Result};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    horizon: f64,
    n_pos: usize,
    n_neg: usize,
    s_cut: f64,
    refine: usize,
    /// Negative-axis cell boundaries, increasing from -s_cut to 0.
    neg_nodes: Vec<f64>,
}

impl Grid {
    pub fn new(horizon: f64, n_pos: usize, n_neg: usize, s_cut: f64, refine: usize) -> Result<Arc<Self>> {
        if !(horizon > 0.0) {
            return Err(EngineError::InvalidParam {
                name: "horizon",
                reason: format!("must be > 0, got {horizon}"),
            });
        }
        if n_pos < 1 || n_neg < 1 || refine < 1 {
            return Err(EngineError::InvalidParam {
                name: "grid",
                reason: "n_pos, n_neg and refine must all be >= 1".into(),
            });
        }
        if !(s_cut > 0.0) {
            return Err(EngineError::InvalidParam {
                name: "s_cut",
                reason: format!("must be > 0, got {s_cut}"),
            });
        }

        // Geometric node ladder |s_j| = s_cut * g^j with the last cell width
        // matched to the fine positive mesh.
        let target = (horizon / (n_pos * refine) as f64).min(s_cut * 0.5);
        let mut neg_nodes = Vec::with_capacity(n_neg + 1);
        if n_neg == 1 {
            neg_nodes.push(-s_cut);
        } else {
            let g = (target / s_cut).powf(1.0 / (n_neg - 1) as f64);
            for j in 0..n_neg {
                neg_nodes.push(-s_cut * g.powi(j as i32));
            }
        }
        neg_nodes.push(0.0);
        debug_assert!(neg_nodes.windows(2).all(|w| w[0] < w[1]));

        Ok(Arc::new(Self { horizon, n_pos, n_neg, s_cut, refine, neg_nodes }))
    }

    /// Uniform mesh, n_neg = n_pos, s_cut = 50 T, no refinement.
    pub fn standard(horizon: f64, n_pos: usize) -> Result<Arc<Self>> {
        Self::new(horizon, n_pos, n_pos, 50.0 * horizon, 1)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    pub fn s_cut(&self) -> f64 {
        self.s_cut
    }

    pub fn refine(&self) -> usize {
        self.refine
    }

    /// Output step on the positive axis.
    pub fn dt(&self) -> f64 {
        self.horizon / self.n_pos as f64
    }

    /// Noise-cell step on the positive axis.
    pub fn dt_fine(&self) -> f64 {
        self.horizon / (self.n_pos * self.refine) as f64
    }

    /// Number of fine noise cells on [0, T].
    pub fn n_pos_fine(&self) -> usize {
        self.n_pos * self.refine
    }

    /// Output node `t_k`, k = 0..=n_pos.
    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_pos).map(|k| self.node(k))
    }

    /// Fine positive cell `[lo, hi)` by fine index.
    pub fn pos_cell(&self, j: usize) -> (f64, f64) {
        let d = self.dt_fine();
        (j as f64 * d, (j + 1) as f64 * d)
    }

    /// Negative cell `[lo, hi)` by index, lo increasing with j.
    pub fn neg_cell(&self, j: usize) -> (f64, f64) {
        (self.neg_nodes[j], self.neg_nodes[j + 1])
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}
