//! Monte Carlo estimates and order-insensitive aggregation.
//!
//! Per-path results are collected into an index-ordered vector (rayon fills
//! disjoint slots) and reduced with pairwise summation, so outputs are
//! bit-identical for any worker count.

use rayon::prelude::*;

/// A stochastic result always travels with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub seed: u64,
}

impl MCEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len() as f64;
        let mean = pairwise_sum(samples) / n;
        let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = if samples.len() > 1 {
            pairwise_sum(&sq) / (n - 1.0)
        } else {
            0.0
        };
        MCEstimate {
            mean,
            stderr: (var / n).sqrt(),
            n_paths: samples.len() as u64,
            seed,
        }
    }

    /// Degenerate estimate of a deterministic quantity.
    pub fn exact(value: f64, n_paths: u64, seed: u64) -> Self {
        MCEstimate { mean: value, stderr: 0.0, n_paths, seed }
    }
}

/// Deterministic pairwise sum; independent of chunking or thread count
/// because it is always called on the full, index-ordered slice.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Map path indices to per-path values in parallel, preserving index order.
pub fn collect_paths<T, F>(n_paths: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n_paths).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_from_samples() {
        let est = MCEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 7);
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.n_paths, 4);
        assert_eq!(est.seed, 7);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((est.stderr - sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_sample() {
        let est = MCEstimate::from_samples(&[0.5; 100], 0);
        assert_eq!(est.mean, 0.5);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn collect_paths_is_index_ordered() {
        let v = collect_paths(100, |i| i * 2);
        assert_eq!(v[0], 0);
        assert_eq!(v[99], 198);
    }
}
