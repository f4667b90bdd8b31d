//! Small statistical helpers for the validation suites: two-sample
//! Kolmogorov-Smirnov and a band-aware monotone-ratio test.

/// Two-sample KS statistic `sup |F1 - F2|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        if xs[i] < ys[j] {
            i += 1;
        } else if ys[j] < xs[i] {
            j += 1;
        } else {
            // Walk through the whole tie on both sides before comparing.
            let v = xs[i];
            while i < n && xs[i] == v {
                i += 1;
            }
            while j < m && ys[j] == v {
                j += 1;
            }
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }
    d
}

/// Asymptotic two-sample KS p-value (Kolmogorov distribution with the usual
/// small-sample correction).
pub fn ks_p_value(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Outcome of a monotone-decrease check on noisy values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioTest {
    Pass,
    Fail,
    /// Consecutive values are inside each other's error bands.
    Inconclusive,
}

/// Checks that `values` decrease strictly along the slice, treating pairs
/// whose gap is within `band_sigmas` combined standard errors as
/// inconclusive rather than failed.
pub fn monotone_decrease(points: &[(f64, f64)], band_sigmas: f64) -> RatioTest {
    let mut outcome = RatioTest::Pass;
    for w in points.windows(2) {
        let (v0, s0) = w[0];
        let (v1, s1) = w[1];
        let band = band_sigmas * (s0 * s0 + s1 * s1).sqrt();
        if v1 < v0 {
            continue;
        } else if v1 - v0 <= band {
            outcome = RatioTest::Inconclusive;
        } else {
            return RatioTest::Fail;
        }
    }
    outcome
}
