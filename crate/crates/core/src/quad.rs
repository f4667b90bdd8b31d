//! Adaptive Gauss-Kronrod quadrature with singularity splitting.
//!
//! Integrands here have integrable power/log singularities at known points
//! (panel boundaries are placed there) and algebraically decaying tails
//! (mapped to a finite panel by `u -> 1/u`). Kronrod nodes are interior, so
//! singular endpoints are never evaluated; repeated bisection toward an
//! endpoint acts as a graded mesh.

use crate::error::{EngineError, Result};
use std::collections::BinaryHeap;

/// Tolerances and truncation controls for the kernel quadratures.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Negative-axis switch point (time units): direct panels cover
    /// `[-s_cut, t]`, the remaining tail is integrated after the `1/u` map.
    pub s_cut: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, s_cut: f64, max_subdivisions: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || !(abs_tol > 0.0) {
            return Err(EngineError::InvalidParam {
                name: "tolerance",
                reason: format!("tolerances must be > 0, got rel {rel_tol}, abs {abs_tol}"),
            });
        }
        if !(s_cut > 0.0) {
            return Err(EngineError::InvalidParam {
                name: "s_cut",
                reason: format!("truncation must be > 0, got {s_cut}"),
            });
        }
        if max_subdivisions < 1 {
            return Err(EngineError::InvalidParam {
                name: "max_subdivisions",
                reason: "need at least one subdivision".into(),
            });
        }
        Ok(Self { rel_tol, abs_tol, s_cut, max_subdivisions })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, s_cut: 50.0, max_subdivisions: 4000 }
    }
}

/// Value plus an error estimate from the adaptive driver.
#[derive(Debug, Clone, Copy)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error: f64,
}

// 15-point Kronrod abscissas on [0, 1] side (symmetric), with the embedded
// 7-point Gauss rule. Standard QK15 constants.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let mut fv1 = [0.0f64; 7];
    let mut fv2 = [0.0f64; 7];
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let sum = f1 + f2;
        kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

#[derive(Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration of `f` on `[a, b]`. `f` must be finite on the open
/// interval; endpoint singularities are fine.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> IntegralEstimate {
    if a == b {
        return IntegralEstimate { value: 0.0, error: 0.0 };
    }
    let (v, e) = qk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let mut total_value = v;
    let mut total_error = e;

    for _ in 0..spec.max_subdivisions {
        let target = spec.abs_tol.max(spec.rel_tol * total_value.abs());
        if total_error <= target {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel at floating-point resolution; keep it as is.
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        let (v1, e1) = qk15(&f, worst.a, mid);
        let (v2, e2) = qk15(&f, mid, worst.b);
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }

    // Recompute the sums pairwise to shed accumulated cancellation noise.
    let panels = heap.into_vec();
    let values: Vec<f64> = panels.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = panels.iter().map(|p| p.error).collect();
    IntegralEstimate { value: crate::estimate::pairwise_sum(&values), error: crate::estimate::pairwise_sum(&errors) }
}

/// Integrate over `[points[0], points[last]]` with panel boundaries at every
/// interior point (used to pin singularities to panel edges).
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, points: &[f64], spec: &QuadratureSpec) -> IntegralEstimate {
    debug_assert!(points.windows(2).all(|w| w[0] <= w[1]));
    let mut value = 0.0;
    let mut error = 0.0;
    for w in points.windows(2) {
        let est = integrate(&f, w[0], w[1], spec);
        value += est.value;
        error += est.error;
    }
    IntegralEstimate { value, error }
}

/// Integrate `f` over `[a, +inf)` for `a > 0` by mapping the tail through
/// `s = a/u`: the image integrand has at worst an integrable endpoint
/// singularity at `u = 0` when `f` decays algebraically.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: F, a: f64, spec: &QuadratureSpec) -> IntegralEstimate {
    debug_assert!(a > 0.0);
    integrate(|u| f(a / u) * a / (u * u), 0.0, 1.0, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let spec = QuadratureSpec::default();
        let est = integrate(|x| 3.0 * x * x, 0.0, 2.0, &spec);
        assert!((est.value - 8.0).abs() < 1e-12);
    }

    #[test]
    fn power_singularity_at_endpoint() {
        let spec = QuadratureSpec::default();
        // int_0^1 x^{-0.8} dx = 5
        let est = integrate(|x| x.powf(-0.8), 0.0, 1.0, &spec);
        assert!((est.value - 5.0).abs() < 1e-8, "got {}", est.value);
    }

    #[test]
    fn log_singularity() {
        let spec = QuadratureSpec::default();
        let est = integrate(|x| x.ln(), 0.0, 1.0, &spec);
        assert!((est.value + 1.0).abs() < 1e-10);
        let est2 = integrate(|x| x.ln() * x.ln(), 0.0, 1.0, &spec);
        assert!((est2.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn split_points_cover_interior_singularity() {
        let spec = QuadratureSpec::default();
        // int_{-1}^{1} |x|^{-1/2} dx = 4
        let est = integrate_split(|x| x.abs().powf(-0.5), &[-1.0, 0.0, 1.0], &spec);
        assert!((est.value - 4.0).abs() < 1e-8);
    }

    #[test]
    fn algebraic_tail() {
        let spec = QuadratureSpec::default();
        // int_1^inf x^{-2} dx = 1
        let est = integrate_tail(|x| x.powi(-2), 1.0, &spec);
        assert!((est.value - 1.0).abs() < 1e-10);
        // int_2^inf x^{-1.3} dx = 2^{-0.3}/0.3
        let est2 = integrate_tail(|x| x.powf(-1.3), 2.0, &spec);
        let exact = 2.0_f64.powf(-0.3) / 0.3;
        assert!((est2.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn spec_rejects_bad_inputs() {
        assert!(QuadratureSpec::new(0.0, 1e-9, 50.0, 100).is_err());
        assert!(QuadratureSpec::new(1e-9, 1e-9, -1.0, 100).is_err());
        assert!(QuadratureSpec::new(1e-9, 1e-9, 50.0, 0).is_err());
    }
}
