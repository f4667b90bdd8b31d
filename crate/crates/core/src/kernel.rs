//! The fractional Brownian kernel, its Hurst derivative, and the
//! normalization integrals backing it.
//!
//! Conventions: `x_+ = max(0, x)`, `0^0 = 0` and `0 * ln 0 = 0`, so every
//! kernel expression is defined almost everywhere and quadrature nodes never
//! have to sit exactly on a singular point. At `H = 1/2` the kernel
//! degenerates to the indicator of `0 < s < t` and fBm collapses to ordinary
//! Brownian motion.

use crate::error::{EngineError, Result};
use crate::quad::{integrate, integrate_split, QuadratureSpec};
use statrs::function::gamma::{digamma, gamma};
use std::f64::consts::PI;

/// Hurst parameter, restricted to the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) || !value.is_finite() {
            return Err(EngineError::InvalidHurst(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Exactly the Markovian point, where the kernel is an indicator.
    pub fn is_half(self) -> bool {
        self.0 == 0.5
    }

    /// Kernel exponent `H - 1/2`.
    pub fn exponent(self) -> f64 {
        self.0 - 0.5
    }

    pub fn shifted(self, eps: f64) -> Result<Self> {
        Self::new(self.0 + eps)
    }
}

/// `max(0, x)^a`, with the `0^0 = 0` convention baked in.
#[inline]
pub(crate) fn plus_pow(x: f64, a: f64) -> f64 {
    if x > 0.0 {
        x.powf(a)
    } else {
        0.0
    }
}

/// `max(0, x)^a * ln(x)`, zero whenever the plus part vanishes.
#[inline]
fn plus_pow_ln(x: f64, a: f64) -> f64 {
    if x > 0.0 {
        x.powf(a) * x.ln()
    } else {
        0.0
    }
}

/// Kernel normalizing constant `C(H) = sqrt(2H sin(pi H) Gamma(2H)) / Gamma(H + 1/2)`.
pub fn c_norm(h: HurstParam) -> f64 {
    if h.is_half() {
        // Pinned so the Markovian point degenerates to an exact indicator.
        return 1.0;
    }
    let hv = h.value();
    (2.0 * hv * (PI * hv).sin() * gamma(2.0 * hv)).sqrt() / gamma(hv + 0.5)
}

/// Derivative of `C` in `H`, via the logarithmic-derivative closed form
/// `C'(H) = C(H) * [ (1/H + pi cot(pi H) + 2 psi(2H)) / 2 - psi(H + 1/2) ]`.
pub fn dc_norm(h: HurstParam) -> f64 {
    let hv = h.value();
    let cot = (PI * hv).cos() / (PI * hv).sin();
    let log_deriv = 0.5 * (1.0 / hv + PI * cot + 2.0 * digamma(2.0 * hv)) - digamma(hv + 0.5);
    c_norm(h) * log_deriv
}

/// The fBm kernel `K^H(t, s) = C(H) [ (t-s)_+^{H-1/2} - (-s)_+^{H-1/2} ]`.
///
/// Legal for any real `s` (including `s > t`); requires `t >= 0`.
pub fn kernel(h: HurstParam, t: f64, s: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let a = h.exponent();
    c_norm(h) * (plus_pow(t - s, a) - plus_pow(-s, a))
}

/// Hurst derivative of the kernel. Evaluation exactly at the logarithmic
/// singularities `s = t` and `s = 0` is an error.
pub fn kernel_dh(h: HurstParam, t: f64, s: f64) -> Result<f64> {
    if s == t || s == 0.0 {
        return Err(EngineError::SingularPoint { t, s });
    }
    Ok(kernel_dh_unchecked(h, t, s))
}

#[inline]
fn kernel_dh_unchecked(h: HurstParam, t: f64, s: f64) -> f64 {
    let a = h.exponent();
    dc_norm(h) * (plus_pow(t - s, a) - plus_pow(-s, a))
        + c_norm(h) * (plus_pow_ln(t - s, a) - plus_pow_ln(-s, a))
}

fn check_c_domain(alpha: f64) -> Result<()> {
    if !(alpha > -0.5 && alpha < 0.5) {
        return Err(EngineError::InvalidParam {
            name: "alpha",
            reason: format!("normalization integrals diverge outside (-1/2, 1/2), got {alpha}"),
        });
    }
    Ok(())
}

/// `C_1(alpha) = int_0^inf ((1+s)^a - s^a)^2 ds + int_0^1 (1-s)^{2a} ds`.
///
/// The unit piece is integrated in the variable `u = 1 - s` and the far tail
/// through `s = 1/u` with `(1+s)^a - s^a = s^a expm1(a ln1p(1/s))`, so the
/// endpoint singularities always sit at an exactly representable origin.
pub fn c1(alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_c_domain(alpha)?;
    let head = integrate(
        |s| {
            let d = (1.0 + s).powf(alpha) - plus_pow(s, alpha);
            d * d
        },
        0.0,
        1.0,
        spec,
    );
    let tail = integrate(
        |u| {
            let s = 1.0 / u;
            let d = s.powf(alpha) * (alpha * u.ln_1p()).exp_m1();
            d * d / (u * u)
        },
        0.0,
        1.0,
        spec,
    );
    let unit = integrate(|u| plus_pow(u, 2.0 * alpha), 0.0, 1.0, spec);
    Ok(head.value + tail.value + unit.value)
}

/// `C_2(alpha) = int_0^inf ((1+s)^a ln(1+s) - s^a ln s)^2 ds
///             + int_0^1 ((1-s)^a ln(1-s))^2 ds`.
pub fn c2(alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_c_domain(alpha)?;
    let head = integrate(
        |s| {
            let d = (1.0 + s).powf(alpha) * (1.0 + s).ln() - plus_pow_ln(s, alpha);
            d * d
        },
        0.0,
        1.0,
        spec,
    );
    // (1+s)^a ln(1+s) - s^a ln s
    //   = s^a [ ln s expm1(a w) + e^{a w} w ],  w = ln1p(1/s).
    let tail = integrate(
        |u| {
            let s = 1.0 / u;
            let w = u.ln_1p();
            let d = s.powf(alpha) * (s.ln() * (alpha * w).exp_m1() + (alpha * w).exp() * w);
            d * d / (u * u)
        },
        0.0,
        1.0,
        spec,
    );
    let unit = integrate(
        |u| {
            let d = plus_pow_ln(u, alpha);
            d * d
        },
        0.0,
        1.0,
        spec,
    );
    Ok(head.value + tail.value + unit.value)
}

/// Kernel factors evaluated in singularity-centered coordinates. Quadrature
/// never reconstructs `t - s` or `-s` by subtraction near a singular point:
/// each piece receives the distance directly.
#[derive(Clone, Copy)]
struct KernelEval {
    a: f64,
    c: f64,
    dc: f64,
}

impl KernelEval {
    fn new(h: HurstParam) -> Self {
        Self { a: h.exponent(), c: c_norm(h), dc: dc_norm(h) }
    }

    /// `K(t, t - u)` for `u` in `(0, t)`: only the `(t-s)` factor is live.
    fn value_pos(&self, u: f64) -> f64 {
        self.c * plus_pow(u, self.a)
    }

    fn deriv_pos(&self, u: f64) -> f64 {
        self.dc * plus_pow(u, self.a) + self.c * plus_pow_ln(u, self.a)
    }

    /// `K(t, -u)` for `u` in `(0, near_cut]`.
    fn value_near(&self, t: f64, u: f64) -> f64 {
        self.c * ((t + u).powf(self.a) - u.powf(self.a))
    }

    fn deriv_near(&self, t: f64, u: f64) -> f64 {
        self.dc * ((t + u).powf(self.a) - u.powf(self.a))
            + self.c * ((t + u).powf(self.a) * (t + u).ln() - u.powf(self.a) * u.ln())
    }

    /// `K(t, -y)` for large `y`, with the cancellation of
    /// `(t+y)^a - y^a` removed through `y^a expm1(a ln1p(t/y))`.
    fn value_far(&self, t: f64, y: f64) -> f64 {
        self.c * y.powf(self.a) * (self.a * (t / y).ln_1p()).exp_m1()
    }

    fn deriv_far(&self, t: f64, y: f64) -> f64 {
        let w = (t / y).ln_1p();
        let ya = y.powf(self.a);
        let diff = ya * (self.a * w).exp_m1();
        // x^a ln x - y^a ln y = x^a w + (x^a - y^a) ln y.
        let log_part = ya * (self.a * w).exp() * w + diff * y.ln();
        self.dc * diff + self.c * log_part
    }
}

/// `int_R g(s) ds` for a square built from kernel pieces at time `t`:
/// `g_pos(u) = g(t - u)` on `(0, t)`, `g_near(u) = g(-u)` on `(0, cut]`, and
/// the mapped far tail beyond `-cut`.
fn integrate_kernel_pieces<P, N, F>(
    t: f64,
    spec: &QuadratureSpec,
    g_pos: P,
    g_near: N,
    g_far: F,
) -> f64
where
    P: Fn(f64) -> f64,
    N: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
{
    if t == 0.0 {
        return 0.0;
    }
    let cut = spec.s_cut.max(t).max(1.0);
    let positive = integrate(g_pos, 0.0, t, spec);
    let near = integrate_split(&g_near, &[0.0, t.min(1.0), cut], spec);
    let far = integrate(|u| g_far(cut / u) * cut / (u * u), 0.0, 1.0, spec);
    positive.value + near.value + far.value
}

/// `int_R K^H(t, s)^2 ds`; equals `t^{2H}` by normalization.
pub fn kernel_l2(h: HurstParam, t: f64, spec: &QuadratureSpec) -> f64 {
    debug_assert!(t >= 0.0);
    let k = KernelEval::new(h);
    integrate_kernel_pieces(
        t,
        spec,
        |u| k.value_pos(u).powi(2),
        |u| k.value_near(t, u).powi(2),
        |y| k.value_far(t, y).powi(2),
    )
}

/// `int_R (d_H K^H(t, s))^2 ds` (finite by square-integrability of the
/// derivative kernel).
pub fn kernel_dh_l2(h: HurstParam, t: f64, spec: &QuadratureSpec) -> f64 {
    debug_assert!(t >= 0.0);
    let k = KernelEval::new(h);
    integrate_kernel_pieces(
        t,
        spec,
        |u| k.deriv_pos(u).powi(2),
        |u| k.deriv_near(t, u).powi(2),
        |y| k.deriv_far(t, y).powi(2),
    )
}

/// L2 error of the difference quotient against the derivative kernel:
/// `int_R | (K^{H+eps} - K^H)/eps - d_H K^H |^2 ds`.
pub fn diff_quotient_l2_error(h: HurstParam, t: f64, eps: f64, spec: &QuadratureSpec) -> Result<f64> {
    if t <= 0.0 {
        return Err(EngineError::InvalidParam {
            name: "t",
            reason: format!("difference-quotient error needs t > 0, got {t}"),
        });
    }
    let base = KernelEval::new(h);
    let up = KernelEval::new(h.shifted(eps)?);
    Ok(integrate_kernel_pieces(
        t,
        spec,
        |u| ((up.value_pos(u) - base.value_pos(u)) / eps - base.deriv_pos(u)).powi(2),
        |u| ((up.value_near(t, u) - base.value_near(t, u)) / eps - base.deriv_near(t, u)).powi(2),
        |y| ((up.value_far(t, y) - base.value_far(t, y)) / eps - base.deriv_far(t, y)).powi(2),
    ))
}

// ---------------------------------------------------------------------------
// Closed-form cell integrals, used by the path engine to average the kernel
// over noise cells exactly.
// ---------------------------------------------------------------------------

/// Antiderivative piece: `int x^a dx = x^{a+1}/(a+1)` on the plus part.
#[inline]
fn prim_pow(x: f64, q: f64) -> f64 {
    // q = a + 1 = H + 1/2 > 0, so this is continuous through x = 0.
    plus_pow(x, q) / q
}

/// Antiderivative piece: `int x^a ln x dx = x^{a+1} (ln x / (a+1) - 1/(a+1)^2)`.
#[inline]
fn prim_pow_ln(x: f64, q: f64) -> f64 {
    if x > 0.0 {
        x.powf(q) * (x.ln() / q - 1.0 / (q * q))
    } else {
        0.0
    }
}

/// Exact `int_{s0}^{s1} K^H(t, s) ds`.
pub fn kernel_cell_integral(h: HurstParam, t: f64, s0: f64, s1: f64) -> f64 {
    debug_assert!(s0 <= s1);
    let q = h.value() + 0.5;
    let first = prim_pow(t - s0, q) - prim_pow(t - s1, q);
    let second = prim_pow(-s0, q) - prim_pow(-s1, q);
    c_norm(h) * (first - second)
}

/// Exact `int_{s0}^{s1} d_H K^H(t, s) ds`; this is the H-derivative of
/// `kernel_cell_integral`, so discretized fBm and its Hurst derivative stay
/// consistent cell by cell.
pub fn kernel_dh_cell_integral(h: HurstParam, t: f64, s0: f64, s1: f64) -> f64 {
    debug_assert!(s0 <= s1);
    let q = h.value() + 0.5;
    let first = prim_pow(t - s0, q) - prim_pow(t - s1, q);
    let second = prim_pow(-s0, q) - prim_pow(-s1, q);
    let first_ln = prim_pow_ln(t - s0, q) - prim_pow_ln(t - s1, q);
    let second_ln = prim_pow_ln(-s0, q) - prim_pow_ln(-s1, q);
    dc_norm(h) * (first - second) + c_norm(h) * (first_ln - second_ln)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_tail;
    use proptest::prelude::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn h(v: f64) -> HurstParam {
        HurstParam::new(v).unwrap()
    }

    /// Independent oracle for C(H): adaptive quadrature of the defining
    /// integral `C(H) = (int_0^inf ((1+s)^a - s^a)^2 ds + 1/(2H))^{-1/2}`.
    fn c_norm_integral_oracle(hv: f64) -> f64 {
        let a = hv - 0.5;
        let body = |s: f64| {
            let d = (1.0 + s).powf(a) - plus_pow(s, a);
            d * d
        };
        let head = integrate(body, 0.0, 1.0, &spec());
        let tail = integrate_tail(body, 1.0, &spec());
        (head.value + tail.value + 0.5 / hv).powf(-0.5)
    }

    #[test]
    fn hurst_param_rejects_out_of_range() {
        assert!(HurstParam::new(0.0).is_err());
        assert!(HurstParam::new(1.0).is_err());
        assert!(HurstParam::new(-0.2).is_err());
        assert!(HurstParam::new(f64::NAN).is_err());
        assert!(HurstParam::new(0.5).unwrap().is_half());
        assert!(!HurstParam::new(0.5000001).unwrap().is_half());
    }

    #[test]
    fn c_norm_at_half_is_one() {
        assert!((c_norm(h(0.5)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c_norm_matches_integral_definition() {
        for hv in [0.7, 0.3] {
            let closed = c_norm(h(hv));
            let oracle = c_norm_integral_oracle(hv);
            assert!(
                (closed - oracle).abs() < 1e-8,
                "H={hv}: closed {closed} vs integral {oracle}"
            );
        }
    }

    #[test]
    fn dc_norm_matches_finite_difference() {
        let step = 1e-5;
        for hv in [0.5, 0.6, 0.4] {
            let fd = (c_norm(h(hv + step)) - c_norm(h(hv - step))) / (2.0 * step);
            let closed = dc_norm(h(hv));
            assert!(
                (closed - fd).abs() < 1e-6,
                "H={hv}: closed {closed} vs fd {fd}"
            );
        }
        // At H = 1/2 the log-derivative formula collapses to exactly 1.
        assert!((dc_norm(h(0.5)) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn kernel_degenerates_to_indicator_at_half() {
        assert_eq!(kernel(h(0.5), 1.0, 0.5), 1.0);
        assert_eq!(kernel(h(0.5), 1.0, -2.0), 0.0);
        assert_eq!(kernel(h(0.5), 1.0, 1.5), 0.0);
    }

    #[test]
    fn kernel_vanishes_beyond_t_for_any_h() {
        for hv in [0.1, 0.3, 0.5, 0.7, 0.9] {
            assert_eq!(kernel(h(hv), 1.0, 1.5), 0.0);
        }
    }

    #[test]
    fn kernel_dh_closed_form_values() {
        // Central finite difference (K^{H+e} - K^{H-e})/2e as the oracle.
        let e = 1e-5;
        let fd = |hv: f64, t: f64, s: f64| (kernel(h(hv + e), t, s) - kernel(h(hv - e), t, s)) / (2.0 * e);

        let v = kernel_dh(h(0.5), 1.0, 0.5).unwrap();
        assert!((v - (1.0 + 0.5_f64.ln())).abs() < 1e-9);
        assert!((v - fd(0.5, 1.0, 0.5)).abs() < 1e-6);

        let v = kernel_dh(h(0.5), 1.0, -1.0).unwrap();
        assert!((v - 2.0_f64.ln()).abs() < 1e-9);
        assert!((v - fd(0.5, 1.0, -1.0)).abs() < 1e-6);

        for hv in [0.3, 0.7] {
            assert_eq!(kernel_dh(h(hv), 1.0, 2.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn kernel_dh_rejects_singular_points() {
        assert!(matches!(
            kernel_dh(h(0.3), 1.0, 1.0),
            Err(EngineError::SingularPoint { .. })
        ));
        assert!(matches!(
            kernel_dh(h(0.3), 1.0, 0.0),
            Err(EngineError::SingularPoint { .. })
        ));
    }

    #[test]
    fn c1_trivial_point() {
        assert!((c1(0.0, &spec()).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn c1_is_inverse_square_of_c_norm() {
        for alpha in [-0.2, 0.0, 0.2] {
            let hv = alpha + 0.5;
            let prod = c1(alpha, &spec()).unwrap() * c_norm(h(hv)).powi(2);
            assert!((prod - 1.0).abs() < 1e-8, "alpha={alpha}: {prod}");
        }
    }

    /// Second, independent quadrature for C_2(0): adaptive Simpson with its
    /// own subdivision scheme on the two defining pieces.
    fn c2_zero_simpson_oracle() -> f64 {
        fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let coarse = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let fine = (b - a) / 12.0 * (f(a) + 4.0 * f(lm) + 2.0 * f(m) + 4.0 * f(rm) + f(b));
            if depth == 0 || (fine - coarse).abs() < 1e-12 {
                fine
            } else {
                simpson(f, a, m, depth - 1) + simpson(f, m, b, depth - 1)
            }
        }
        // int_0^inf ln^2(1 + 1/s) ds, substituting s = u/(1-u) to a finite box,
        // with endpoint insets since Simpson evaluates endpoints.
        let first = simpson(
            |u: f64| {
                let s = u / (1.0 - u);
                (1.0 + 1.0 / s).ln().powi(2) / ((1.0 - u) * (1.0 - u))
            },
            1e-9,
            1.0 - 1e-9,
            28,
        );
        // int_0^1 ln^2(1-s) ds
        let second = simpson(|s: f64| (1.0 - s).ln().powi(2), 1e-12, 1.0 - 1e-12, 28);
        first + second
    }

    #[test]
    fn c2_zero_matches_independent_quadrature() {
        let ours = c2(0.0, &spec()).unwrap();
        let oracle = c2_zero_simpson_oracle();
        assert!((ours - oracle).abs() < 1e-6, "ours {ours} vs simpson {oracle}");
    }

    #[test]
    fn c_integrals_reject_out_of_domain() {
        assert!(c1(0.5, &spec()).is_err());
        assert!(c1(-0.5, &spec()).is_err());
        assert!(c2(0.7, &spec()).is_err());
    }

    #[test]
    fn kernel_l2_normalization_examples() {
        assert!((kernel_l2(h(0.7), 1.0, &spec()) - 1.0).abs() < 1e-8);
        assert!((kernel_l2(h(0.3), 2.0, &spec()) - 2.0_f64.powf(0.6)).abs() < 1e-6);
        assert!((kernel_l2(h(0.5), 3.0, &spec()) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_l2_matches_scaling_identity() {
        // int K^2 = C(H)^2 t^{2a+1} C_1(a) with a = H - 1/2.
        for hv in [0.25, 0.6] {
            for t in [0.5, 1.5] {
                let lhs = kernel_l2(h(hv), t, &spec());
                let rhs = c_norm(h(hv)).powi(2)
                    * t.powf(2.0 * hv)
                    * c1(hv - 0.5, &spec()).unwrap();
                assert!((lhs - rhs).abs() < 1e-7, "H={hv} t={t}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn diff_quotient_error_decays_in_eps() {
        let hh = h(0.5);
        let mut prev = f64::INFINITY;
        for eps in [0.08, 0.04, 0.02] {
            let v = diff_quotient_l2_error(hh, 1.0, eps, &spec()).unwrap();
            assert!(v > 0.0 && v < prev, "eps={eps}: {v} !< {prev}");
            prev = v;
        }
    }

    #[test]
    fn diff_quotient_error_is_finite_for_rough_h() {
        let v = diff_quotient_l2_error(h(0.3), 1.0, 0.02, &spec()).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn diff_quotient_error_obeys_small_time_envelope() {
        // Envelope c * t^{2H - 2 delta} (1 + ln^2 t) with delta = 0.1; the
        // constant is fitted on other small times, then checked at t = 0.5.
        let hh = h(0.5);
        let delta = 0.1;
        let shape = |t: f64| t.powf(2.0 * hh.value() - 2.0 * delta) * (1.0 + t.ln().powi(2));
        let fitted = [0.125, 0.25, 1.0]
            .iter()
            .map(|&t| diff_quotient_l2_error(hh, t, 0.04, &spec()).unwrap() / shape(t))
            .fold(f64::MIN, f64::max);
        let at_half = diff_quotient_l2_error(hh, 0.5, 0.04, &spec()).unwrap();
        assert!(
            at_half <= fitted * shape(0.5),
            "value {at_half} exceeds fitted envelope {}",
            fitted * shape(0.5)
        );
    }

    #[test]
    fn derivative_kernel_is_square_integrable_with_lemma_bound() {
        for hv in [0.3, 0.5, 0.7] {
            for t in [0.5, 1.0, 2.0] {
                let val = kernel_dh_l2(h(hv), t, &spec());
                assert!(val.is_finite() && val > 0.0);
                let alpha = hv - 0.5;
                let c1v = c1(alpha, &spec()).unwrap();
                let c2v = c2(alpha, &spec()).unwrap();
                let t2h = t.powf(2.0 * hv);
                let bound = 2.0 * dc_norm(h(hv)).powi(2) * c1v * t2h
                    + 4.0 * c_norm(h(hv)).powi(2) * (c1v * t.ln().powi(2) + c2v) * t2h;
                assert!(val <= bound + 1e-10, "H={hv} t={t}: {val} > bound {bound}");
            }
        }
    }

    #[test]
    fn cell_integral_matches_quadrature() {
        let sp = spec();
        for hv in [0.3, 0.5, 0.7] {
            for (s0, s1) in [(-2.0, -1.0), (-0.5, 0.0), (0.0, 0.4), (0.4, 1.0), (0.5, 1.5)] {
                let closed = kernel_cell_integral(h(hv), 1.0, s0, s1);
                let quad = integrate(|s| kernel(h(hv), 1.0, s), s0, s1, &sp);
                assert!(
                    (closed - quad.value).abs() < 1e-9,
                    "H={hv} cell ({s0},{s1}): {closed} vs {}",
                    quad.value
                );
            }
        }
    }

    #[test]
    fn dh_cell_integral_matches_quadrature() {
        let sp = spec();
        for hv in [0.3, 0.5, 0.7] {
            for (s0, s1) in [(-2.0, -1.0), (-0.5, 0.0), (0.0, 0.4), (0.4, 1.0)] {
                let closed = kernel_dh_cell_integral(h(hv), 1.0, s0, s1);
                let quad = integrate(
                    |s| kernel_dh_unchecked(h(hv), 1.0, s),
                    s0,
                    s1,
                    &sp,
                );
                assert!(
                    (closed - quad.value).abs() < 1e-8,
                    "H={hv} cell ({s0},{s1}): {closed} vs {}",
                    quad.value
                );
            }
        }
    }

    proptest! {
        #[test]
        fn kernel_dh_consistent_with_finite_difference(
            hv in 0.15_f64..0.85,
            t in 0.2_f64..2.0,
            s in -3.0_f64..3.0,
        ) {
            // Stay away from the singular points where the FD itself blows up.
            prop_assume!((s - t).abs() > 1e-2 && s.abs() > 1e-2);
            let e = 1e-5;
            let fd = (kernel(h(hv + e), t, s) - kernel(h(hv - e), t, s)) / (2.0 * e);
            let closed = kernel_dh(h(hv), t, s).unwrap();
            prop_assert!((closed - fd).abs() < 1e-5 * (1.0 + closed.abs()));
        }

        #[test]
        fn dh_cell_is_h_derivative_of_cell(
            hv in 0.2_f64..0.8,
            lo in -2.0_f64..1.5,
            width in 0.01_f64..0.8,
        ) {
            let e = 1e-6;
            let hi = lo + width;
            let fd = (kernel_cell_integral(h(hv + e), 1.0, lo, hi)
                - kernel_cell_integral(h(hv - e), 1.0, lo, hi))
                / (2.0 * e);
            let closed = kernel_dh_cell_integral(h(hv), 1.0, lo, hi);
            prop_assert!((closed - fd).abs() < 1e-6 + 1e-4 * closed.abs());
        }
    }
}
