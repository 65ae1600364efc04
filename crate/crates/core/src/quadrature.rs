//! Adaptive Simpson quadrature and improper-endpoint limits.
//!
//! Radial integrands in this crate span many decades (a cylindrical end near
//! the origin, an asymptotically flat tail at infinity), so [`integrate_log`]
//! integrates in `s = ln r` and the improper lower limit is approached through
//! a geometric sequence of cutoffs, each piece integrated in the same
//! logarithmic variable.

use serde::Serialize;

use crate::scalar::Scalar;

/// Tolerances and subdivision cap for [`adaptive_simpson`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    /// Hard cap on recursion depth; intervals at the cap are accepted as-is.
    pub max_depth: u32,
}

impl<T: Scalar> Default for QuadOptions<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(T::QUAD_TOL),
            rel_tol: T::lit(T::QUAD_RTOL),
            max_depth: 48,
        }
    }
}

impl<T: Scalar> QuadOptions<T> {
    pub fn with_abs_tol(mut self, abs_tol: T) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// Outcome of a finite quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error_estimate: T,
    pub evaluations: usize,
    /// `false` when some subinterval hit the depth cap.
    pub converged: bool,
}

/// An integral that is either finite or known to diverge to `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Integral<T> {
    Finite(T),
    Divergent,
}

impl<T: Scalar> Integral<T> {
    /// Finite value, or `+inf` when divergent.
    pub fn value(self) -> T {
        match self {
            Integral::Finite(v) => v,
            Integral::Divergent => T::infinity(),
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, Integral::Divergent)
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Integral::Finite(v) => Some(v),
            Integral::Divergent => None,
        }
    }

    pub fn map(self, f: impl FnOnce(T) -> T) -> Self {
        match self {
            Integral::Finite(v) => Integral::Finite(f(v)),
            Integral::Divergent => Integral::Divergent,
        }
    }
}

struct Simpson<'a, T, F> {
    f: &'a mut F,
    tol: T,
    max_depth: u32,
    evaluations: usize,
    error: T,
    converged: bool,
}

impl<T: Scalar, F: FnMut(T) -> T> Simpson<'_, T, F> {
    fn eval(&mut self, x: T) -> T {
        self.evaluations += 1;
        (self.f)(x)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(&mut self, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
        let two = T::lit(2.0);
        let m = (a + b) / two;
        let lm = (a + m) / two;
        let rm = (m + b) / two;
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let six = T::lit(6.0);
        let left = (m - a) / six * (fa + T::lit(4.0) * flm + fm);
        let right = (b - m) / six * (fm + T::lit(4.0) * frm + fb);
        let delta = left + right - whole;
        let fifteen = T::lit(15.0);
        if depth >= 3 && delta.abs() <= fifteen * tol {
            self.error = self.error + delta.abs() / fifteen;
            return left + right + delta / fifteen;
        }
        if depth >= self.max_depth || !(delta.is_finite()) {
            self.converged = false;
            self.error = self.error + delta.abs() / fifteen;
            return left + right + delta / fifteen;
        }
        let half = tol / two;
        self.recurse(a, m, fa, flm, fm, left, half, depth + 1)
            + self.recurse(m, b, fm, frm, fb, right, half, depth + 1)
    }
}

/// Adaptive Simpson rule on `[a, b]` with Richardson correction.
///
/// The tolerance target is `max(abs_tol, rel_tol * |first estimate|)` and is
/// halved on each bisection. Every interval is split at least three times
/// before the error test is trusted.
pub fn adaptive_simpson<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    opts: &QuadOptions<T>,
) -> Quadrature<T> {
    if a == b {
        return Quadrature {
            value: T::zero(),
            error_estimate: T::zero(),
            evaluations: 0,
            converged: true,
        };
    }
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) / T::lit(2.0);
    let fm = f(m);
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    let tol = opts.abs_tol.max(opts.rel_tol * whole.abs());
    let mut s = Simpson {
        f: &mut f,
        tol,
        max_depth: opts.max_depth,
        evaluations: 3,
        error: T::zero(),
        converged: true,
    };
    let value = s.recurse(a, b, fa, fm, fb, whole, s.tol, 0);
    Quadrature {
        value,
        error_estimate: s.error,
        evaluations: s.evaluations,
        converged: s.converged,
    }
}

/// `∫_a^b f(r) dr` for `a, b > 0`, integrated in `s = ln r`.
pub fn integrate_log<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    opts: &QuadOptions<T>,
) -> Quadrature<T> {
    debug_assert!(a > T::zero() && b > T::zero());
    if b < a {
        let q = integrate_log(f, b, a, opts);
        return Quadrature { value: -q.value, ..q };
    }
    adaptive_simpson(
        |s: T| {
            let r = s.exp();
            f(r) * r
        },
        a.ln(),
        b.ln(),
        opts,
    )
}

/// Settings for the geometric-cutoff limit used by [`integrate_to_lower_limit`]
/// and [`lower_limit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitOptions<T> {
    /// Cutoff contraction factor per step, in `(0, 1)`.
    pub ratio: T,
    pub max_steps: usize,
    /// Successive piece ratios at or above this value count as non-decay.
    pub divergence_ratio: T,
    /// Number of consecutive non-decaying pieces that declare divergence.
    pub divergence_run: usize,
}

impl<T: Scalar> Default for LimitOptions<T> {
    fn default() -> Self {
        Self {
            ratio: T::lit(0.1),
            max_steps: 400,
            divergence_ratio: T::lit(0.95),
            divergence_run: 3,
        }
    }
}

/// `∫_{lo}^{b} f(r) dr` where the integrand may be singular at `lo`.
///
/// The interval is cut at `lo + (b - lo) q^k`; each piece is integrated in the
/// logarithmic variable `ln(r - lo)`. Pieces that stop shrinking signal
/// divergence; otherwise the partial sums are closed with a geometric
/// (Aitken) tail estimate once the last piece is below tolerance. Intended for
/// integrands of one sign.
pub fn integrate_to_lower_limit<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    lo: T,
    b: T,
    quad: &QuadOptions<T>,
    limit: &LimitOptions<T>,
) -> Integral<T> {
    if b <= lo {
        return Integral::Finite(T::zero());
    }
    let width = b - lo;
    let floor = T::radius_floor() * width.max(T::one());
    let mut upper = width;
    let mut total = T::zero();
    let mut prev_piece: Option<T> = None;
    let mut stalled = 0usize;
    let mut last_ratio = T::zero();
    for _ in 0..limit.max_steps {
        let lower = upper * limit.ratio;
        if lower < floor || lo + lower <= lo {
            break;
        }
        let piece = integrate_log(|x| f(lo + x), lower, upper, quad).value;
        if !piece.is_finite() {
            return Integral::Divergent;
        }
        total = total + piece;
        if !total.is_finite() {
            return Integral::Divergent;
        }
        if let Some(p) = prev_piece {
            let ratio = if p == T::zero() { T::zero() } else { (piece / p).abs() };
            last_ratio = ratio;
            if ratio >= limit.divergence_ratio {
                stalled += 1;
                if stalled >= limit.divergence_run {
                    return Integral::Divergent;
                }
            } else {
                stalled = 0;
            }
            let tol = quad.abs_tol.max(quad.rel_tol * total.abs());
            if piece.abs() <= tol && ratio < T::one() {
                let tail = piece * ratio / (T::one() - ratio);
                return Integral::Finite(total + tail);
            }
        }
        prev_piece = Some(piece);
        upper = lower;
    }
    // Ran out of representable cutoffs: decide from the last observed decay.
    if last_ratio >= T::lit(0.9) {
        Integral::Divergent
    } else if last_ratio < T::one() {
        let piece = prev_piece.unwrap_or(T::zero());
        Integral::Finite(total + piece * last_ratio / (T::one() - last_ratio))
    } else {
        Integral::Divergent
    }
}

/// Result of extrapolating `lim_{r -> lo+} g(r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitEstimate<T> {
    pub value: T,
    /// Last radius probed.
    pub last_radius: T,
    pub converged: bool,
}

/// Extrapolates `g(r)` as `r -> lo+`, starting from `start > lo`.
///
/// Samples `g` at `lo + (start - lo) q^k` and accelerates with Aitken's
/// delta-squared once three samples are available. Stops when successive
/// accelerated values agree to `tol * scale`, where `scale = max(|g(start)|,
/// tiny)`.
pub fn lower_limit<T: Scalar, G: FnMut(T) -> T>(
    mut g: G,
    lo: T,
    start: T,
    tol: T,
    limit: &LimitOptions<T>,
) -> LimitEstimate<T> {
    let width = start - lo;
    let floor = T::radius_floor() * width.max(T::one());
    let g0 = g(start);
    let scale = g0.abs().max(T::min_positive_value());
    let mut samples: Vec<T> = vec![g0];
    let mut offset = width;
    let mut prev_acc: Option<T> = None;
    let mut last_radius = start;
    for _ in 0..limit.max_steps {
        let next = offset * limit.ratio;
        if next < floor {
            break;
        }
        offset = next;
        last_radius = lo + offset;
        let v = g(last_radius);
        if !v.is_finite() {
            break;
        }
        samples.push(v);
        let k = samples.len();
        let acc = if k >= 3 {
            let (x0, x1, x2) = (samples[k - 3], samples[k - 2], samples[k - 1]);
            let d1 = x1 - x0;
            let d2 = x2 - x1;
            let denom = d2 - d1;
            if denom == T::zero() || (d2 / d1).abs() >= T::one() {
                x2
            } else {
                x2 - d2 * d2 / denom
            }
        } else {
            v
        };
        if let Some(p) = prev_acc {
            let raw_step = (samples[k - 1] - samples[k - 2]).abs();
            if (acc - p).abs() <= tol * scale && raw_step <= tol.sqrt() * scale {
                return LimitEstimate {
                    value: acc,
                    last_radius,
                    converged: true,
                };
            }
        }
        prev_acc = Some(acc);
    }
    LimitEstimate {
        value: prev_acc.unwrap_or(g0),
        last_radius,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn opts() -> QuadOptions<f64> {
        QuadOptions::default()
    }

    #[test]
    fn simpson_polynomial_and_trig() {
        let q = adaptive_simpson(|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, &opts());
        assert!((q.value - 0.0).abs() < 1e-12, "{q:?}");
        let q = adaptive_simpson(|x: f64| x.sin(), 0.0, PI, &opts());
        assert!((q.value - 2.0).abs() < 1e-10);
        assert!(q.converged);
    }

    #[test]
    fn empty_interval_is_zero() {
        let q = adaptive_simpson(|x: f64| x.exp(), 1.5, 1.5, &opts());
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn log_variable_handles_wide_ranges() {
        // ∫_{1e-8}^{1e8} dr / r = 16 ln 10
        let q = integrate_log(|r: f64| 1.0 / r, 1e-8, 1e8, &opts());
        assert!((q.value - 16.0 * 10f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn improper_convergent_and_divergent() {
        let lim = LimitOptions::default();
        // ∫_0^1 r^{-1/2} dr = 2
        let v = integrate_to_lower_limit(|r: f64| r.powf(-0.5), 0.0, 1.0, &opts(), &lim);
        assert!((v.value() - 2.0).abs() < 1e-9, "{v:?}");
        // ∫_0^1 dr = 1
        let v = integrate_to_lower_limit(|_r: f64| 1.0, 0.0, 1.0, &opts(), &lim);
        assert!((v.value() - 1.0).abs() < 1e-10);
        // ∫_0^1 dr / r diverges (log)
        let v = integrate_to_lower_limit(|r: f64| 1.0 / r, 0.0, 1.0, &opts(), &lim);
        assert!(v.is_divergent());
        // ∫_0^1 dr / r^2 diverges (power)
        let v = integrate_to_lower_limit(|r: f64| 1.0 / (r * r), 0.0, 1.0, &opts(), &lim);
        assert!(v.is_divergent());
    }

    #[test]
    fn improper_with_shifted_endpoint() {
        let lim = LimitOptions::default();
        // ∫_1^2 (r-1)^{-1/2} dr = 2
        // resolution near the endpoint is limited by r - 1 losing digits
        let v = integrate_to_lower_limit(|r: f64| (r - 1.0).powf(-0.5), 1.0, 2.0, &opts(), &lim);
        assert!((v.value() - 2.0).abs() < 1e-6, "{v:?}");
    }

    #[test]
    fn lower_limit_sqrt_convergence() {
        // 4π(1 + c√r)^4 -> 4π
        let c = 2.3;
        let g = |r: f64| 4.0 * PI * (1.0 + c * r.sqrt()).powi(4);
        let est = lower_limit(g, 0.0, 1e-4, 1e-13, &LimitOptions::default());
        assert!(est.converged);
        assert!((est.value - 4.0 * PI).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn lower_limit_to_zero() {
        let g = |r: f64| 4.0 * PI * r * r;
        let est = lower_limit(g, 0.0, 1e-4, 1e-13, &LimitOptions::default());
        assert!(est.value.abs() < 1e-18, "{est:?}");
    }
}
