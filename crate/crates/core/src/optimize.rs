//! One-dimensional search: golden-section minimization and bisection.

use crate::scalar::Scalar;

/// Result of [`golden_section`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoldenResult<T> {
    pub x: T,
    pub fx: T,
    pub iterations: usize,
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Only interior points are evaluated, so `f` may be singular at either end.
/// Iterates until the bracket is narrower than `x_tol`.
pub fn golden_section<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    mut a: T,
    mut b: T,
    x_tol: T,
    max_iter: usize,
) -> GoldenResult<T> {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while (b - a).abs() > x_tol && iterations < max_iter {
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        GoldenResult { x: x1, fx: f1, iterations }
    } else {
        GoldenResult { x: x2, fx: f2, iterations }
    }
}

/// Bisection for a sign change of `f` on `[a, b]`.
///
/// Returns `None` when `f(a)` and `f(b)` share a sign.
pub fn bisect<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    mut a: T,
    mut b: T,
    x_tol: T,
    max_iter: usize,
) -> Option<T> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == T::zero() {
        return Some(a);
    }
    if fb == T::zero() {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..max_iter {
        let m = (a + b) / T::lit(2.0);
        if (b - a).abs() <= x_tol || m == a || m == b {
            return Some(m);
        }
        let fm = f(m);
        if fm == T::zero() {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some((a + b) / T::lit(2.0))
}

/// `count` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_space<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    assert!(count >= 2, "log_space needs at least two points");
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / T::from_usize(count - 1).expect("count");
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                (llo + step * T::from_usize(i).expect("index")).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let r = golden_section(|x: f64| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-12, 200);
        assert!((r.x - 0.3).abs() < 1e-7);
        assert!((r.fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_tolerates_singular_endpoint() {
        // f -> +inf at x = 0
        let r = golden_section(|x: f64| 1.0 / x + x, 0.0, 4.0, 1e-12, 200);
        assert!((r.x - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bisect_sqrt2() {
        let x = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x: f64| x * x + 1.0, 0.0, 2.0, 1e-14, 200).is_none());
    }

    #[test]
    fn log_space_endpoints_exact() {
        let g = log_space(1e-4_f64, 1e4, 4096);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[4095], 1e4);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
