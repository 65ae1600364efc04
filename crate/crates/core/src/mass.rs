//! ADM and Hawking mass, the coordinate-sphere area infimum, and the
//! inequalities between them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimize::{bisect, golden_section, log_space};
use crate::quadrature::lower_limit;
use crate::radial::{Dimension, RadialGrid, RadialProfile};
use crate::scalar::Scalar;

/// Number of samples in the tail fit window.
const TAIL_SAMPLES: usize = 64;
/// Relative residual above which a profile is rejected as non-AF.
pub const TAIL_RESIDUAL_TOL: f64 = 1e-6;
/// Tolerance on `|ratio - 1|` for the equality verdict.
pub const EQUALITY_TOL: f64 = 1e-6;
/// Slack allowed when comparing ADM and Hawking mass.
pub const ADM_HAWKING_TOL: f64 = 1e-8;

/// Least-squares fit `u ≈ a + b r^{2-n}` on `[window_lo, window_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticTail<T> {
    pub a: T,
    pub b: T,
    /// Largest `|u - a - b r^{2-n}|` over the window.
    pub fit_residual: T,
    pub window_lo: T,
    pub window_hi: T,
}

impl<T: Scalar> AsymptoticTail<T> {
    /// `2 a b`: the mass after rescaling to the chart where `u -> 1`.
    pub fn mass(&self) -> T {
        T::lit(2.0) * self.a * self.b
    }
}

/// Fits the asymptotic tail on `[r_hi / 10, r_hi]`, with `r_hi` the top of the
/// default grid, and returns `(m, tail)` with `m = 2ab`.
pub fn adm_mass_from_tail<T: Scalar>(profile: &RadialProfile<T>) -> Result<(T, AsymptoticTail<T>)> {
    let hi = RadialGrid::default_for(profile)?.r_hi;
    let lo = hi / T::lit(10.0);
    let p = profile.dim().harmonic_exponent::<T>();
    let rs = log_space(lo, hi, TAIL_SAMPLES);
    let mut xs = Vec::with_capacity(TAIL_SAMPLES);
    let mut us = Vec::with_capacity(TAIL_SAMPLES);
    for &r in &rs {
        xs.push(r.powf(p));
        us.push(profile.u(r)?);
    }
    let count = T::from_usize(TAIL_SAMPLES).unwrap();
    let xm = xs.iter().fold(T::zero(), |s, &x| s + x) / count;
    let um = us.iter().fold(T::zero(), |s, &u| s + u) / count;
    let (mut sxx, mut sxu) = (T::zero(), T::zero());
    for (&x, &u) in xs.iter().zip(&us) {
        sxx = sxx + (x - xm) * (x - xm);
        sxu = sxu + (x - xm) * (u - um);
    }
    let b = if sxx > T::zero() { sxu / sxx } else { T::zero() };
    let a = um - b * xm;
    let fit_residual = xs
        .iter()
        .zip(&us)
        .fold(T::zero(), |m, (&x, &u)| m.max((u - a - b * x).abs()));
    let threshold = T::lit(TAIL_RESIDUAL_TOL) * a.abs();
    if !(a > T::zero()) || !(fit_residual <= threshold) {
        return Err(Error::NotAsymptoticallyFlat {
            residual: fit_residual.to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    let tail = AsymptoticTail { a, b, fit_residual, window_lo: lo, window_hi: hi };
    Ok((tail.mass(), tail))
}

/// Flux mass through the coordinate sphere `S_rho`, in the chart normalized
/// so that `u -> 1`: `-2/(n-2) rho^{n-1} u u'`.
///
/// For `u = a + b r^{2-n}` this is `2 b u(rho)`, which tends to `2ab` with an
/// error of exactly `2 b^2 rho^{2-n}`.
pub fn adm_flux<T: Scalar>(profile: &RadialProfile<T>, rho: T) -> Result<T> {
    let j = profile.jet(rho)?;
    let n = profile.dim();
    let k = n.length_power::<T>();
    Ok(-k * rho.powi(n.get() as i32 - 1) * j.u * j.du)
}

/// Hawking mass of a coordinate sphere in dimension 3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HawkingMassValue<T> {
    pub area: T,
    /// `∫ H^2 = area * H^2` (H is constant on coordinate spheres).
    pub h_squared_integral: T,
    pub value: T,
}

fn require_three(dim: Dimension) -> Result<()> {
    if dim.get() == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim.get()))
    }
}

/// `sqrt(A/16π) (1 - A H^2 / 16π)` for `S_r`.
///
/// The value is evaluated in the cancellation-free form
/// `-2 r^2 u u' - 2 r^3 u'^2`, to which it reduces algebraically.
pub fn hawking_mass<T: Scalar>(profile: &RadialProfile<T>, r: T) -> Result<HawkingMassValue<T>> {
    require_three(profile.dim())?;
    let j = profile.jet(r)?;
    let g = profile.sphere_geometry(r)?;
    let two = T::lit(2.0);
    Ok(HawkingMassValue {
        area: g.area,
        h_squared_integral: g.area * g.mean_curvature * g.mean_curvature,
        value: -two * r * r * j.u * j.du - two * r * r * r * j.du * j.du,
    })
}

/// Infimum of `sphere_area` over coordinate spheres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AreaInfimum<T> {
    pub value: T,
    /// Radius where the infimum is attained; `None` for a throat limit.
    pub argmin: Option<T>,
    /// Areas decrease all the way to the inner end of the domain.
    pub throat_limit: bool,
    /// A radius with `H = 0`, if the mean curvature changes sign on the grid.
    pub horizon_radius: Option<T>,
}

fn mean_curvature_root<T: Scalar>(profile: &RadialProfile<T>, a: T, b: T) -> Option<T> {
    let h = |r: T| profile.sphere_mean_curvature(r).unwrap_or(T::nan());
    bisect(h, a, b, T::epsilon() * b, 400)
}

/// Scans `grid` for the smallest coordinate-sphere area and refines it.
///
/// An interior minimum is refined by bisection on `H` when the mean curvature
/// changes sign in the bracket and by golden section otherwise. When the
/// areas decrease toward the inner end of the grid the infimum is taken as
/// the limit at the inner end of the domain and flagged as a throat limit.
pub fn area_infimum_radial<T: Scalar>(
    profile: &RadialProfile<T>,
    grid: &RadialGrid<T>,
) -> Result<AreaInfimum<T>> {
    let pts = grid.points();
    let mut areas = Vec::with_capacity(pts.len());
    let mut curv = Vec::with_capacity(pts.len());
    for &r in &pts {
        let g = profile.sphere_geometry(r)?;
        areas.push(g.area);
        curv.push(g.mean_curvature);
    }
    let horizon_radius = (0..pts.len() - 1)
        .find(|&i| curv[i] <= T::zero() && curv[i + 1] > T::zero())
        .and_then(|i| mean_curvature_root(profile, pts[i], pts[i + 1]));
    let imin = (0..areas.len())
        .min_by(|&i, &j| areas[i].partial_cmp(&areas[j]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let last = pts.len() - 1;
    let area = |r: T| profile.sphere_area(r).unwrap_or(T::nan());
    if imin == 0 {
        let domain = profile.domain();
        let at_lo = areas[0];
        if !domain.lo_closed || grid.r_lo > domain.lo {
            if !domain.lo_closed {
                let est = lower_limit(
                    area,
                    domain.lo,
                    grid.r_lo,
                    T::lit(T::QUAD_TOL),
                    profile.limit_options(),
                );
                let value = if est.value.is_finite() { est.value.min(at_lo).max(T::zero()) } else { at_lo };
                return Ok(AreaInfimum { value, argmin: None, throat_limit: true, horizon_radius });
            }
            let v = area(domain.lo);
            if v < at_lo {
                return Ok(AreaInfimum { value: v, argmin: None, throat_limit: true, horizon_radius });
            }
        }
        return Ok(AreaInfimum { value: at_lo, argmin: None, throat_limit: true, horizon_radius });
    }
    if imin == last {
        return Ok(AreaInfimum {
            value: areas[last],
            argmin: Some(pts[last]),
            throat_limit: false,
            horizon_radius,
        });
    }
    let (a, b) = (pts[imin - 1], pts[imin + 1]);
    let r_star = if curv[imin - 1] <= T::zero() && curv[imin + 1] > T::zero() {
        mean_curvature_root(profile, a, b)
    } else {
        None
    }
    .unwrap_or_else(|| golden_section(area, a, b, T::epsilon().sqrt() * b, 400).x);
    let v = area(r_star).min(areas[imin]);
    let r_star = if v < area(r_star) { pts[imin] } else { r_star };
    Ok(AreaInfimum { value: v, argmin: Some(r_star), throat_limit: false, horizon_radius })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Strict,
    EqualityWithinTol,
    Violated,
}

impl Verdict {
    pub fn holds(self) -> bool {
        !matches!(self, Verdict::Violated)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Strict => "strict",
            Verdict::EqualityWithinTol => "equality-within-tol",
            Verdict::Violated => "violated",
        }
    }
}

/// `m` against `sqrt(A_g / 16π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PenroseReport<T> {
    pub adm_mass: T,
    /// Radial area infimum: taken over coordinate spheres only.
    pub area_infimum: T,
    pub bound: T,
    /// `m / bound`; absent when the bound is too small to divide by.
    pub ratio: Option<T>,
    pub verdict: Verdict,
    pub horizon_radius: Option<T>,
}

/// Bounds below this are treated as zero and compared additively.
const DEGENERATE_BOUND: f64 = 1e-6;

pub fn penrose_verdict<T: Scalar>(mass: T, bound: T, tol: T) -> (Option<T>, Verdict) {
    if bound >= T::lit(DEGENERATE_BOUND) {
        let ratio = mass / bound;
        let v = if (ratio - T::one()).abs() <= tol {
            Verdict::EqualityWithinTol
        } else if ratio > T::one() {
            Verdict::Strict
        } else {
            Verdict::Violated
        };
        (Some(ratio), v)
    } else {
        let v = if (mass - bound).abs() <= tol {
            Verdict::EqualityWithinTol
        } else if mass > bound {
            Verdict::Strict
        } else {
            Verdict::Violated
        };
        (None, v)
    }
}

/// Everything [`penrose_check`] computes on the way to its verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PenroseAnalysis<T> {
    pub report: PenroseReport<T>,
    pub tail: AsymptoticTail<T>,
    pub infimum: AreaInfimum<T>,
}

pub fn penrose_analysis<T: Scalar>(
    profile: &RadialProfile<T>,
    grid: &RadialGrid<T>,
    equality_tol: T,
) -> Result<PenroseAnalysis<T>> {
    require_three(profile.dim())?;
    let (mass, tail) = adm_mass_from_tail(profile)?;
    let infimum = area_infimum_radial(profile, grid)?;
    let sixteen_pi = T::lit(16.0) * T::PI();
    let bound = (infimum.value.max(T::zero()) / sixteen_pi).sqrt();
    let (ratio, verdict) = penrose_verdict(mass, bound, equality_tol);
    Ok(PenroseAnalysis {
        report: PenroseReport {
            adm_mass: mass,
            area_infimum: infimum.value,
            bound,
            ratio,
            verdict,
            horizon_radius: infimum.horizon_radius,
        },
        tail,
        infimum,
    })
}

/// Penrose check on the default grid with the default equality tolerance.
pub fn penrose_check<T: Scalar>(profile: &RadialProfile<T>) -> Result<PenroseReport<T>> {
    let grid = RadialGrid::default_for(profile)?;
    Ok(penrose_analysis(profile, &grid, T::lit(EQUALITY_TOL))?.report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdmHawkingCheck<T> {
    pub r: T,
    pub adm_mass: T,
    pub hawking_mass: T,
    pub passed: bool,
    /// `|m - m_H| <= 1e-8`.
    pub equality: bool,
}

/// `m >= m_H(S_r) - 1e-8`, refused unless `S_r` is outer-minimizing among the
/// coordinate spheres of `grid`.
pub fn adm_hawking_check<T: Scalar>(
    profile: &RadialProfile<T>,
    r: T,
    grid: &RadialGrid<T>,
) -> Result<AdmHawkingCheck<T>> {
    require_three(profile.dim())?;
    let a = profile.sphere_area(r)?;
    let slack = T::one() - T::lit(1e-12);
    for rp in grid.points().into_iter().filter(|&rp| rp >= r) {
        if profile.sphere_area(rp)? < a * slack {
            return Err(Error::NotOuterMinimizing {
                r: r.to_f64_lossy(),
                r_prime: rp.to_f64_lossy(),
            });
        }
    }
    let (m, _) = adm_mass_from_tail(profile)?;
    let mh = hawking_mass(profile, r)?.value;
    let tol = T::lit(ADM_HAWKING_TOL);
    Ok(AdmHawkingCheck {
        r,
        adm_mass: m,
        hawking_mass: mh,
        passed: m >= mh - tol,
        equality: (m - mh).abs() <= tol,
    })
}
