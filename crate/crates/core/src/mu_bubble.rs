//! Radial mu-bubbles: minimizers of
//! `A(ρ) + ∫_{ρ < r < r0} h(d(r)) dV` over coordinate balls `{r < ρ}`,
//! where `d` is the (shrunk) signed distance to the anchor sphere `S_{r0}`
//! and `h(t) = ε coth(3εt/4 + β)`.
//!
//! The derivative of the functional in `ρ` is `vol(ρ) (H(ρ) - h(d(ρ)))`, so
//! interior critical points are exactly the spheres satisfying the
//! Euler-Lagrange condition `H = h ∘ d`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mass::{area_infimum_radial, hawking_mass, penrose_analysis, Verdict, EQUALITY_TOL};
use crate::optimize::{bisect, golden_section, log_space};
use crate::quadrature::{integrate_log, Integral};
use crate::radial::{RadialGrid, RadialProfile};
use crate::scalar::{coth, Scalar};

/// `h(t) = ε coth(3εt/4 + β)` on `t > -4β/(3ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrescribedMeanCurvature<T> {
    pub epsilon: T,
    pub beta: T,
}

impl<T: Scalar> PrescribedMeanCurvature<T> {
    pub fn new(epsilon: T, beta: T) -> Result<Self> {
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { epsilon, beta })
    }

    /// Left end of the domain, `-4β/(3ε)`.
    pub fn barrier(&self) -> T {
        -T::lit(4.0) * self.beta / (T::lit(3.0) * self.epsilon)
    }

    fn argument(&self, t: T) -> Result<T> {
        let x = T::lit(0.75) * self.epsilon * t + self.beta;
        if t <= self.barrier() || !(x > T::zero()) {
            return Err(Error::Barrier {
                t: t.to_f64_lossy(),
                barrier: self.barrier().to_f64_lossy(),
            });
        }
        Ok(x)
    }

    pub fn eval(&self, t: T) -> Result<T> {
        Ok(self.epsilon * coth(self.argument(t)?))
    }

    /// `h'(t) = -(3/4) ε^2 / sinh^2(3εt/4 + β)`.
    pub fn derivative(&self, t: T) -> Result<T> {
        let s = self.argument(t)?.sinh();
        Ok(-T::lit(0.75) * self.epsilon * self.epsilon / (s * s))
    }

    /// `2h' + (3/2) h^2 - (3/2) ε^2`, identically zero.
    pub fn ode_residual(&self, t: T) -> Result<T> {
        let h = self.eval(t)?;
        let dh = self.derivative(t)?;
        let c = T::lit(1.5);
        Ok(T::lit(2.0) * dh + c * h * h - c * self.epsilon * self.epsilon)
    }

    /// `h` without the domain check; `+inf` at and below the barrier.
    fn eval_or_inf(&self, t: T) -> T {
        self.eval(t).unwrap_or(T::infinity())
    }
}

pub fn h_eval<T: Scalar>(h: &PrescribedMeanCurvature<T>, t: T) -> Result<T> {
    h.eval(t)
}

pub fn h_ode_residual<T: Scalar>(h: &PrescribedMeanCurvature<T>, t: T) -> Result<T> {
    h.ode_residual(t)
}

pub const DEFAULT_LIP_FACTOR: f64 = 1.0 - 1e-6;
pub const DEFAULT_SCAN_POINTS: usize = 512;
pub const DEFAULT_MAX_DOUBLINGS: usize = 60;

/// Knobs shared by the solvers in this module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MuBubbleOptions<T> {
    pub lip_factor: T,
    pub scan_points: usize,
    /// Double β until the minimizer is interior with `H < 2ε`.
    pub escalate_beta: bool,
    pub max_doublings: usize,
}

impl<T: Scalar> Default for MuBubbleOptions<T> {
    fn default() -> Self {
        Self {
            lip_factor: T::lit(DEFAULT_LIP_FACTOR),
            scan_points: DEFAULT_SCAN_POINTS,
            escalate_beta: true,
            max_doublings: DEFAULT_MAX_DOUBLINGS,
        }
    }
}

/// The mu-bubble problem anchored at `S_{r0}` (dimension 3).
#[derive(Clone, Debug)]
pub struct MuBubbleProblem<T: Scalar> {
    profile: RadialProfile<T>,
    anchor_radius: T,
    h: PrescribedMeanCurvature<T>,
    lip_factor: T,
    anchor_curvature: T,
}

impl<T: Scalar> MuBubbleProblem<T> {
    pub fn new(profile: RadialProfile<T>, anchor_radius: T, h: PrescribedMeanCurvature<T>) -> Result<Self> {
        if profile.dim().get() != 3 {
            return Err(Error::UnsupportedDimension(profile.dim().get()));
        }
        let h0 = profile.sphere_mean_curvature(anchor_radius)?;
        let h_at_zero = h.eval(T::zero())?;
        if !(h0 > h_at_zero) {
            return Err(Error::BarrierCondition {
                h0: h0.to_f64_lossy(),
                h_at_zero: h_at_zero.to_f64_lossy(),
            });
        }
        Ok(Self {
            profile,
            anchor_radius,
            h,
            lip_factor: T::lit(DEFAULT_LIP_FACTOR),
            anchor_curvature: h0,
        })
    }

    pub fn with_lip_factor(mut self, lip: T) -> Result<Self> {
        if !(lip > T::zero() && lip < T::one()) {
            return Err(Error::Parameter(format!("lip_factor must lie in (0, 1), got {lip}")));
        }
        self.lip_factor = lip;
        Ok(self)
    }

    pub fn profile(&self) -> &RadialProfile<T> {
        &self.profile
    }

    pub fn anchor_radius(&self) -> T {
        self.anchor_radius
    }

    pub fn anchor_curvature(&self) -> T {
        self.anchor_curvature
    }

    pub fn h(&self) -> &PrescribedMeanCurvature<T> {
        &self.h
    }

    pub fn lip_factor(&self) -> T {
        self.lip_factor
    }

    /// `lip * ∫_a^b u^2 dr`, signed by the order of `a` and `b`.
    fn shrunk_length(&self, a: T, b: T) -> T {
        let q = integrate_log(
            |r| self.profile.length_density(r).unwrap_or(T::nan()),
            a,
            b,
            self.profile.quadrature(),
        );
        self.lip_factor * q.value
    }

    /// Signed, shrunk radial distance to `S_{r0}`: negative inside.
    pub fn dist_to_anchor(&self, r: T) -> Result<T> {
        let r0 = self.anchor_radius;
        let (lo, hi, sign) = if r <= r0 { (r, r0, -T::one()) } else { (r0, r, T::one()) };
        match self.profile.geodesic_distance(lo, hi)? {
            Integral::Finite(v) => Ok(sign * self.lip_factor * v),
            Integral::Divergent => Ok(sign * T::infinity()),
        }
    }

    /// Coordinate radius where `d` reaches the barrier of `h`, if it does so
    /// inside the domain.
    pub fn barrier_radius(&self) -> Option<T> {
        let target = -self.h.barrier();
        let domain = self.profile.domain();
        let floor = if domain.lo_closed { domain.lo } else { domain.lo.max(T::radius_floor()) };
        let mut r = self.anchor_radius;
        let mut acc = T::zero();
        while r > floor {
            let next = (r / T::lit(2.0)).max(floor);
            let seg = self.shrunk_length(next, r);
            if !seg.is_finite() {
                return None;
            }
            if acc + seg >= target {
                let (top, base) = (r, acc);
                let f = |s: T| base + self.shrunk_length(s.exp(), top) - target;
                let s = bisect(f, next.ln(), top.ln(), T::epsilon() * T::lit(4.0), 200)?;
                return Some(s.exp());
            }
            acc = acc + seg;
            r = next;
        }
        None
    }

    /// `∫_a^b h(d(r)) dV` with `d(r) = d_b - lip ∫_r^b u^2`; either order.
    fn bulk(&self, a: T, b: T, d_b: T) -> T {
        if a == b {
            return T::zero();
        }
        integrate_log(
            |r| {
                let d = d_b - self.shrunk_length(r, b);
                self.h.eval_or_inf(d) * self.profile.volume_density(r).unwrap_or(T::nan())
            },
            a,
            b,
            self.profile.quadrature(),
        )
        .value
    }

    /// The functional on `count` log-spaced radii from the barrier radius (or
    /// the bottom of the domain) up to `r0`, accumulated from `r0` inward.
    /// Radii past the point where `d` reaches the barrier get `+inf`.
    pub fn scan(&self, count: usize) -> Result<FunctionalScan<T>> {
        let r0 = self.anchor_radius;
        let domain = self.profile.domain();
        let barrier_r = self.barrier_radius();
        let lower = barrier_r.unwrap_or(if domain.lo_closed {
            domain.lo
        } else {
            domain.lo.max(T::radius_floor())
        });
        if !(lower < r0) {
            return Err(Error::DegenerateMinimizer {
                rho: r0.to_f64_lossy(),
                lower: lower.to_f64_lossy(),
                upper: r0.to_f64_lossy(),
            });
        }
        let pts = log_space(lower, r0, count.max(8));
        let m = pts.len();
        let mut d = vec![T::neg_infinity(); m];
        let mut bulk = vec![T::infinity(); m];
        let mut f = vec![T::infinity(); m];
        d[m - 1] = T::zero();
        bulk[m - 1] = T::zero();
        f[m - 1] = self.profile.sphere_area(r0)?;
        let barrier = self.h.barrier();
        for i in (0..m - 1).rev() {
            if i == 0 && barrier_r.is_some() {
                break;
            }
            let di = d[i + 1] - self.shrunk_length(pts[i], pts[i + 1]);
            if !(di > barrier) {
                break;
            }
            let bi = bulk[i + 1] + self.bulk(pts[i], pts[i + 1], d[i + 1]);
            if !bi.is_finite() {
                break;
            }
            d[i] = di;
            bulk[i] = bi;
            f[i] = self.profile.sphere_area(pts[i])? + bi;
        }
        Ok(FunctionalScan {
            radii: pts,
            distance: d,
            bulk,
            functional: f,
            lower,
            barrier_radius: barrier_r,
        })
    }

    /// `A(ρ) + ∫_{ρ}^{r0} h(d(r)) dV`.
    pub fn functional_eval(&self, rho: T) -> Result<T> {
        let r0 = self.anchor_radius;
        if rho > r0 {
            return Err(Error::OutOfCollection {
                rho: rho.to_f64_lossy(),
                r0: r0.to_f64_lossy(),
            });
        }
        let d = self.dist_to_anchor(rho)?;
        if d <= self.h.barrier() {
            return Err(Error::Barrier {
                t: d.to_f64_lossy(),
                barrier: self.h.barrier().to_f64_lossy(),
            });
        }
        Ok(self.profile.sphere_area(rho)? + self.bulk(rho, r0, T::zero()))
    }

    /// Global minimizer over the radial collection: a log-spaced scan of the
    /// functional, accumulated from `r0` inward, then a root of `H - h ∘ d`
    /// (or golden section when the bracket shows no sign change).
    pub fn minimize(&self) -> Result<MuBubbleSolution<T>> {
        self.minimize_with(DEFAULT_SCAN_POINTS)
    }

    pub fn minimize_with(&self, scan_points: usize) -> Result<MuBubbleSolution<T>> {
        let r0 = self.anchor_radius;
        let scan = self.scan(scan_points)?;
        let FunctionalScan { radii: pts, distance: d, bulk, functional: f, lower, barrier_radius: barrier_r } = scan;
        let m = pts.len();
        let degenerate = |rho: T| Error::DegenerateMinimizer {
            rho: rho.to_f64_lossy(),
            lower: lower.to_f64_lossy(),
            upper: r0.to_f64_lossy(),
        };
        let imin = (0..m)
            .min_by(|&i, &j| f[i].partial_cmp(&f[j]).unwrap_or(std::cmp::Ordering::Greater))
            .unwrap_or(m - 1);
        if imin == 0 || imin == m - 1 || !f[imin - 1].is_finite() {
            return Err(degenerate(pts[imin]));
        }

        // refine inside [pts[imin-1], pts[imin+1]], anchored at the top
        let (a, b) = (pts[imin - 1], pts[imin + 1]);
        let (d_b, bulk_b) = (d[imin + 1], bulk[imin + 1]);
        let dist = |rho: T| d_b - self.shrunk_length(rho, b);
        let el = |rho: T| {
            self.profile.sphere_mean_curvature(rho).unwrap_or(T::nan()) - self.h.eval_or_inf(dist(rho))
        };
        let g = |rho: T| self.profile.sphere_area(rho).unwrap_or(T::nan()) + self.bulk(rho, b, d_b);
        let x_tol = (T::lit(1e-10) * r0).min(T::lit(16.0) * T::epsilon() * a);
        let (ea, eb) = (el(a), el(b));
        let rho = if ea < T::zero() && eb > T::zero() {
            bisect(el, a, b, x_tol, 400).unwrap_or(pts[imin])
        } else {
            golden_section(g, a, b, x_tol, 400).x
        };

        let d_star = dist(rho);
        let h_star = self.h.eval(d_star)?;
        let mean_curvature = self.profile.sphere_mean_curvature(rho)?;
        let g0 = g(rho);
        let step = T::lit(1e-4) * rho;
        let second = g(rho + step) + g(rho - step) - T::lit(2.0) * g0;
        let noise = T::lit(1e3) * T::epsilon() * g0.abs().max(T::one());
        Ok(MuBubbleSolution {
            rho_star: rho,
            area: self.profile.sphere_area(rho)?,
            functional_value: g0 + bulk_b,
            mean_curvature,
            el_residual: (mean_curvature - h_star).abs(),
            second_order_ok: second >= -noise,
            signed_distance: d_star,
            prescribed_curvature: h_star,
            epsilon: self.h.epsilon,
            beta: self.h.beta,
            barrier_radius: barrier_r,
        })
    }
}

/// Output of [`MuBubbleProblem::scan`], ordered by increasing radius.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalScan<T> {
    pub radii: Vec<T>,
    /// Signed shrunk distance `d` to the anchor.
    pub distance: Vec<T>,
    /// `∫_{r}^{r0} h(d) dV`.
    pub bulk: Vec<T>,
    pub functional: Vec<T>,
    pub lower: T,
    pub barrier_radius: Option<T>,
}

/// A radial minimizer `Σ = S_{rho_star}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MuBubbleSolution<T> {
    pub rho_star: T,
    pub area: T,
    pub functional_value: T,
    pub mean_curvature: T,
    /// `|H(ρ*) - h(d(ρ*))|`.
    pub el_residual: T,
    /// Discrete second derivative of the functional at `ρ*` is nonnegative.
    pub second_order_ok: bool,
    pub signed_distance: T,
    pub prescribed_curvature: T,
    pub epsilon: T,
    pub beta: T,
    pub barrier_radius: Option<T>,
}

/// Smallest `β` (bisection to `1e-8`) with `ε coth β <= 0.9 H0`, doubled.
pub fn choose_beta_for<T: Scalar>(h0: T, epsilon: T) -> Result<T> {
    let target = T::lit(0.9) * h0;
    if !(epsilon > T::zero()) || !(epsilon < h0) || !(epsilon < target) {
        return Err(Error::EpsilonTooLarge {
            epsilon: epsilon.to_f64_lossy(),
            h0: h0.to_f64_lossy(),
        });
    }
    let f = |b: T| epsilon * coth(b) - target;
    let mut hi = T::one();
    while f(hi) > T::zero() {
        hi = hi * T::lit(2.0);
    }
    let mut lo = T::min_positive_value().sqrt();
    let tol = T::lit(1e-8);
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(2.0) * hi)
}

/// [`choose_beta_for`] with `H0` the mean curvature of `S_{r0}`.
pub fn choose_beta<T: Scalar>(profile: &RadialProfile<T>, r0: T, epsilon: T) -> Result<T> {
    choose_beta_for(profile.sphere_mean_curvature(r0)?, epsilon)
}

/// A minimizer together with the β schedule that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BubbleRun<T> {
    pub epsilon: T,
    pub beta_initial: T,
    pub beta: T,
    pub doublings: usize,
    pub solution: MuBubbleSolution<T>,
}

/// Chooses β, minimizes, and (when enabled) doubles β until the minimizer is
/// interior with `0 < H(ρ*) < 2ε`.
pub fn solve_mu_bubble<T: Scalar>(
    profile: &RadialProfile<T>,
    r0: T,
    epsilon: T,
    opts: &MuBubbleOptions<T>,
) -> Result<BubbleRun<T>> {
    let beta_initial = choose_beta(profile, r0, epsilon)?;
    let mut beta = beta_initial;
    let mut doublings = 0;
    loop {
        let h = PrescribedMeanCurvature::new(epsilon, beta)?;
        let problem = MuBubbleProblem::new(profile.clone(), r0, h)?.with_lip_factor(opts.lip_factor)?;
        let outcome = problem.minimize_with(opts.scan_points);
        let retry = match &outcome {
            Ok(s) => !(s.mean_curvature > T::zero() && s.mean_curvature < T::lit(2.0) * epsilon),
            Err(Error::DegenerateMinimizer { .. }) => true,
            Err(_) => false,
        };
        if !opts.escalate_beta || !retry || doublings >= opts.max_doublings {
            return outcome.map(|solution| BubbleRun { epsilon, beta_initial, beta, doublings, solution });
        }
        beta = beta * T::lit(2.0);
        doublings += 1;
    }
}

/// Intrinsic diameter of `Σ` against `4π/(3ε)`; reported, never enforced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiameterReport<T> {
    pub intrinsic_diameter: T,
    pub bound: T,
    pub within_bound: bool,
}

pub fn diameter_bound<T: Scalar>(epsilon: T) -> T {
    T::lit(4.0) * T::PI() / (T::lit(3.0) * epsilon)
}

pub fn diameter_report<T: Scalar>(solution: &MuBubbleSolution<T>, epsilon: T) -> DiameterReport<T> {
    // round sphere of area A has diameter π sqrt(A / 4π)
    let diameter = T::PI() * (solution.area / (T::lit(4.0) * T::PI())).sqrt();
    let bound = diameter_bound(epsilon);
    DiameterReport { intrinsic_diameter: diameter, bound, within_bound: diameter <= bound }
}

/// `ε` halving from 0.2 down to `1e-3`, ending exactly at `1e-3`.
pub fn default_epsilon_schedule<T: Scalar>() -> Vec<T> {
    let stop = T::lit(1e-3);
    let mut out = Vec::new();
    let mut e = T::lit(0.2);
    while e > stop {
        out.push(e);
        e = e / T::lit(2.0);
    }
    out.push(stop);
    out
}

/// One entry of [`horizon_sequence`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonStep<T> {
    pub epsilon: T,
    pub run: Option<BubbleRun<T>>,
    pub error: Option<String>,
    /// [`Error::kind`] of `error`.
    pub error_kind: Option<&'static str>,
    /// Hawking mass of `Σ_i`: `sqrt(A/16π)(1 - A H^2/16π)`.
    pub hawking_bound: Option<T>,
    /// `sqrt(A_g/16π) - sqrt(A/16π) A H^2/16π`, using `A >= A_g`.
    pub area_infimum_bound: Option<T>,
    pub area_in_range: Option<bool>,
    pub curvature_below_2eps: Option<bool>,
    pub diameter: Option<DiameterReport<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonSequence<T> {
    pub anchor_radius: T,
    pub anchor_area: T,
    pub area_infimum: T,
    pub steps: Vec<HorizonStep<T>>,
}

impl<T: Scalar> HorizonSequence<T> {
    /// Hawking bounds of the successful steps, in order.
    pub fn hawking_bounds(&self) -> Vec<T> {
        self.steps.iter().filter_map(|s| s.hawking_bound).collect()
    }
}

/// Slack used when comparing areas against `[A_g, A(r0)]`.
const AREA_SLACK: f64 = 1e-9;

/// Runs [`solve_mu_bubble`] for each `ε` and records the mass lower bounds of
/// the resulting spheres. Failing steps are recorded and skipped.
pub fn horizon_sequence<T: Scalar>(
    profile: &RadialProfile<T>,
    r0: T,
    epsilons: &[T],
    opts: &MuBubbleOptions<T>,
) -> Result<HorizonSequence<T>> {
    if profile.dim().get() != 3 {
        return Err(Error::UnsupportedDimension(profile.dim().get()));
    }
    let grid = RadialGrid::default_for(profile)?;
    let area_infimum = area_infimum_radial(profile, &grid)?.value;
    let anchor_area = profile.sphere_area(r0)?;
    let sixteen_pi = T::lit(16.0) * T::PI();
    let steps = epsilons
        .iter()
        .map(|&eps| match solve_mu_bubble(profile, r0, eps, opts) {
            Ok(run) => {
                let s = run.solution;
                let ah2 = s.area * s.mean_curvature * s.mean_curvature / sixteen_pi;
                let hawking = hawking_mass(profile, s.rho_star).ok().map(|h| h.value);
                let slack = T::lit(AREA_SLACK) * anchor_area;
                HorizonStep {
                    epsilon: eps,
                    hawking_bound: hawking,
                    area_infimum_bound: Some(
                        (area_infimum / sixteen_pi).sqrt() - (s.area / sixteen_pi).sqrt() * ah2,
                    ),
                    area_in_range: Some(s.area >= area_infimum - slack && s.area <= anchor_area + slack),
                    curvature_below_2eps: Some(s.mean_curvature < T::lit(2.0) * eps),
                    diameter: Some(diameter_report(&s, eps)),
                    run: Some(run),
                    error: None,
                    error_kind: None,
                }
            }
            Err(e) => HorizonStep {
                epsilon: eps,
                run: None,
                error: Some(e.to_string()),
                error_kind: Some(e.kind()),
                hawking_bound: None,
                area_infimum_bound: None,
                area_in_range: None,
                curvature_below_2eps: None,
                diameter: None,
            },
        })
        .collect();
    Ok(HorizonSequence { anchor_radius: r0, anchor_area, area_infimum, steps })
}

/// One step `ε_k = ε^{γ^k}` of [`rigidity_iteration`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityStep<T> {
    pub k: usize,
    pub epsilon: T,
    pub run: Option<BubbleRun<T>>,
    pub error: Option<String>,
    /// [`Error::kind`] of `error`.
    pub error_kind: Option<&'static str>,
    /// `A_g + Λ0 ε_k^2`; present only for equality-case profiles.
    pub area_bound: Option<T>,
    pub area_ok: Option<bool>,
    /// Volume between `Σ_{k+1}` and `Σ_k`.
    pub annulus_volume: Option<T>,
    /// `Λ0 ε_k^{2-γ}`.
    pub volume_bound: T,
    pub volume_ok: Option<bool>,
    /// `ρ*_{k+1} <= ρ*_k`.
    pub nested: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityTrace<T> {
    pub gamma: T,
    pub epsilon: T,
    pub lambda0: T,
    pub epsilon0: T,
    pub area_infimum: T,
    /// The Penrose verdict was equality, so the area bound applies.
    pub equality_case: bool,
    pub steps: Vec<RigidityStep<T>>,
    /// Sum of all recorded annulus volumes.
    pub cumulative_volume: T,
    /// `Λ0 ε^{γ(2-γ)} (1 - ε^{(γ-1)(2-γ)})^{-1}`.
    pub cumulative_bound: T,
    pub cumulative_ok: bool,
    pub all_passed: bool,
}

pub const RIGIDITY_MIN_EPSILON: f64 = 1e-6;
pub const RIGIDITY_MAX_STEPS: usize = 20;

/// Runs the `ε^{γ^k}` schedule (while `ε_k >= 1e-6`, at most `k = 20`) and
/// checks the area, annulus-volume and cumulative-volume bounds.
pub fn rigidity_iteration<T: Scalar>(
    profile: &RadialProfile<T>,
    r0: T,
    epsilon: T,
    gamma: T,
    opts: &MuBubbleOptions<T>,
) -> Result<RigidityTrace<T>> {
    if profile.dim().get() != 3 {
        return Err(Error::UnsupportedDimension(profile.dim().get()));
    }
    if !(gamma > T::one() && gamma < T::lit(2.0)) {
        return Err(Error::Parameter(format!("gamma must lie in (1, 2), got {gamma}")));
    }
    let anchor_area = profile.sphere_area(r0)?;
    let epsilon0 = (T::lit(8.0) * T::PI() / anchor_area).sqrt();
    if !(epsilon > T::zero() && epsilon < epsilon0) {
        return Err(Error::Parameter(format!(
            "epsilon must lie in (0, epsilon0 = {epsilon0}), got {epsilon}"
        )));
    }
    let grid = RadialGrid::default_for(profile)?;
    let analysis = penrose_analysis(profile, &grid, T::lit(EQUALITY_TOL));
    let (area_infimum, equality_case) = match &analysis {
        Ok(a) => (a.report.area_infimum, a.report.verdict == Verdict::EqualityWithinTol),
        Err(_) => (area_infimum_radial(profile, &grid)?.value, false),
    };
    let lambda0 = area_infimum * anchor_area / (T::lit(2.0) * T::PI());

    let mut steps: Vec<RigidityStep<T>> = Vec::new();
    let mut k = 0usize;
    loop {
        let eps_k = epsilon.powf(gamma.powi(k as i32));
        if eps_k < T::lit(RIGIDITY_MIN_EPSILON) || k > RIGIDITY_MAX_STEPS {
            break;
        }
        let (run, error, error_kind) = match solve_mu_bubble(profile, r0, eps_k, opts) {
            Ok(r) => (Some(r), None, None),
            Err(e) => (None, Some(e.to_string()), Some(e.kind())),
        };
        let area_bound = equality_case.then(|| area_infimum + lambda0 * eps_k * eps_k);
        let area_ok = match (area_bound, run) {
            (Some(b), Some(r)) => Some(r.solution.area <= b),
            _ => None,
        };
        steps.push(RigidityStep {
            k,
            epsilon: eps_k,
            run,
            error,
            error_kind,
            area_bound,
            area_ok,
            annulus_volume: None,
            volume_bound: lambda0 * eps_k.powf(T::lit(2.0) - gamma),
            volume_ok: None,
            nested: None,
        });
        k += 1;
    }

    let mut cumulative = T::zero();
    for i in 0..steps.len().saturating_sub(1) {
        let (outer, inner) = (steps[i].run, steps[i + 1].run);
        if let (Some(o), Some(n)) = (outer, inner) {
            let (ro, rn) = (o.solution.rho_star, n.solution.rho_star);
            let nested = rn <= ro * (T::one() + T::lit(1e-12));
            let vol = if nested {
                profile.volume_between(rn, ro)?.value()
            } else {
                profile.volume_between(ro, rn)?.value()
            };
            cumulative = cumulative + vol;
            let s = &mut steps[i];
            s.nested = Some(nested);
            s.annulus_volume = Some(vol);
            s.volume_ok = Some(vol <= s.volume_bound);
        }
    }
    let cumulative_bound = lambda0 * epsilon.powf(gamma * (T::lit(2.0) - gamma))
        / (T::one() - epsilon.powf((gamma - T::one()) * (T::lit(2.0) - gamma)));
    let cumulative_ok = cumulative <= cumulative_bound;
    let all_passed = cumulative_ok
        && steps.iter().all(|s| {
            s.run.is_some()
                && s.area_ok != Some(false)
                && s.volume_ok != Some(false)
                && s.nested != Some(false)
        });
    Ok(RigidityTrace {
        gamma,
        epsilon,
        lambda0,
        epsilon0,
        area_infimum,
        equality_case,
        steps,
        cumulative_volume: cumulative,
        cumulative_bound,
        cumulative_ok,
        all_passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use crate::radial::Dimension;
    use std::f64::consts::PI;

    const N3: Dimension = Dimension::THREE;

    fn schw() -> RadialProfile<f64> {
        RadialProfile::schwarzschild(N3, 1.0).unwrap()
    }

    #[test]
    fn h_examples() {
        let h = PrescribedMeanCurvature::<f64>::new(0.1, 2.0).unwrap();
        assert!((h.eval(0.0).unwrap() - 0.1037314).abs() < 1e-7);
        let big = PrescribedMeanCurvature::<f64>::new(0.1, 50.0).unwrap();
        assert!((big.eval(1.0).unwrap() - 0.1).abs() < 1e-8);
        // blow-up at the barrier
        let b = h.barrier();
        let mut prev = 0.0;
        for k in 1..12 {
            let v = h.eval(b + 10f64.powi(-k)).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(prev > 1e9);
        assert!(matches!(h.eval(b), Err(Error::Barrier { .. })));
        assert!(h.eval(b - 1.0).is_err());
    }

    #[test]
    fn h_ode_examples() {
        for (e, b, t) in [(0.1, 2.0, 0.0), (1.0, 1.0, 1.0), (0.5, 3.0, -1.0)] {
            let h = PrescribedMeanCurvature::<f64>::new(e, b).unwrap();
            let v = h.eval(t).unwrap();
            assert!(h_ode_residual(&h, t).unwrap().abs() <= 1e-12 * (1.0 + v * v));
        }
    }

    #[test]
    fn choose_beta_examples() {
        let b = choose_beta_for(1.0, 0.1).unwrap();
        let exact = 2.0 * (9.0f64).recip().atanh();
        assert!((b - exact).abs() < 3e-8, "{b} vs {exact}");
        assert!((b - 0.2231).abs() < 1e-4);
        let b = choose_beta_for(1.0, 0.5).unwrap();
        assert!(0.5 * coth(b / 2.0) <= 0.9 + 1e-12);
        assert!((b - 2.0 * (1.0f64 / 1.8).atanh()).abs() < 3e-8);
        assert!(matches!(choose_beta_for(1.0, 1.0), Err(Error::EpsilonTooLarge { .. })));
        assert!(matches!(choose_beta_for(1.0, 0.95), Err(Error::EpsilonTooLarge { .. })));
    }

    #[test]
    fn distance_to_anchor() {
        let e = RadialProfile::<f64>::euclidean(N3);
        let p = MuBubbleProblem::new(e, 1.0, PrescribedMeanCurvature::new(0.1, 2.0).unwrap()).unwrap();
        assert_eq!(p.dist_to_anchor(1.0).unwrap(), 0.0);
        assert!((p.dist_to_anchor(0.5).unwrap() + 0.4999995).abs() < 1e-12);
        assert!((p.dist_to_anchor(3.0).unwrap() - 2.0 * (1.0 - 1e-6)).abs() < 1e-12);
    }

    #[test]
    fn functional_examples() {
        let e = RadialProfile::<f64>::euclidean(N3);
        let h = PrescribedMeanCurvature::<f64>::new(0.1, 2.0).unwrap();
        let p = MuBubbleProblem::new(e, 1.0, h).unwrap();
        assert_eq!(p.functional_eval(1.0).unwrap(), 4.0 * PI);
        // direct quadrature with the exact Euclidean distance
        let lip = 1.0 - 1e-6;
        let q = adaptive_simpson(
            |r: f64| h.eval(-lip * (1.0 - r)).unwrap() * 4.0 * PI * r * r,
            0.9,
            1.0,
            &Default::default(),
        );
        let f = p.functional_eval(0.9).unwrap();
        assert!((f - (4.0 * PI * 0.81 + q.value)).abs() < 1e-9);
        assert!(f >= 4.0 * PI * 0.81);
        assert!(matches!(p.functional_eval(1.5), Err(Error::OutOfCollection { .. })));
    }

    #[test]
    fn barrier_condition_enforced() {
        // H(2) ≈ 0.384 on Schwarzschild m = 1; h(0) = coth(0.1) ≈ 10
        let h = PrescribedMeanCurvature::new(1.0, 0.1).unwrap();
        assert!(matches!(
            MuBubbleProblem::new(schw(), 2.0, h),
            Err(Error::BarrierCondition { .. })
        ));
    }

    #[test]
    fn schwarzschild_minimizer() {
        let eps = 0.05;
        let run = solve_mu_bubble(&schw(), 2.0, eps, &MuBubbleOptions::default()).unwrap();
        let s = run.solution;
        assert!(s.rho_star > 0.5 && s.rho_star < 0.6, "{s:?}");
        assert!(s.mean_curvature > 0.0 && s.mean_curvature < 2.0 * eps);
        assert!(s.el_residual <= 1e-6, "{s:?}");
        assert!(s.second_order_ok);
        assert!(s.area >= 16.0 * PI - 1e-9 && s.area <= schw().sphere_area(2.0).unwrap());
        assert!(s.functional_value <= schw().sphere_area(2.0).unwrap());
        let d = diameter_report(&s, eps);
        assert!(d.within_bound && (d.intrinsic_diameter - 2.0 * PI).abs() < 0.1);
        assert!((diameter_bound(1.0) - 4.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_endpoints() {
        let s = default_epsilon_schedule::<f64>();
        assert_eq!(s[0], 0.2);
        assert_eq!(*s.last().unwrap(), 1e-3);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }
}
