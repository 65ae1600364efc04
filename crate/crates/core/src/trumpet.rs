//! Horizon-free asymptotically flat example: a cylindrical end glued to a
//! Schwarzschild end through a smooth cut-off.
//!
//! With `u1 = r^{(2-n)/2}` and `u2 = 1 + r^{2-n}` the factor is
//!
//! ```text
//! u(r) = alpha + u1(r0) - ∫_r^∞ [ζ u1' + (1 - ζ) u2'](s) ds
//! ```
//!
//! which is `alpha0 + r^{2-n}` beyond `2 r0` and `u1(r)` plus a constant
//! inside `r0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mass::{adm_mass_from_tail, AsymptoticTail};
use crate::quadrature::{adaptive_simpson, lower_limit, QuadOptions};
use crate::radial::{Dimension, Jet, RadialGrid, RadialProfile, TableSample};
use crate::scalar::Scalar;

/// Number of cells the blending zone is split into for cached integrals.
const BLEND_CELLS: usize = 64;

/// Largest gluing radius with `u1' > u2'` on `(0, 2 r0)`: `2^{2/(n-2)} / 2`.
pub fn find_r0<T: Scalar>(n: Dimension) -> T {
    T::lit(2.0).powf(n.length_power()) / T::lit(2.0)
}

fn u1<T: Scalar>(n: Dimension, r: T) -> Jet<T> {
    let q = n.harmonic_exponent::<T>() / T::lit(2.0);
    let rq = r.powf(q);
    Jet {
        u: rq,
        du: q * rq / r,
        d2u: q * (q - T::one()) * rq / (r * r),
    }
}

fn u2<T: Scalar>(n: Dimension, r: T) -> Jet<T> {
    let p = n.harmonic_exponent::<T>();
    let rp = r.powf(p);
    Jet {
        u: T::one() + rp,
        du: p * rp / r,
        d2u: p * (p - T::one()) * rp / (r * r),
    }
}

/// Smooth step from 1 on `[0, r0]` to 0 on `[2 r0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffSpec<T> {
    pub r0: T,
}

impl<T: Scalar> CutoffSpec<T> {
    pub fn new(r0: T) -> Self {
        CutoffSpec { r0 }
    }

    /// `(ζ(t), ζ'(t))`.
    pub fn eval(&self, t: T) -> (T, T) {
        let r0 = self.r0;
        if t <= r0 {
            return (T::one(), T::zero());
        }
        if t >= r0 + r0 {
            return (T::zero(), T::zero());
        }
        let a = (r0 + r0 - t) / r0;
        let b = (t - r0) / r0;
        let (fa, fb) = ((-a.recip()).exp(), (-b.recip()).exp());
        let (dfa, dfb) = (fa / (a * a), fb / (b * b));
        let s = fa + fb;
        let zeta = fa / s;
        let dzeta = -(dfa * fb + fa * dfb) / (r0 * s * s);
        (zeta, dzeta)
    }
}

pub fn cutoff_eval<T: Scalar>(spec: &CutoffSpec<T>, t: T) -> (T, T) {
    spec.eval(t)
}

/// `1.1 * max((2 r0)^{2-n}, 2/(n-2) * sup_{[r0, 2 r0]} (|r u1'| + |r u2'|))`,
/// the supremum taken over 2048 equally spaced samples.
pub fn min_alpha<T: Scalar>(n: Dimension, r0: T) -> T {
    let samples = 2048;
    let mut sup = T::zero();
    for i in 0..samples {
        let r = r0 + r0 * T::from_usize(i).unwrap() / T::from_usize(samples - 1).unwrap();
        let v = (r * u1(n, r).du).abs() + (r * u2(n, r).du).abs();
        sup = sup.max(v);
    }
    let first = (r0 + r0).powf(n.harmonic_exponent());
    T::lit(1.1) * first.max(n.length_power::<T>() * sup)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrumpetParams<T> {
    pub n: Dimension,
    pub r0: T,
    pub alpha: T,
    /// Tail constant: `u = alpha0 + r^{2-n}` for `r >= 2 r0`.
    pub alpha0: T,
}

/// The glued conformal factor with its blending integrals cached.
#[derive(Clone, Debug)]
pub struct TrumpetFactor<T> {
    params: TrumpetParams<T>,
    cutoff: CutoffSpec<T>,
    /// `∫_{r0}^{2 r0} blend'`.
    blend_integral: T,
    /// `inner + u1(r)` is the factor on `(0, r0]`.
    inner: T,
    /// `∫_{r0}^{edge_k} blend'` at the cell edges `r0 + k r0 / BLEND_CELLS`.
    cumulative: Vec<T>,
    weak_alpha: bool,
    quad: QuadOptions<T>,
}

impl<T: Scalar> TrumpetFactor<T> {
    pub fn params(&self) -> &TrumpetParams<T> {
        &self.params
    }

    pub fn cutoff(&self) -> &CutoffSpec<T> {
        &self.cutoff
    }

    pub fn blend_integral(&self) -> T {
        self.blend_integral
    }

    /// True when `alpha` is below [`min_alpha`].
    pub fn weak_alpha(&self) -> bool {
        self.weak_alpha
    }

    /// `ζ u1' + (1 - ζ) u2'`.
    fn blend_slope(&self, r: T) -> T {
        let (z, _) = self.cutoff.eval(r);
        let n = self.params.n;
        z * u1(n, r).du + (T::one() - z) * u2(n, r).du
    }

    fn cell_edge(&self, k: usize) -> T {
        let r0 = self.params.r0;
        r0 + r0 * T::from_usize(k).unwrap() / T::from_usize(BLEND_CELLS).unwrap()
    }

    /// `∫_{r0}^{r} blend'` for `r` in `[r0, 2 r0]`.
    fn partial_blend(&self, r: T) -> T {
        let r0 = self.params.r0;
        let pos = ((r - r0) / r0 * T::from_usize(BLEND_CELLS).unwrap())
            .round()
            .to_usize()
            .unwrap_or(0)
            .min(BLEND_CELLS);
        let edge = self.cell_edge(pos);
        let base = self.cumulative[pos];
        if r == edge {
            return base;
        }
        let piece = if r > edge {
            adaptive_simpson(|s| self.blend_slope(s), edge, r, &self.quad).value
        } else {
            -adaptive_simpson(|s| self.blend_slope(s), r, edge, &self.quad).value
        };
        base + piece
    }

    /// Unscaled `u`, `u'`, `u''` at `r > 0`.
    pub fn jet(&self, r: T) -> Jet<T> {
        let TrumpetParams { n, r0, alpha0, .. } = self.params;
        let two_r0 = r0 + r0;
        if r <= r0 {
            let j = u1(n, r);
            Jet { u: self.inner + j.u, ..j }
        } else if r >= two_r0 {
            let j = u2(n, r);
            Jet { u: alpha0 + r.powf(n.harmonic_exponent()), ..j }
        } else {
            let (z, dz) = self.cutoff.eval(r);
            let (a, b) = (u1(n, r), u2(n, r));
            let u = self.inner + u1(n, r0).u + self.partial_blend(r);
            Jet {
                u,
                du: z * a.du + (T::one() - z) * b.du,
                d2u: dz * (a.du - b.du) + z * a.d2u + (T::one() - z) * b.d2u,
            }
        }
    }

    /// The three pieces of `Δu = ζ Δu1 + (1 - ζ) Δu2 + ζ' (u1' - u2')`.
    pub fn laplacian_terms(&self, r: T) -> [T; 3] {
        let n = self.params.n;
        let nm2 = n.as_scalar::<T>() - T::lit(2.0);
        let (z, dz) = self.cutoff.eval(r);
        let (a, b) = (u1(n, r), u2(n, r));
        // r^{-2} p (p + n - 2) r^p for a power r^p: exact cancellation for u2
        let q = n.harmonic_exponent::<T>() / T::lit(2.0);
        let p = n.harmonic_exponent::<T>();
        let lap1 = q * (q + nm2) * a.u / (r * r);
        let lap2 = p * (p + nm2) * (b.u - T::one()) / (r * r);
        [z * lap1, (T::one() - z) * lap2, dz * (a.du - b.du)]
    }
}

/// Builds the glued profile. `alpha` below [`min_alpha`] is accepted and
/// flagged via [`TrumpetFactor::weak_alpha`].
pub fn build_trumpet<T: Scalar>(n: Dimension, r0: T, alpha: T) -> Result<RadialProfile<T>> {
    Ok(RadialProfile::trumpet(std::sync::Arc::new(trumpet_factor(n, r0, alpha)?)))
}

pub fn trumpet_factor<T: Scalar>(n: Dimension, r0: T, alpha: T) -> Result<TrumpetFactor<T>> {
    let max = find_r0::<T>(n);
    if !(r0 > T::zero()) || r0 > max {
        return Err(Error::InadmissibleGluingRadius {
            r0: r0.to_f64_lossy(),
            max: max.to_f64_lossy(),
        });
    }
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    let alpha0 = alpha + u1(n, r0).u;
    let quad = QuadOptions::default()
        .with_abs_tol(T::lit(T::QUAD_TOL) * T::lit(1e-4))
        .with_rel_tol(T::lit(T::QUAD_RTOL));
    let mut factor = TrumpetFactor {
        params: TrumpetParams { n, r0, alpha, alpha0 },
        cutoff: CutoffSpec::new(r0),
        blend_integral: T::zero(),
        inner: T::zero(),
        cumulative: Vec::with_capacity(BLEND_CELLS + 1),
        weak_alpha: alpha < min_alpha(n, r0),
        quad,
    };
    let mut acc = T::zero();
    factor.cumulative.push(acc);
    for k in 0..BLEND_CELLS {
        let (a, b) = (factor.cell_edge(k), factor.cell_edge(k + 1));
        acc = acc + adaptive_simpson(|s| factor.blend_slope(s), a, b, &quad).value;
        factor.cumulative.push(acc);
    }
    factor.blend_integral = acc;
    // continuity at 2 r0: u1(r0) + inner + I = alpha0 + (2 r0)^{2-n}
    factor.inner = alpha + (r0 + r0).powf(n.harmonic_exponent()) - acc;
    Ok(factor)
}

/// Outcome of one verification item.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult<T> {
    pub name: &'static str,
    pub passed: bool,
    /// Headline number of the check (mass, minimum, limit, ...).
    pub value: Option<T>,
    pub detail: String,
}

/// Itemized verification of a trumpet profile on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct TrumpetVerification<T> {
    pub params: TrumpetParams<T>,
    pub min_alpha: T,
    pub weak_alpha: bool,
    pub grid: RadialGrid<T>,
    pub tail: Option<AsymptoticTail<T>>,
    pub adm_mass: Option<T>,
    pub expected_mass: T,
    pub min_scalar_curvature: T,
    /// Pointwise maxima of the three Laplacian pieces.
    pub max_laplacian_terms: [T; 3],
    pub min_area_radius_derivative: T,
    pub mean_convexity_failures: usize,
    pub first_mean_convexity_failure: Option<T>,
    pub throat_area_limit: T,
    pub checks: Vec<CheckResult<T>>,
    pub passed: bool,
}

impl<T: Scalar> TrumpetVerification<T> {
    pub fn failed_checks(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

pub const SCALAR_CURVATURE_TOL: f64 = 1e-10;
pub const LAPLACIAN_TERM_TOL: f64 = 1e-12;
pub const THROAT_TOL: f64 = 1e-4;

/// Runs the five checks: asymptotic flatness, `R >= 0` with the sign
/// decomposition, mean convexity, completeness at the puncture and the
/// throat area limit.
pub fn verify_trumpet<T: Scalar>(
    profile: &RadialProfile<T>,
    grid: &RadialGrid<T>,
) -> Result<TrumpetVerification<T>> {
    let factor = match profile.kind() {
        crate::radial::ProfileKind::Trumpet(f) => f.clone(),
        other => {
            return Err(Error::InvalidProfile(format!(
                "verification needs a trumpet profile, got {}",
                other.name()
            )))
        }
    };
    let params = *factor.params();
    let n = params.n;
    let lambda = profile.scale();
    let mut checks = Vec::new();

    // (a) asymptotic flatness
    let expected_mass = T::lit(2.0) * params.alpha0 * lambda * lambda;
    let (tail, adm_mass, af) = match adm_mass_from_tail(profile) {
        Ok((m, tail)) => {
            let ok = (m - expected_mass).abs() <= T::lit(1e-6) * expected_mass.max(T::one());
            let detail = format!(
                "tail fit residual {:e}, mass {m} vs 2*alpha0 = {expected_mass}",
                tail.fit_residual.to_f64_lossy()
            );
            (Some(tail), Some(m), CheckResult { name: "asymptotic_flatness", passed: ok, value: Some(m), detail })
        }
        Err(e) => (
            None,
            None,
            CheckResult { name: "asymptotic_flatness", passed: false, value: None, detail: e.to_string() },
        ),
    };
    checks.push(af);

    // (b) scalar curvature and (c) mean convexity on the grid
    let mut min_r = T::infinity();
    let mut max_terms = [T::neg_infinity(); 3];
    let mut min_deriv = T::infinity();
    let mut failures = 0usize;
    let mut first_failure = None;
    for r in grid.points() {
        min_r = min_r.min(profile.scalar_curvature(r)?);
        for (m, t) in max_terms.iter_mut().zip(factor.laplacian_terms(r)) {
            *m = m.max(t * lambda);
        }
        let d = profile.area_radius_derivative(r)?;
        min_deriv = min_deriv.min(d);
        if !(d > T::zero()) {
            failures += 1;
            first_failure.get_or_insert(r);
        }
    }
    let terms_ok = max_terms.iter().all(|&t| t <= T::lit(LAPLACIAN_TERM_TOL));
    checks.push(CheckResult {
        name: "scalar_curvature",
        passed: min_r >= -T::lit(SCALAR_CURVATURE_TOL) && terms_ok,
        value: Some(min_r),
        detail: format!(
            "min R = {min_r:e}; max Laplacian pieces = [{:e}, {:e}, {:e}]",
            max_terms[0].to_f64_lossy(),
            max_terms[1].to_f64_lossy(),
            max_terms[2].to_f64_lossy()
        ),
    });
    checks.push(CheckResult {
        name: "mean_convexity",
        passed: failures == 0,
        value: Some(min_deriv),
        detail: match first_failure {
            None => format!("d/dr[u^(2/(n-2)) r] > 0 at all {} grid points", grid.count),
            Some(r) => format!("{failures} grid points with d/dr[u^(2/(n-2)) r] <= 0, first at r = {r}"),
        },
    });

    // (d) completeness at the puncture
    let lo = profile.domain().lo;
    let dist = profile.geodesic_distance(lo, params.r0)?;
    checks.push(CheckResult {
        name: "completeness",
        passed: dist.is_divergent(),
        value: dist.finite(),
        detail: if dist.is_divergent() {
            "radial distance to the puncture diverges".to_string()
        } else {
            format!("radial distance to the puncture is finite ({})", dist.value())
        },
    });

    // (e) throat area
    let omega = n.sphere_measure::<T>();
    let est = lower_limit(
        |r| profile.sphere_area(r).unwrap_or(T::nan()),
        lo,
        grid.r_lo,
        T::lit(T::QUAD_TOL),
        profile.limit_options(),
    );
    let target = omega * lambda.powf(n.length_power::<T>() * (n.as_scalar::<T>() - T::one()));
    checks.push(CheckResult {
        name: "throat_area",
        passed: (est.value - target).abs() <= T::lit(THROAT_TOL),
        value: Some(est.value),
        detail: format!("area limit {} vs {}", est.value, target),
    });

    let passed = checks.iter().all(|c| c.passed);
    Ok(TrumpetVerification {
        params,
        min_alpha: min_alpha(n, params.r0),
        weak_alpha: factor.weak_alpha(),
        grid: *grid,
        tail,
        adm_mass,
        expected_mass,
        min_scalar_curvature: min_r,
        max_laplacian_terms: max_terms,
        min_area_radius_derivative: min_deriv,
        mean_convexity_failures: failures,
        first_mean_convexity_failure: first_failure,
        throat_area_limit: est.value,
        checks,
        passed,
    })
}

/// Samples `u` on `grid` for export in the tabulated format.
pub fn sample_profile<T: Scalar>(
    profile: &RadialProfile<T>,
    grid: &RadialGrid<T>,
) -> Result<Vec<TableSample<T>>> {
    grid.points()
        .into_iter()
        .map(|r| Ok(TableSample { r, u: profile.u(r)? }))
        .collect()
}
