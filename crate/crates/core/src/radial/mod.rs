//! Rotationally symmetric, conformally flat metrics
//! `g = u(r)^{4/(n-2)} (dr^2 + r^2 g_{S^{n-1}})` and their radial geometry.
//!
//! Every quantity here is a closed expression in `u`, `u'`, `u''` at a single
//! radius, except the geodesic distance and the volume of an annulus, which
//! are radial integrals.

mod grid;
mod tabulated;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use grid::RadialGrid;
pub use tabulated::{parse_table, write_table, TabulatedFactor, TableSample};

use crate::error::{Error, Result};
use crate::quadrature::{
    integrate_log, integrate_to_lower_limit, Integral, LimitOptions, QuadOptions,
};
use crate::scalar::Scalar;
use crate::trumpet::TrumpetFactor;

/// Manifold dimension `n >= 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Dimension(u32);

impl Dimension {
    pub const THREE: Dimension = Dimension(3);

    pub fn new(n: u32) -> Result<Self> {
        if n >= 3 {
            Ok(Self(n))
        } else {
            Err(Error::InvalidDimension(n))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn as_scalar<T: Scalar>(self) -> T {
        T::lit(f64::from(self.0))
    }

    /// `2 / (n - 2)`: the power of `u` that scales lengths.
    pub fn length_power<T: Scalar>(self) -> T {
        T::lit(2.0 / f64::from(self.0 - 2))
    }

    /// `2 - n`: the exponent of the harmonic function `r^{2-n}`.
    pub fn harmonic_exponent<T: Scalar>(self) -> T {
        T::lit(2.0 - f64::from(self.0))
    }

    /// Area of the unit sphere `S^{n-1}` in `R^n`.
    pub fn sphere_measure<T: Scalar>(self) -> T {
        // ω(S^0) = 2, ω(S^1) = 2π, ω(S^m) = 2π/(m-1) ω(S^{m-2})
        let m = self.0 - 1;
        let (mut k, mut omega) = if m % 2 == 0 {
            (0u32, T::lit(2.0))
        } else {
            (1u32, T::lit(2.0) * T::PI())
        };
        while k < m {
            k += 2;
            omega = omega * T::lit(2.0) * T::PI() / T::lit(f64::from(k - 1));
        }
        omega
    }
}

impl TryFrom<u32> for Dimension {
    type Error = Error;
    fn try_from(n: u32) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for u32 {
    fn from(d: Dimension) -> u32 {
        d.0
    }
}

/// `u`, `u'`, `u''` at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    pub u: T,
    pub du: T,
    pub d2u: T,
}

impl<T: Scalar> Jet<T> {
    pub fn scaled(self, s: T) -> Self {
        Jet {
            u: self.u * s,
            du: self.du * s,
            d2u: self.d2u * s,
        }
    }
}

/// Radial interval on which the conformal factor is defined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Domain<T> {
    pub lo: T,
    pub hi: T,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl<T: Scalar> Domain<T> {
    /// `(0, +inf)`.
    pub fn punctured() -> Self {
        Domain {
            lo: T::zero(),
            hi: T::infinity(),
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: T, hi: T) -> Self {
        Domain {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn contains(&self, r: T) -> bool {
        let above = if self.lo_closed { r >= self.lo } else { r > self.lo };
        let below = if self.hi_closed { r <= self.hi } else { r < self.hi };
        above && below && r.is_finite()
    }

    fn error(&self, r: T) -> Error {
        Error::Domain {
            r: r.to_f64_lossy(),
            lo: self.lo.to_f64_lossy(),
            hi: self.hi.to_f64_lossy(),
        }
    }
}

/// Which family the conformal factor belongs to.
#[derive(Clone, Debug)]
pub enum ProfileKind<T: Scalar> {
    /// `u = 1`.
    Euclidean,
    /// `u = a + b r^{2-n}`, `a > 0`, `b >= 0`.
    SchwarzschildLike { a: T, b: T },
    /// `u = r^{(2-n)/2}`: the metric is the round cylinder `dt^2 + g_{S^{n-1}}`.
    Cylinder,
    /// Cylinder-to-Schwarzschild gluing.
    Trumpet(Arc<TrumpetFactor<T>>),
    /// Sampled `(r, u)` pairs.
    Tabulated(Arc<TabulatedFactor<T>>),
}

impl<T: Scalar> ProfileKind<T> {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::Euclidean => "euclidean",
            ProfileKind::SchwarzschildLike { .. } => "schwarzschild_like",
            ProfileKind::Cylinder => "cylinder",
            ProfileKind::Trumpet(_) => "trumpet",
            ProfileKind::Tabulated(_) => "tabulated",
        }
    }
}

/// Radial conformal factor `u(r)` of a rotationally symmetric metric.
#[derive(Clone, Debug)]
pub struct RadialProfile<T: Scalar> {
    kind: ProfileKind<T>,
    dim: Dimension,
    scale: T,
    domain: Domain<T>,
    quad: QuadOptions<T>,
    limit: LimitOptions<T>,
}

impl<T: Scalar> RadialProfile<T> {
    fn with_kind(kind: ProfileKind<T>, dim: Dimension, domain: Domain<T>) -> Self {
        RadialProfile {
            kind,
            dim,
            scale: T::one(),
            domain,
            quad: QuadOptions::default(),
            limit: LimitOptions::default(),
        }
    }

    pub fn euclidean(dim: Dimension) -> Self {
        Self::with_kind(ProfileKind::Euclidean, dim, Domain::punctured())
    }

    /// `u = a + b r^{2-n}`.
    pub fn schwarzschild_like(dim: Dimension, a: T, b: T) -> Result<Self> {
        if !(a > T::zero()) || !(b >= T::zero()) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "schwarzschild-like factor needs a > 0 and b >= 0 (a = {a}, b = {b})"
            )));
        }
        Ok(Self::with_kind(
            ProfileKind::SchwarzschildLike { a, b },
            dim,
            Domain::punctured(),
        ))
    }

    /// Unit-normalized Schwarzschild of ADM mass `mass`: `u = 1 + (m/2) r^{2-n}`.
    pub fn schwarzschild(dim: Dimension, mass: T) -> Result<Self> {
        Self::schwarzschild_like(dim, T::one(), mass / T::lit(2.0))
    }

    pub fn cylinder(dim: Dimension) -> Self {
        Self::with_kind(ProfileKind::Cylinder, dim, Domain::punctured())
    }

    pub fn trumpet(factor: Arc<TrumpetFactor<T>>) -> Self {
        let dim = factor.params().n;
        Self::with_kind(ProfileKind::Trumpet(factor), dim, Domain::punctured())
    }

    pub fn tabulated(dim: Dimension, factor: Arc<TabulatedFactor<T>>) -> Self {
        let (lo, hi) = factor.range();
        Self::with_kind(ProfileKind::Tabulated(factor), dim, Domain::closed(lo, hi))
    }

    /// Multiplies the conformal factor by `lambda > 0`.
    pub fn scaled(mut self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidProfile(format!("scale must be positive, got {lambda}")));
        }
        self.scale = self.scale * lambda;
        Ok(self)
    }

    pub fn with_quadrature(mut self, quad: QuadOptions<T>) -> Self {
        self.quad = quad;
        self
    }

    pub fn kind(&self) -> &ProfileKind<T> {
        &self.kind
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn domain(&self) -> Domain<T> {
        self.domain
    }

    pub fn quadrature(&self) -> &QuadOptions<T> {
        &self.quad
    }

    pub fn limit_options(&self) -> &LimitOptions<T> {
        &self.limit
    }

    pub fn check(&self, r: T) -> Result<()> {
        if self.domain.contains(r) {
            Ok(())
        } else {
            Err(self.domain.error(r))
        }
    }

    /// `u`, `u'`, `u''` at `r`.
    pub fn jet(&self, r: T) -> Result<Jet<T>> {
        self.check(r)?;
        let jet = match &self.kind {
            ProfileKind::Euclidean => Jet {
                u: T::one(),
                du: T::zero(),
                d2u: T::zero(),
            },
            ProfileKind::SchwarzschildLike { a, b } => {
                let p = self.dim.harmonic_exponent::<T>();
                let rp = r.powf(p);
                Jet {
                    u: *a + *b * rp,
                    du: *b * p * rp / r,
                    d2u: *b * p * (p - T::one()) * rp / (r * r),
                }
            }
            ProfileKind::Cylinder => {
                let q = self.dim.harmonic_exponent::<T>() / T::lit(2.0);
                let rq = r.powf(q);
                Jet {
                    u: rq,
                    du: q * rq / r,
                    d2u: q * (q - T::one()) * rq / (r * r),
                }
            }
            ProfileKind::Trumpet(t) => t.jet(r),
            ProfileKind::Tabulated(t) => t.jet(r),
        };
        Ok(jet.scaled(self.scale))
    }

    pub fn u(&self, r: T) -> Result<T> {
        Ok(self.jet(r)?.u)
    }

    /// Flat Laplacian of the radial function: `u'' + (n-1)/r u'`.
    pub fn radial_laplacian(&self, r: T) -> Result<T> {
        let j = self.jet(r)?;
        Ok(laplacian_of(j, r, self.dim))
    }

    /// `R(g) = -4(n-1)/(n-2) u^{-(n+2)/(n-2)} Δu`.
    pub fn scalar_curvature(&self, r: T) -> Result<T> {
        let j = self.jet(r)?;
        let n = self.dim.as_scalar::<T>();
        let two = T::lit(2.0);
        let c = T::lit(4.0) * (n - T::one()) / (n - two);
        let p = -(n + two) / (n - two);
        Ok(-c * j.u.powf(p) * laplacian_of(j, r, self.dim))
    }

    /// Areal radius `u^{2/(n-2)} r`: the radius of the round sphere isometric
    /// to the coordinate sphere `S_r`.
    pub fn area_radius(&self, r: T) -> Result<T> {
        let j = self.jet(r)?;
        Ok(j.u.powf(self.dim.length_power()) * r)
    }

    /// Area of `S_r`: `ω_{n-1} u^{2(n-1)/(n-2)} r^{n-1}`.
    pub fn sphere_area(&self, r: T) -> Result<T> {
        let rad = self.area_radius(r)?;
        Ok(self.dim.sphere_measure::<T>() * rad.powi(self.dim.get() as i32 - 1))
    }

    /// `d/dr [u^{2/(n-2)} r] = u^{(4-n)/(n-2)} (u + 2/(n-2) r u')`.
    pub fn area_radius_derivative(&self, r: T) -> Result<T> {
        let j = self.jet(r)?;
        let k = self.dim.length_power::<T>();
        Ok(j.u.powf(k - T::one()) * (j.u + k * r * j.du))
    }

    /// Mean curvature of `S_r` for the outward normal; positive means
    /// mean-convex toward infinity.
    pub fn sphere_mean_curvature(&self, r: T) -> Result<T> {
        let j = self.jet(r)?;
        Ok(mean_curvature_of(j, r, self.dim))
    }

    /// Diameter of `S_r` in its induced (round) metric.
    pub fn intrinsic_diameter(&self, r: T) -> Result<T> {
        Ok(T::PI() * self.area_radius(r)?)
    }

    pub fn sphere_geometry(&self, r: T) -> Result<SphereGeometry<T>> {
        let j = self.jet(r)?;
        let k = self.dim.length_power::<T>();
        let rad = j.u.powf(k) * r;
        Ok(SphereGeometry {
            r,
            area: self.dim.sphere_measure::<T>() * rad.powi(self.dim.get() as i32 - 1),
            mean_curvature: mean_curvature_of(j, r, self.dim),
            intrinsic_diameter: T::PI() * rad,
        })
    }

    /// `u^{2/(n-2)}`: arc length per unit coordinate radius.
    pub fn length_density(&self, r: T) -> Result<T> {
        Ok(self.jet(r)?.u.powf(self.dim.length_power()))
    }

    /// `ω_{n-1} u^{2n/(n-2)} r^{n-1}`: volume per unit coordinate radius.
    pub fn volume_density(&self, r: T) -> Result<T> {
        let u = self.jet(r)?.u;
        let k = self.dim.length_power::<T>();
        let rad = u.powf(k) * r;
        Ok(self.dim.sphere_measure::<T>() * rad.powi(self.dim.get() as i32 - 1) * u.powf(k))
    }

    /// Whether `r_a` is the open lower end of the domain, reached as a limit.
    fn improper_lower(&self, r_a: T) -> bool {
        r_a == self.domain.lo && !self.domain.lo_closed
    }

    fn check_interval(&self, r_a: T, r_b: T) -> Result<()> {
        if !(r_a <= r_b) {
            return Err(Error::Parameter(format!(
                "interval endpoints out of order: {r_a} > {r_b}"
            )));
        }
        if !self.improper_lower(r_a) {
            self.check(r_a)?;
        }
        self.check(r_b)
    }

    fn radial_integral(
        &self,
        r_a: T,
        r_b: T,
        density: impl Fn(T) -> Result<T>,
    ) -> Result<Integral<T>> {
        self.check_interval(r_a, r_b)?;
        if r_a == r_b {
            return Ok(Integral::Finite(T::zero()));
        }
        // Domain checks are done; densities cannot fail inside the interval.
        let f = |r: T| density(r).unwrap_or(T::nan());
        if self.improper_lower(r_a) {
            Ok(integrate_to_lower_limit(f, r_a, r_b, &self.quad, &self.limit))
        } else {
            let q = integrate_log(f, r_a, r_b, &self.quad);
            if q.value.is_finite() {
                Ok(Integral::Finite(q.value))
            } else {
                Ok(Integral::Divergent)
            }
        }
    }

    /// Radial geodesic distance `∫_{r_a}^{r_b} u^{2/(n-2)} dr`.
    ///
    /// `r_a` may be the open lower end of the domain, in which case the
    /// integral is taken as a limit and may come back [`Integral::Divergent`].
    pub fn geodesic_distance(&self, r_a: T, r_b: T) -> Result<Integral<T>> {
        self.radial_integral(r_a, r_b, |r| self.length_density(r))
    }

    /// Volume of the annulus `r_a < r < r_b`.
    pub fn volume_between(&self, r_a: T, r_b: T) -> Result<Integral<T>> {
        self.radial_integral(r_a, r_b, |r| self.volume_density(r))
    }
}

/// `u'' + (n-1)/r u'`.
pub fn laplacian_of<T: Scalar>(j: Jet<T>, r: T, dim: Dimension) -> T {
    let n = dim.as_scalar::<T>();
    j.d2u + (n - T::one()) / r * j.du
}

/// `H = (n-1) u^{-2/(n-2)} (1 + 2/(n-2) r u'/u) / r`.
pub fn mean_curvature_of<T: Scalar>(j: Jet<T>, r: T, dim: Dimension) -> T {
    let n = dim.as_scalar::<T>();
    let k = dim.length_power::<T>();
    (n - T::one()) * j.u.powf(-k) * (T::one() + k * r * j.du / j.u) / r
}

/// Per-radius geometry of the coordinate sphere `S_r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereGeometry<T> {
    pub r: T,
    pub area: T,
    pub mean_curvature: T,
    pub intrinsic_diameter: T,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn three() -> Dimension {
        Dimension::THREE
    }

    #[test]
    fn dimension_validation_and_sphere_measure() {
        assert!(Dimension::new(2).is_err());
        assert!((Dimension::new(3).unwrap().sphere_measure::<f64>() - 4.0 * PI).abs() < 1e-14);
        assert!((Dimension::new(4).unwrap().sphere_measure::<f64>() - 2.0 * PI * PI).abs() < 1e-13);
        // ω(S^4) = 8π²/3
        assert!(
            (Dimension::new(5).unwrap().sphere_measure::<f64>() - 8.0 * PI * PI / 3.0).abs()
                < 1e-12
        );
    }

    #[test]
    fn laplacian_examples() {
        let e = RadialProfile::<f64>::euclidean(three());
        assert_eq!(e.radial_laplacian(3.7).unwrap(), 0.0);
        let s = RadialProfile::<f64>::schwarzschild(three(), 1.0).unwrap();
        assert!(s.radial_laplacian(1.0).unwrap().abs() < 1e-15);
        // d²/dr² r^{-1/2} + (2/r) d/dr r^{-1/2} at r = 1: 3/4 - 1 = -1/4
        let c = RadialProfile::<f64>::cylinder(three());
        assert!((c.radial_laplacian(1.0).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn scalar_curvature_examples() {
        let e = RadialProfile::<f64>::euclidean(three());
        assert_eq!(e.scalar_curvature(0.2).unwrap(), 0.0);
        let s = RadialProfile::<f64>::schwarzschild(three(), 2.0).unwrap();
        for r in [0.01, 0.5, 1.0, 17.0, 1e4] {
            assert!(s.scalar_curvature(r).unwrap().abs() < 1e-10);
        }
        let c = RadialProfile::<f64>::cylinder(three());
        for r in [1e-3, 0.3, 1.0, 50.0] {
            assert!((c.scalar_curvature(r).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_area_examples() {
        let e = RadialProfile::<f64>::euclidean(three());
        assert!((e.sphere_area(1.0).unwrap() - 4.0 * PI).abs() < 1e-14);
        let s = RadialProfile::<f64>::schwarzschild(three(), 1.0).unwrap();
        assert!((s.sphere_area(0.5).unwrap() - 16.0 * PI).abs() < 1e-12);
        let c = RadialProfile::<f64>::cylinder(three());
        for r in [1e-6, 1.0, 1e6] {
            assert!((c.sphere_area(r).unwrap() - 4.0 * PI).abs() < 1e-11);
        }
    }

    #[test]
    fn mean_curvature_examples() {
        let e = RadialProfile::<f64>::euclidean(three());
        assert!((e.sphere_mean_curvature(2.0).unwrap() - 1.0).abs() < 1e-15);
        let s = RadialProfile::<f64>::schwarzschild(three(), 1.0).unwrap();
        assert!(s.sphere_mean_curvature(0.5).unwrap().abs() < 1e-15);
        let c = RadialProfile::<f64>::cylinder(three());
        for r in [1e-3, 1.0, 1e3] {
            assert!(c.sphere_mean_curvature(r).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn distance_examples() {
        let e = RadialProfile::<f64>::euclidean(three());
        assert!((e.geodesic_distance(0.3, 2.5).unwrap().value() - 2.2).abs() < 1e-10);
        let c = RadialProfile::<f64>::cylinder(three());
        let d = c.geodesic_distance(0.01, 20.0).unwrap().value();
        assert!((d - (20.0f64 / 0.01).ln()).abs() < 1e-9);
        // the cylinder is complete toward the puncture
        assert!(c.geodesic_distance(0.0, 1.0).unwrap().is_divergent());
        // Euclidean distance to the origin is finite
        assert!((e.geodesic_distance(0.0, 1.5).unwrap().value() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn volume_examples() {
        let e = RadialProfile::<f64>::euclidean(three());
        let v = e.volume_between(0.0, 1.0).unwrap().value();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-9, "{v}");
        assert_eq!(e.volume_between(0.7, 0.7).unwrap().value(), 0.0);
        let c = RadialProfile::<f64>::cylinder(three());
        let v = c.volume_between((-1.0f64).exp(), 1.0).unwrap().value();
        assert!((v - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        let e = RadialProfile::<f64>::euclidean(three());
        assert!(matches!(e.sphere_area(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(e.scalar_curvature(0.0), Err(Error::Domain { .. })));
        assert!(e.geodesic_distance(2.0, 1.0).is_err());
        assert!(RadialProfile::schwarzschild_like(three(), 0.0, 1.0).is_err());
        assert!(RadialProfile::schwarzschild_like(three(), 1.0, -1.0).is_err());
    }

    #[test]
    fn single_precision_smoke() {
        let s = RadialProfile::<f32>::schwarzschild(three(), 1.0).unwrap();
        let area = s.sphere_area(0.5).unwrap();
        assert!((area - 16.0 * std::f32::consts::PI).abs() < 1e-4);
        let d = s.geodesic_distance(0.5, 2.0).unwrap().value();
        // ∫ (1 + 1/(2r))² dr on [1/2, 2] = 3/2 + ln 4 + 3/8
        assert!((d - (1.5 + 4f32.ln() + 0.375)).abs() < 1e-4);
    }
}
