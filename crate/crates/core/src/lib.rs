//! Rotationally symmetric, conformally flat Riemannian manifolds
//! `g = u^{4/(n-2)} (dr^2 + r^2 g_{S^{n-1}})`.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`); the
//! aliases at the crate root fix it to `f64`, and the [`single`] module to
//! `f32`.

pub mod error;
pub mod mass;
pub mod mu_bubble;
pub mod optimize;
pub mod quadrature;
pub mod radial;
pub mod scalar;
pub mod trumpet;

pub use error::{Error, Result};
pub use mass::Verdict;
pub use radial::{Dimension, Domain, Jet, ProfileKind};
pub use scalar::Scalar;

pub type RadialProfile = radial::RadialProfile<f64>;
pub type RadialGrid = radial::RadialGrid<f64>;
pub type SphereGeometry = radial::SphereGeometry<f64>;
pub type TabulatedFactor = radial::TabulatedFactor<f64>;
pub type TableSample = radial::TableSample<f64>;
pub type AsymptoticTail = mass::AsymptoticTail<f64>;
pub type HawkingMassValue = mass::HawkingMassValue<f64>;
pub type AreaInfimum = mass::AreaInfimum<f64>;
pub type PenroseReport = mass::PenroseReport<f64>;
pub type PrescribedMeanCurvature = mu_bubble::PrescribedMeanCurvature<f64>;
pub type MuBubbleProblem = mu_bubble::MuBubbleProblem<f64>;
pub type MuBubbleSolution = mu_bubble::MuBubbleSolution<f64>;
pub type RigidityTrace = mu_bubble::RigidityTrace<f64>;
pub type TrumpetParams = trumpet::TrumpetParams<f64>;
pub type TrumpetFactor = trumpet::TrumpetFactor<f64>;
pub type TrumpetVerification = trumpet::TrumpetVerification<f64>;

/// The same types in single precision.
pub mod single {
    pub type RadialProfile = crate::radial::RadialProfile<f32>;
    pub type RadialGrid = crate::radial::RadialGrid<f32>;
    pub type PenroseReport = crate::mass::PenroseReport<f32>;
    pub type TrumpetFactor = crate::trumpet::TrumpetFactor<f32>;
}
