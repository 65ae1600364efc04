use thiserror::Error;

/// Errors raised by the geometry, mass and mu-bubble routines.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 3, got {0}")]
    InvalidDimension(u32),

    #[error("radius {r:?} outside profile domain ({lo:?}, {hi:?})")]
    Domain { r: f64, lo: f64, hi: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("profile is not asymptotically flat: tail fit residual {residual:e} exceeds {threshold:e}")]
    NotAsymptoticallyFlat { residual: f64, threshold: f64 },

    #[error("operation requires n = 3, got n = {0}")]
    UnsupportedDimension(u32),

    #[error("argument {t:?} at or below the barrier {barrier:?} of the prescribed curvature")]
    Barrier { t: f64, barrier: f64 },

    #[error("radius {rho:?} lies outside the anchor sphere r0 = {r0:?}")]
    OutOfCollection { rho: f64, r0: f64 },

    #[error("barrier condition fails: H(r0) = {h0:?} is not above h(0) = {h_at_zero:?}")]
    BarrierCondition { h0: f64, h_at_zero: f64 },

    #[error("degenerate minimizer at rho = {rho:?} (admissible range [{lower:?}, {upper:?}]); beta too small?")]
    DegenerateMinimizer { rho: f64, lower: f64, upper: f64 },

    #[error("epsilon {epsilon:?} too large for anchor mean curvature {h0:?}")]
    EpsilonTooLarge { epsilon: f64, h0: f64 },

    #[error("coordinate sphere r = {r:?} is not outer-minimizing: area at r' = {r_prime:?} is smaller")]
    NotOuterMinimizing { r: f64, r_prime: f64 },

    #[error("gluing radius {r0:?} not admissible (must lie in (0, {max:?}])")]
    InadmissibleGluingRadius { r0: f64, max: f64 },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid_dimension",
            Error::Domain { .. } => "domain",
            Error::InvalidProfile(_) => "invalid_profile",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::Parse { .. } => "parse",
            Error::NotAsymptoticallyFlat { .. } => "not_asymptotically_flat",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::Barrier { .. } => "barrier",
            Error::OutOfCollection { .. } => "out_of_collection",
            Error::BarrierCondition { .. } => "barrier_condition",
            Error::DegenerateMinimizer { .. } => "degenerate_minimizer",
            Error::EpsilonTooLarge { .. } => "epsilon_too_large",
            Error::NotOuterMinimizing { .. } => "not_outer_minimizing",
            Error::InadmissibleGluingRadius { .. } => "inadmissible_gluing_radius",
            Error::Parameter(_) => "parameter",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
