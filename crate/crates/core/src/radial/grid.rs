use serde::{Deserialize, Serialize};

use super::{Domain, RadialProfile};
use crate::error::{Error, Result};
use crate::optimize::log_space;
use crate::scalar::Scalar;

/// Logarithmically spaced radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid<T> {
    pub r_lo: T,
    pub r_hi: T,
    pub count: usize,
}

impl<T: Scalar> RadialGrid<T> {
    pub const DEFAULT_COUNT: usize = 4096;

    pub fn new(r_lo: T, r_hi: T, count: usize) -> Result<Self> {
        if !(r_lo > T::zero()) || !(r_lo < r_hi) || !r_hi.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need 0 < r_lo < r_hi < inf (got {r_lo}, {r_hi})"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {count}")));
        }
        Ok(Self { r_lo, r_hi, count })
    }

    /// `[1e-4, 1e4]` intersected with the domain, 4096 points.
    pub fn default_for(profile: &RadialProfile<T>) -> Result<Self> {
        Self::clipped(T::lit(1e-4), T::lit(1e4), Self::DEFAULT_COUNT, &profile.domain())
    }

    /// `[r_lo, r_hi]` intersected with `domain`.
    pub fn clipped(r_lo: T, r_hi: T, count: usize, domain: &Domain<T>) -> Result<Self> {
        let nudge = T::lit(1e-12);
        let lo = if r_lo > domain.lo || (r_lo == domain.lo && domain.lo_closed) {
            r_lo
        } else if domain.lo_closed {
            domain.lo
        } else {
            domain.lo * (T::one() + nudge)
        };
        let hi = if r_hi < domain.hi || (r_hi == domain.hi && domain.hi_closed) {
            r_hi
        } else if domain.hi_closed {
            domain.hi
        } else {
            domain.hi * (T::one() - nudge)
        };
        Self::new(lo, hi, count)
    }

    pub fn points(&self) -> Vec<T> {
        log_space(self.r_lo, self.r_hi, self.count)
    }
}
