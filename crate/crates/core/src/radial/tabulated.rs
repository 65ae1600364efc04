//! Sampled conformal factors and the two-column `r u` text format.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::Jet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One `(r, u)` row of a table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableSample<T> {
    pub r: T,
    pub u: T,
}

/// Conformal factor interpolated from samples.
///
/// Values come from a local Lagrange polynomial through the nearest
/// [`TabulatedFactor::STENCIL`] samples in `(ln r, ln u)`, which reproduces
/// power laws exactly. Derivatives are fourth-order finite differences of
/// that interpolant with step `h = max(r * rel_step, 1e-8)`, switching to
/// one-sided stencils near the ends of the table.
#[derive(Clone, Debug)]
pub struct TabulatedFactor<T> {
    ln_r: Vec<T>,
    ln_u: Vec<T>,
    r_lo: T,
    r_hi: T,
    rel_step: T,
}

impl<T: Scalar> TabulatedFactor<T> {
    pub const STENCIL: usize = 8;
    pub const DEFAULT_REL_STEP: f64 = 1e-3;

    pub fn from_samples(samples: &[TableSample<T>]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidProfile(format!(
                "table needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.r > T::zero()) || !s.r.is_finite() {
                return Err(Error::InvalidProfile(format!("sample {i}: radius must be positive")));
            }
            if !(s.u > T::zero()) || !s.u.is_finite() {
                return Err(Error::InvalidProfile(format!("sample {i}: u must be positive")));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| !(w[0].r < w[1].r)) {
            return Err(Error::InvalidProfile(format!(
                "radii must be strictly increasing (sample {})",
                i + 1
            )));
        }
        Ok(TabulatedFactor {
            ln_r: samples.iter().map(|s| s.r.ln()).collect(),
            ln_u: samples.iter().map(|s| s.u.ln()).collect(),
            r_lo: samples[0].r,
            r_hi: samples[samples.len() - 1].r,
            rel_step: T::lit(Self::DEFAULT_REL_STEP),
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self>
    where
        T: FromStr,
    {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_samples(&parse_table(&text)?)
    }

    /// Overrides the relative finite-difference step.
    pub fn with_rel_step(mut self, rel_step: T) -> Self {
        self.rel_step = rel_step;
        self
    }

    pub fn range(&self) -> (T, T) {
        (self.r_lo, self.r_hi)
    }

    pub fn len(&self) -> usize {
        self.ln_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_r.is_empty()
    }

    /// Interpolated `u(r)`; `r` must lie in the table range.
    pub fn value(&self, r: T) -> T {
        let x = r.ln();
        let n = self.ln_r.len();
        let k = Self::STENCIL.min(n);
        // index of the first node strictly above x
        let above = self.ln_r.partition_point(|&v| v <= x);
        if above > 0 && self.ln_r[above - 1] == x {
            return self.ln_u[above - 1].exp();
        }
        let start = above.saturating_sub(k / 2).min(n - k);
        let xs = &self.ln_r[start..start + k];
        let ys = &self.ln_u[start..start + k];
        let mut acc = T::zero();
        for j in 0..k {
            let mut w = T::one();
            for m in 0..k {
                if m != j {
                    w = w * (x - xs[m]) / (xs[j] - xs[m]);
                }
            }
            acc = acc + w * ys[j];
        }
        acc.exp()
    }

    pub fn jet(&self, r: T) -> Jet<T> {
        let h = (r * self.rel_step).max(T::lit(1e-8));
        let f = |x: T| self.value(x);
        let two = T::lit(2.0);
        let twelve = T::lit(12.0);
        let u = f(r);
        let (du, d2u) = if r - two * h >= self.r_lo && r + two * h <= self.r_hi {
            let (m2, m1, p1, p2) = (f(r - two * h), f(r - h), f(r + h), f(r + two * h));
            (
                (m2 - T::lit(8.0) * m1 + T::lit(8.0) * p1 - p2) / (twelve * h),
                (-m2 + T::lit(16.0) * m1 - T::lit(30.0) * u + T::lit(16.0) * p1 - p2)
                    / (twelve * h * h),
            )
        } else {
            // one-sided: march into the table
            let s = if r - two * h < self.r_lo { h } else { -h };
            let fk: Vec<T> = (0..6)
                .map(|i| f(r + s * T::lit(i as f64)))
                .collect();
            let d1 = (T::lit(-25.0) * fk[0] + T::lit(48.0) * fk[1] - T::lit(36.0) * fk[2]
                + T::lit(16.0) * fk[3]
                - T::lit(3.0) * fk[4])
                / (twelve * s);
            let d2 = (T::lit(45.0) * fk[0] - T::lit(154.0) * fk[1] + T::lit(214.0) * fk[2]
                - T::lit(156.0) * fk[3]
                + T::lit(61.0) * fk[4]
                - T::lit(10.0) * fk[5])
                / (twelve * h * h);
            (d1, d2)
        };
        Jet { u, du, d2u }
    }
}

/// Parses whitespace- or comma-separated `r u` rows. Lines starting with `#`
/// and blank lines are skipped.
pub fn parse_table<T: Scalar + FromStr>(text: &str) -> Result<Vec<TableSample<T>>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let mut cols = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|c| !c.is_empty());
        let mut next = |what: &str| -> Result<T> {
            let tok = cols.next().ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("missing {what} column"),
            })?;
            tok.parse::<T>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("cannot parse {what} value {tok:?}"),
            })
        };
        let r = next("r")?;
        let u = next("u")?;
        if let Some(extra) = cols.next() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("unexpected third column {extra:?}"),
            });
        }
        if let Some(prev) = out.last() {
            let prev: &TableSample<T> = prev;
            if !(r > prev.r) {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("radius {r} not strictly increasing"),
                });
            }
        }
        out.push(TableSample { r, u });
    }
    Ok(out)
}

/// Renders samples in the two-column format, each header line prefixed by `# `.
/// Numbers use the shortest representation that parses back exactly.
pub fn write_table<T: Scalar>(samples: &[TableSample<T>], header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    for s in samples {
        let _ = writeln!(out, "{:?} {:?}", s.r, s.u);
    }
    out
}
