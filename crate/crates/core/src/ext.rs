//! Extended reals for divergences that may be infinite.

use std::fmt;

use crate::{Error, Result};

/// A value in `[-inf, +inf]`.
///
/// Variant order gives the natural ordering, so the derived `PartialOrd`
/// compares correctly. `+inf` absorbs finite addends; `+inf - +inf` and
/// `+inf + -inf` are reported through [`Error::Indeterminate`] instead of
/// producing a NaN.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Lossy view as `f64`, using IEEE infinities. Meant for output only.
    pub fn to_f64(&self) -> f64 {
        match *self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn checked_add(self, rhs: ExtReal, context: &str) -> Result<ExtReal> {
        use ExtReal::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
            (PosInf, NegInf) | (NegInf, PosInf) => Err(Error::Indeterminate(context.to_string())),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
        }
    }

    pub fn checked_sub(self, rhs: ExtReal, context: &str) -> Result<ExtReal> {
        self.checked_add(-rhs, context)
    }

    pub fn scale(self, w: f64) -> ExtReal {
        debug_assert!(w >= 0.0);
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(w * v),
            // 0 * inf contributes nothing: zero-weight terms are excluded.
            _ if w == 0.0 => ExtReal::ZERO,
            other => other,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl std::ops::Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::PosInf => write!(f, "inf"),
            ExtReal::Finite(v) => fmt::Display::fmt(v, f),
        }
    }
}
