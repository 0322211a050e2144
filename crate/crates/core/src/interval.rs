use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("degenerate or non-finite interval [{a}, {b}]")]
pub struct IntervalError {
    pub a: f64,
    pub b: f64,
}

/// A non-degenerate closed interval `[a, b]` with finite endpoints and `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct Interval {
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    a: f64,
    b: f64,
}

impl TryFrom<RawInterval> for Interval {
    type Error = IntervalError;

    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        Interval::new(raw.a, raw.b)
    }
}

impl From<Interval> for RawInterval {
    fn from(i: Interval) -> Self {
        RawInterval { a: i.a, b: i.b }
    }
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, IntervalError> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Interval { a, b })
        } else {
            Err(IntervalError { a, b })
        }
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> f64 {
        self.b
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        self.a + 0.5 * (self.b - self.a)
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    /// `other ⊆ self`.
    #[inline]
    pub fn encloses(&self, other: &Interval) -> bool {
        self.a <= other.a && other.b <= self.b
    }

    /// Strict disjointness of closed intervals: no shared endpoint.
    #[inline]
    pub fn is_disjoint(&self, other: &Interval) -> bool {
        self.b < other.a || other.b < self.a
    }

    #[inline]
    pub fn intersects(&self, other: &Interval) -> bool {
        !self.is_disjoint(other)
    }

    /// Point at relative position `t` in `[0, 1]`; `t = 1` returns `b` exactly.
    #[inline]
    pub fn lerp(&self, t: f64) -> f64 {
        if t >= 1.0 {
            self.b
        } else {
            self.a + self.length() * t
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}
