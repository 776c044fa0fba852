//! Confidence sets, which need not be finite intervals.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Result of inverting a test or applying an interval construction.
///
/// Only `Bounded` sets have a finite width. A Fieller set with negative
/// leading coefficient is the complement of a finite interval (`RayUnion`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConfidenceSet {
    /// `[lower, upper]`.
    Bounded { lower: f64, upper: f64 },
    /// `(-inf, upper]`.
    LowerUnbounded { upper: f64 },
    /// `[lower, +inf)`.
    UpperUnbounded { lower: f64 },
    /// `(-inf, a] U [b, +inf)` with `a < b`.
    RayUnion { a: f64, b: f64 },
    /// The whole real line.
    WholeLine,
    /// No usable set; the reason is reported to the user.
    Undefined { reason: String },
}

impl ConfidenceSet {
    pub fn bounded(lower: f64, upper: f64) -> Self {
        ConfidenceSet::Bounded { lower, upper }
    }

    pub fn undefined(reason: impl Into<String>) -> Self {
        ConfidenceSet::Undefined {
            reason: reason.into(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, ConfidenceSet::Bounded { .. })
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            ConfidenceSet::Bounded { lower, upper } => lower <= x && x <= upper,
            ConfidenceSet::LowerUnbounded { upper } => x <= upper,
            ConfidenceSet::UpperUnbounded { lower } => lower <= x,
            ConfidenceSet::RayUnion { a, b } => x <= a || x >= b,
            ConfidenceSet::WholeLine => true,
            ConfidenceSet::Undefined { .. } => false,
        }
    }

    /// Width of a bounded set; `None` for every other shape.
    pub fn width(&self) -> Option<f64> {
        match *self {
            ConfidenceSet::Bounded { lower, upper } => Some(upper - lower),
            _ => None,
        }
    }

    /// Finite lower endpoint, if any.
    pub fn lower(&self) -> Option<f64> {
        match *self {
            ConfidenceSet::Bounded { lower, .. } | ConfidenceSet::UpperUnbounded { lower } => {
                Some(lower)
            }
            _ => None,
        }
    }

    /// Finite upper endpoint, if any.
    pub fn upper(&self) -> Option<f64> {
        match *self {
            ConfidenceSet::Bounded { upper, .. } | ConfidenceSet::LowerUnbounded { upper } => {
                Some(upper)
            }
            _ => None,
        }
    }

    /// Short machine-readable name of the shape.
    pub fn kind(&self) -> &'static str {
        match self {
            ConfidenceSet::Bounded { .. } => "bounded",
            ConfidenceSet::LowerUnbounded { .. } => "lower-unbounded",
            ConfidenceSet::UpperUnbounded { .. } => "upper-unbounded",
            ConfidenceSet::RayUnion { .. } => "ray-union",
            ConfidenceSet::WholeLine => "whole-line",
            ConfidenceSet::Undefined { .. } => "undefined",
        }
    }

    /// True if any finite endpoint falls outside `[min, max]`.
    pub fn exceeds(&self, min: f64, max: f64) -> bool {
        let out = |x: f64| x < min || x > max;
        match *self {
            ConfidenceSet::Bounded { lower, upper } => out(lower) || out(upper),
            ConfidenceSet::LowerUnbounded { upper: x }
            | ConfidenceSet::UpperUnbounded { lower: x } => out(x),
            ConfidenceSet::RayUnion { a, b } => out(a) || out(b),
            _ => false,
        }
    }

    /// Human-readable rendering with `decimals` digits.
    pub fn render(&self, decimals: usize) -> String {
        let f = |x: f64| format!("{x:.decimals$}");
        match *self {
            ConfidenceSet::Bounded { lower, upper } => format!("({}, {})", f(lower), f(upper)),
            ConfidenceSet::LowerUnbounded { upper } => format!("(-inf, {})", f(upper)),
            ConfidenceSet::UpperUnbounded { lower } => format!("({}, +inf)", f(lower)),
            ConfidenceSet::RayUnion { a, b } => {
                format!("(-inf, {}) U ({}, +inf)", f(a), f(b))
            }
            ConfidenceSet::WholeLine => "(-inf, +inf)".to_string(),
            ConfidenceSet::Undefined { ref reason } => format!("undefined ({reason})"),
        }
    }
}

impl fmt::Display for ConfidenceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(f.precision().unwrap_or(2)))
    }
}
