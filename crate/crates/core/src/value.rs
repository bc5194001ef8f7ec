//! Report carriers shared by every module: extended reals and inequality audits.

use serde::{Deserialize, Serialize};

/// A real number or `+inf`, serialized as a tagged object so reports stay
/// portable JSON.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Extended {
    Finite(f64),
    PlusInfinity,
}

impl Extended {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            Extended::Finite(v) => Some(v),
            Extended::PlusInfinity => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// Maps non-finite floats to `+inf`.
    pub fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            Extended::Finite(v)
        } else {
            Extended::PlusInfinity
        }
    }
}

impl std::fmt::Display for Extended {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::PlusInfinity => write!(f, "+inf"),
        }
    }
}

/// One checked inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityAudit {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    pub tolerance: f64,
}

impl InequalityAudit {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        InequalityAudit {
            name: name.into(),
            lhs,
            rhs,
            margin,
            pass: margin >= -tolerance,
            tolerance,
        }
    }

    /// Audit with the default roundoff tolerance `1e-10 * max(1, |lhs|, |rhs|)`.
    pub fn roundoff(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, default_tolerance(lhs, rhs))
    }

    /// Same audit judged against a different tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.pass = self.margin >= -tolerance;
        self
    }
}

pub fn default_tolerance(lhs: f64, rhs: f64) -> f64 {
    1e-10 * 1f64.max(lhs.abs()).max(rhs.abs())
}
