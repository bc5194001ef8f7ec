//! Named one-dimensional basis functions for potentials.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// `1`, `x`, `x^k`, `gauss(c,w) = exp(-((x-c)/w)^2)`, `sin(k) = sin(k x)`,
/// `cos(k) = cos(k x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BasisFn {
    One,
    X,
    Pow(u32),
    Gauss { c: f64, w: f64 },
    Sin(f64),
    Cos(f64),
}

impl BasisFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            BasisFn::One => 1.0,
            BasisFn::X => x,
            BasisFn::Pow(k) => x.powi(k as i32),
            BasisFn::Gauss { c, w } => (-((x - c) / w).powi(2)).exp(),
            BasisFn::Sin(k) => (k * x).sin(),
            BasisFn::Cos(k) => (k * x).cos(),
        }
    }

    /// Samples on the first axis of `grid`.
    pub fn sample(&self, grid: &GridSpec) -> ScalarField {
        ScalarField::from_fn(*grid, |x| self.eval(x[0]))
    }
}

impl fmt::Display for BasisFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisFn::One => write!(f, "1"),
            BasisFn::X => write!(f, "x"),
            BasisFn::Pow(k) => write!(f, "x^{k}"),
            BasisFn::Gauss { c, w } => write!(f, "gauss({c},{w})"),
            BasisFn::Sin(k) => write!(f, "sin({k})"),
            BasisFn::Cos(k) => write!(f, "cos({k})"),
        }
    }
}

fn args(s: &str, head: &str) -> Option<Vec<f64>> {
    let inner = s.strip_prefix(head)?.strip_prefix('(')?.strip_suffix(')')?;
    inner.split(',').map(|t| t.trim().parse().ok()).collect()
}

impl FromStr for BasisFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("unknown basis function {s:?}"));
        match s {
            "1" => return Ok(BasisFn::One),
            "x" => return Ok(BasisFn::X),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("x^") {
            return k.parse().map(BasisFn::Pow).map_err(|_| bad());
        }
        if let Some(a) = args(s, "gauss") {
            if a.len() == 2 && a[1] > 0.0 {
                return Ok(BasisFn::Gauss { c: a[0], w: a[1] });
            }
            return Err(bad());
        }
        if let Some(a) = args(s, "sin") {
            return if a.len() == 1 { Ok(BasisFn::Sin(a[0])) } else { Err(bad()) };
        }
        if let Some(a) = args(s, "cos") {
            return if a.len() == 1 { Ok(BasisFn::Cos(a[0])) } else { Err(bad()) };
        }
        Err(bad())
    }
}

impl Serialize for BasisFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BasisFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One term `coef * basis` of a potential expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub basis: BasisFn,
    pub coef: f64,
}

/// `sum coef_k basis_k`, summed in list order.
pub fn expand(terms: &[Term], grid: &GridSpec) -> ScalarField {
    let mut out = ScalarField::zeros(*grid);
    for t in terms {
        let b = t.basis.sample(grid);
        for (o, v) in out.values_mut().iter_mut().zip(b.values()) {
            *o += t.coef * v;
        }
    }
    out
}
