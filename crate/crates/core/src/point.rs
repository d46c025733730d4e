//! Points of the open unit hypercube.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Write a real with 17 significant digits, enough for an exact `f64` round trip.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// A point strictly inside `(0,1)^n`.
///
/// For the LoRaWAN instance the layout is `[S7_UL..S12_UL, S7_DL..S12_DL]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitPoint(Vec<f64>);

impl UnitPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("a unit point needs at least one component"));
        }
        check_open_unit(&values)?;
        Ok(Self(values))
    }

    /// Every component set to `value`.
    pub fn splat(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    /// The midpoint of the cube.
    pub fn midpoint(dim: usize) -> Self {
        Self(vec![0.5; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for UnitPoint {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<UnitPoint> for Vec<f64> {
    fn from(p: UnitPoint) -> Self {
        p.0
    }
}

impl AsRef<[f64]> for UnitPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Display for UnitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(&format_real(*v))?;
        }
        Ok(())
    }
}

impl FromStr for UnitPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(values)
    }
}

/// Fails on the first component not strictly inside `(0,1)` (NaN included).
pub(crate) fn check_open_unit(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !(*v > 0.0 && *v < 1.0)) {
        Some(index) => Err(Error::OutOfDomain {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Euclidean norm of `a - b`.
pub fn euclidean_distance(a: &UnitPoint, b: &UnitPoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(distance(a.values(), b.values()))
}
