//! Unitarily invariant norms of real matrices, computed from singular values.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Norm selector. Text codes: `schatten:<p>`, `kyfan:<k>`, `op`, `tr`, `fro`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Schatten(f64),
    KyFan(usize),
    Operator,
    Trace,
    Frobenius,
}

impl NormKind {
    pub fn schatten(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            return Ok(NormKind::Operator);
        }
        if !(p >= 1.0) {
            return Err(Error::Domain(format!("Schatten exponent {p} must be >= 1")));
        }
        Ok(NormKind::Schatten(p))
    }

    pub fn ky_fan(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("Ky Fan index must be >= 1".into()));
        }
        Ok(NormKind::KyFan(k))
    }

    /// Every Ky Fan norm up to `rank_bound`, Schatten 1, 2, 3 and the operator
    /// norm.
    pub fn battery(rank_bound: usize) -> Vec<NormKind> {
        let mut norms: Vec<NormKind> = (1..=rank_bound).map(NormKind::KyFan).collect();
        norms.extend([NormKind::Schatten(1.0), NormKind::Schatten(2.0), NormKind::Schatten(3.0), NormKind::Operator]);
        norms
    }

    /// Evaluates the norm from singular values sorted in descending order.
    pub fn eval_singular_values(&self, sv: &[f64]) -> Result<f64> {
        let top = sv.first().copied().unwrap_or(0.0);
        match *self {
            NormKind::Operator => Ok(top),
            NormKind::Trace => Ok(sv.iter().sum()),
            NormKind::KyFan(k) => {
                if k == 0 || k > sv.len() {
                    return Err(Error::Domain(format!("Ky Fan index {k} outside 1..={}", sv.len())));
                }
                Ok(sv[..k].iter().sum())
            }
            NormKind::Frobenius => Ok(schatten(sv, 2.0)),
            NormKind::Schatten(p) => {
                if !(p >= 1.0) {
                    return Err(Error::Domain(format!("Schatten exponent {p} must be >= 1")));
                }
                Ok(schatten(sv, p))
            }
        }
    }
}

fn schatten(sv: &[f64], p: f64) -> f64 {
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return sv.iter().sum();
    }
    let sum: f64 = sv.iter().map(|s| (s / top).powf(p)).sum();
    top * sum.powf(1.0 / p)
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Schatten(p) => write!(f, "schatten:{p}"),
            NormKind::KyFan(k) => write!(f, "kyfan:{k}"),
            NormKind::Operator => f.write_str("op"),
            NormKind::Trace => f.write_str("tr"),
            NormKind::Frobenius => f.write_str("fro"),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "op" => return Ok(NormKind::Operator),
            "tr" => return Ok(NormKind::Trace),
            "fro" => return Ok(NormKind::Frobenius),
            _ => {}
        }
        let bad = || Error::Parse(format!("malformed norm code {s:?}"));
        let (name, arg) = s.split_once(':').ok_or_else(bad)?;
        match name {
            "schatten" => {
                let p = if arg == "inf" { f64::INFINITY } else { arg.parse().map_err(|_| bad())? };
                NormKind::schatten(p)
            }
            "kyfan" => NormKind::ky_fan(arg.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

impl Serialize for NormKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NormKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Singular values in descending order, `min(n, m)` of them.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let svd = nalgebra::linalg::SVD::try_new(a.clone(), false, false, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Convergence("SVD iteration limit reached".into()))?;
    let mut sv: Vec<f64> = svd.singular_values.iter().map(|s| s.abs()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

pub fn uinorm(kind: NormKind, a: &DMatrix<f64>) -> Result<f64> {
    kind.eval_singular_values(&singular_values(a)?)
}
