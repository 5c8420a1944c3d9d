//! Scalar symmetric homogeneous means.
//!
//! Every mean is evaluated in the geometric-centered hyperbolic form: write
//! `x = g·e^{u/2}`, `y = g·e^{-u/2}` with `g = √(xy)` and `u = ln(x/y)`. Each
//! family then becomes `g` times a product of powers of `sinh(z)/z`, `cosh(z)`
//! and `e^z` factors evaluated at multiples of `u`. All removable singularities
//! (`x = y`, `α → 0`, `α → 1`) are removable singularities of `sinh(z)/z`,
//! which has a single Taylor fallback near zero.
//!
//! The product is accumulated in the log domain, so ratios such as
//! `M(e^t, 1) / N(e^t, 1)` stay finite for arbitrarily large `|t|` as long as
//! the ratio itself is representable.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Distance from a removable parameter value (`α = 0` or `α = 1`) inside which
/// the analytic limit is used.
pub const ALPHA_LIMIT_WINDOW: f64 = 1e-8;

/// Mean families of the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// `α x^α (x−y) / (x^α − y^α)`; not symmetric.
    P,
    /// `α y^α (x−y) / (x^α − y^α)`; not symmetric.
    Q,
    /// `(P_α + Q_α)/2`, `|α| ≤ 1`.
    A,
    /// Logarithmic combination of `P_α, Q_α`; identically the logarithmic mean.
    L,
    /// `√(P_α Q_α)`, `|α| ≤ 2`.
    G,
    /// Harmonic combination of `P_α, Q_α`, `|α| ≤ 1`.
    H,
    /// Power difference mean `((α−1)/α)(x^α − y^α)/(x^{α−1} − y^{α−1})`.
    M,
    Stolarsky,
    Binomial,
    DualBinomial,
    ExpMean,
    AM,
    GM,
    HM,
    LM,
}

impl Family {
    pub const ALL: [Family; 15] = [
        Family::P,
        Family::Q,
        Family::A,
        Family::L,
        Family::G,
        Family::H,
        Family::M,
        Family::Stolarsky,
        Family::Binomial,
        Family::DualBinomial,
        Family::ExpMean,
        Family::AM,
        Family::GM,
        Family::HM,
        Family::LM,
    ];

    /// Whether the family carries a meaningful `α`.
    pub fn is_parametric(self) -> bool {
        !matches!(self, Family::L | Family::AM | Family::GM | Family::HM | Family::LM)
    }

    /// Largest admissible `|α|`, if the family restricts it.
    pub fn alpha_bound(self) -> Option<f64> {
        match self {
            Family::A | Family::H => Some(1.0),
            Family::G => Some(2.0),
            _ => None,
        }
    }

    fn code(self) -> &'static str {
        match self {
            Family::P => "P",
            Family::Q => "Q",
            Family::A => "A",
            Family::L => "L",
            Family::G => "G",
            Family::H => "H",
            Family::M => "M",
            Family::Stolarsky => "S",
            Family::Binomial => "B",
            Family::DualBinomial => "D",
            Family::ExpMean => "E",
            Family::AM => "AM",
            Family::GM => "GM",
            Family::HM => "HM",
            Family::LM => "LM",
        }
    }

    fn from_code(code: &str) -> Option<Family> {
        let family = match code {
            "P" => Family::P,
            "Q" => Family::Q,
            "A" => Family::A,
            "L" => Family::L,
            "G" => Family::G,
            "H" => Family::H,
            "M" => Family::M,
            "S" | "Stolarsky" => Family::Stolarsky,
            "B" | "Binomial" => Family::Binomial,
            "D" | "DualBinomial" => Family::DualBinomial,
            "E" | "ExpMean" => Family::ExpMean,
            "AM" => Family::AM,
            "GM" => Family::GM,
            "HM" => Family::HM,
            "LM" => Family::LM,
            _ => return None,
        };
        Some(family)
    }
}

/// A mean family together with its (validated) parameter.
///
/// The canonical text form is `CODE:alpha` for parametric families
/// (`A:0.5`, `M:0.75`, `S:2`) and the bare code otherwise (`LM`, `AM`, `L`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanKind {
    family: Family,
    alpha: f64,
}

impl MeanKind {
    pub const AM: MeanKind = MeanKind { family: Family::AM, alpha: 0.0 };
    pub const GM: MeanKind = MeanKind { family: Family::GM, alpha: 0.0 };
    pub const HM: MeanKind = MeanKind { family: Family::HM, alpha: 0.0 };
    pub const LM: MeanKind = MeanKind { family: Family::LM, alpha: 0.0 };
    pub const L: MeanKind = MeanKind { family: Family::L, alpha: 0.0 };

    /// Builds a kind, enforcing the parameter domain of the family.
    pub fn new(family: Family, alpha: f64) -> Result<Self> {
        if !family.is_parametric() {
            return Ok(MeanKind { family, alpha: 0.0 });
        }
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("parameter {alpha} is not finite")));
        }
        if let Some(bound) = family.alpha_bound() {
            if alpha.abs() > bound {
                return Err(Error::Domain(format!(
                    "{}: |alpha| = {} exceeds {bound}",
                    family.code(),
                    alpha.abs()
                )));
            }
        }
        Ok(MeanKind { family, alpha })
    }

    pub fn p(alpha: f64) -> Result<Self> {
        Self::new(Family::P, alpha)
    }
    pub fn q(alpha: f64) -> Result<Self> {
        Self::new(Family::Q, alpha)
    }
    pub fn a(alpha: f64) -> Result<Self> {
        Self::new(Family::A, alpha)
    }
    pub fn g(alpha: f64) -> Result<Self> {
        Self::new(Family::G, alpha)
    }
    pub fn h(alpha: f64) -> Result<Self> {
        Self::new(Family::H, alpha)
    }
    pub fn m(alpha: f64) -> Result<Self> {
        Self::new(Family::M, alpha)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `α` with values within [`ALPHA_LIMIT_WINDOW`] of a removable point
    /// snapped onto it.
    fn effective_alpha(&self) -> f64 {
        let a = self.alpha;
        match self.family {
            Family::M => snap(snap(a, 0.0), 1.0),
            Family::Stolarsky => snap(a, 1.0),
            Family::Binomial | Family::DualBinomial | Family::ExpMean => snap(a, 0.0),
            _ => a,
        }
    }

    /// `M(1, 0⁺)`: the continuous extension of the mean when the second
    /// argument tends to zero. By homogeneity `M(λ, 0) = λ·M(1, 0)`.
    pub fn second_zero_limit(&self) -> f64 {
        let a = self.effective_alpha();
        match self.family {
            Family::L | Family::LM | Family::G | Family::H | Family::GM | Family::HM => 0.0,
            Family::AM => 0.5,
            Family::P => a.max(0.0),
            Family::Q => (-a).max(0.0),
            Family::A => 0.5 * a.abs(),
            Family::M => {
                if a > 1.0 {
                    (a - 1.0) / a
                } else {
                    0.0
                }
            }
            Family::Stolarsky => {
                if a <= 0.0 {
                    0.0
                } else if a == 1.0 {
                    (-1.0f64).exp()
                } else {
                    a.powf(1.0 / (1.0 - a))
                }
            }
            Family::Binomial => {
                if a > 0.0 {
                    2f64.powf(-1.0 / a)
                } else {
                    0.0
                }
            }
            Family::DualBinomial => {
                if a < 0.0 {
                    2f64.powf(1.0 / a)
                } else {
                    0.0
                }
            }
            Family::ExpMean => 0.0,
        }
    }

    /// `M(0⁺, 1)`. Equal to [`second_zero_limit`](Self::second_zero_limit)
    /// for every symmetric family; `P` and `Q` swap roles.
    pub fn first_zero_limit(&self) -> f64 {
        match self.family {
            Family::P => MeanKind { family: Family::Q, alpha: self.alpha }.second_zero_limit(),
            Family::Q => MeanKind { family: Family::P, alpha: self.alpha }.second_zero_limit(),
            _ => self.second_zero_limit(),
        }
    }

    /// `ln(M(e^{u/2}, e^{-u/2}))`, i.e. the log of the mean divided by the
    /// geometric center.
    fn ln_centered(&self, u: f64, policy: &EvalPolicy) -> f64 {
        let s = |z: f64| ln_sinhc(z, policy.small_z_series_threshold);
        let c = ln_cosh;
        let a = self.effective_alpha();
        let h = 0.5 * u;
        match self.family {
            Family::L | Family::LM => s(h),
            Family::P => a * h + s(h) - s(a * h),
            Family::Q => -a * h + s(h) - s(a * h),
            Family::A => c(a * h) + s(h) - s(a * h),
            Family::G => s(h) - s(a * h),
            Family::H => s(h) - s(a * h) - c(a * h),
            Family::M => s(a * h) - s((a - 1.0) * h),
            Family::AM => c(h),
            Family::GM => 0.0,
            Family::HM => -c(h),
            Family::Stolarsky => {
                if a == 1.0 {
                    z_coth_z_minus_one(h, policy.small_z_series_threshold)
                } else {
                    (s(h) - s(a * h)) / (1.0 - a)
                }
            }
            Family::Binomial => {
                if a == 0.0 {
                    0.0
                } else {
                    c(a * h) / a
                }
            }
            Family::DualBinomial => {
                if a == 0.0 {
                    0.0
                } else {
                    -c(a * h) / a
                }
            }
            Family::ExpMean => {
                if a == 0.0 {
                    0.0
                } else {
                    s(a * h) / a
                }
            }
        }
    }
}

fn snap(a: f64, point: f64) -> f64 {
    if (a - point).abs() <= ALPHA_LIMIT_WINDOW {
        point
    } else {
        a
    }
}

impl fmt::Display for MeanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.family.is_parametric() {
            write!(f, "{}:{}", self.family.code(), self.alpha)
        } else {
            f.write_str(self.family.code())
        }
    }
}

impl FromStr for MeanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (code, alpha) = match s.split_once(':') {
            Some((code, alpha)) => {
                let alpha: f64 = alpha
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad mean parameter in {s:?}")))?;
                (code.trim(), Some(alpha))
            }
            None => (s, None),
        };
        let family =
            Family::from_code(code).ok_or_else(|| Error::Parse(format!("unknown mean kind {s:?}")))?;
        match (family.is_parametric(), alpha) {
            (true, None) => Err(Error::Parse(format!("mean kind {s:?} needs a parameter"))),
            (_, alpha) => MeanKind::new(family, alpha.unwrap_or(0.0)),
        }
    }
}

impl Serialize for MeanKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeanKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Numerical thresholds for scalar evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPolicy {
    /// `|x − y| ≤ threshold · max(x, y)` selects the near-equal branch.
    pub equal_args_rel_threshold: f64,
    /// `|z|` below which `sinh(z)/z` switches to its Taylor series.
    pub small_z_series_threshold: f64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        EvalPolicy { equal_args_rel_threshold: 1e-8, small_z_series_threshold: 1e-4 }
    }
}

impl EvalPolicy {
    pub fn new(equal_args_rel_threshold: f64, small_z_series_threshold: f64) -> Result<Self> {
        let policy = EvalPolicy { equal_args_rel_threshold, small_z_series_threshold };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("equal_args_rel_threshold", self.equal_args_rel_threshold),
            ("small_z_series_threshold", self.small_z_series_threshold),
        ] {
            if !(v > 0.0 && v < 1e-2) {
                return Err(Error::Domain(format!("{name} = {v} must lie in (0, 1e-2)")));
            }
        }
        Ok(())
    }
}

/// `ln(sinh(z)/z)`, accurate for all real `z`.
pub(crate) fn ln_sinhc(z: f64, series_threshold: f64) -> f64 {
    let z = z.abs();
    if z < series_threshold {
        let z2 = z * z;
        (z2 / 6.0 + z2 * z2 / 120.0 + z2 * z2 * z2 / 5040.0).ln_1p()
    } else if z < 20.0 {
        (z.sinh() / z).ln()
    } else {
        z - std::f64::consts::LN_2 - z.ln() + (-(-2.0 * z).exp()).ln_1p()
    }
}

/// `ln(cosh(z))`, accurate for all real `z`.
pub(crate) fn ln_cosh(z: f64) -> f64 {
    let z = z.abs();
    if z < 20.0 {
        let s = (0.5 * z).sinh();
        (2.0 * s * s).ln_1p()
    } else {
        z - std::f64::consts::LN_2 + (-2.0 * z).exp().ln_1p()
    }
}

/// `z·coth(z) − 1`, the log of the identric mean over the geometric center.
fn z_coth_z_minus_one(z: f64, series_threshold: f64) -> f64 {
    let z = z.abs();
    if z < series_threshold {
        let z2 = z * z;
        z2 / 3.0 - z2 * z2 / 45.0 + 2.0 * z2 * z2 * z2 / 945.0
    } else {
        z / z.tanh() - 1.0
    }
}

/// Log-ratio `ln(x/y)`, using `ln_1p` when the arguments are close.
fn log_ratio(x: f64, y: f64, policy: &EvalPolicy) -> f64 {
    let near = (x - y).abs() <= policy.equal_args_rel_threshold * x.max(y);
    if near || (0.5..=2.0).contains(&(x / y)) {
        ((x - y) / y).ln_1p()
    } else {
        x.ln() - y.ln()
    }
}

/// Evaluates `M(x, y)` for strictly positive arguments.
pub fn eval_mean(kind: MeanKind, x: f64, y: f64, policy: &EvalPolicy) -> Result<f64> {
    if !(x > 0.0 && x.is_finite() && y > 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!("mean arguments must be positive and finite, got ({x}, {y})")));
    }
    if x == y {
        return Ok(x);
    }
    let u = log_ratio(x, y, policy);
    let g = x.sqrt() * y.sqrt();
    Ok(g * kind.ln_centered(u, policy).exp())
}

/// Evaluates `M(x, y)` for nonnegative arguments, using the continuous
/// extension `M(λ, 0) = λ·M(1, 0⁺)` on the boundary.
pub fn eval_mean_ext(kind: MeanKind, x: f64, y: f64, policy: &EvalPolicy) -> Result<f64> {
    if !(x >= 0.0 && x.is_finite() && y >= 0.0 && y.is_finite()) {
        return Err(Error::Domain(format!("mean arguments must be nonnegative and finite, got ({x}, {y})")));
    }
    match (x == 0.0, y == 0.0) {
        (true, true) => Ok(0.0),
        (false, true) => Ok(x * kind.second_zero_limit()),
        (true, false) => Ok(y * kind.first_zero_limit()),
        (false, false) => eval_mean(kind, x, y, policy),
    }
}

/// Argument scaling for mean-ratio functions on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioScale {
    /// `s = e^t`
    Exp,
    /// `s = e^{2t}`
    Exp2,
}

impl RatioScale {
    fn log_arg(self, t: f64) -> f64 {
        match self {
            RatioScale::Exp => t,
            RatioScale::Exp2 => 2.0 * t,
        }
    }
}

/// `M(s, 1) / N(s, 1)` with `s = e^t` or `s = e^{2t}`, computed without ever
/// forming `s`.
pub fn eval_ratio(
    numerator: MeanKind,
    denominator: MeanKind,
    t: f64,
    scale: RatioScale,
    policy: &EvalPolicy,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    if !t.is_finite() {
        return Err(Error::Overflow(format!("ratio argument t = {t} is not finite")));
    }
    let u = scale.log_arg(t);
    let log = numerator.ln_centered(u, policy) - denominator.ln_centered(u, policy);
    let value = log.exp();
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Overflow(format!("{numerator}/{denominator} at t = {t} is not representable")))
    }
}

/// Auxiliary means of the geometric bridge identities, each returning
/// `M(x, y)` for positive arguments.
pub mod bridges {
    use super::*;

    pub fn stolarsky(alpha: f64, x: f64, y: f64, policy: &EvalPolicy) -> Result<f64> {
        eval_mean(MeanKind::new(Family::Stolarsky, alpha)?, x, y, policy)
    }

    pub fn binomial(alpha: f64, x: f64, y: f64, policy: &EvalPolicy) -> Result<f64> {
        eval_mean(MeanKind::new(Family::Binomial, alpha)?, x, y, policy)
    }

    pub fn dual_binomial(alpha: f64, x: f64, y: f64, policy: &EvalPolicy) -> Result<f64> {
        eval_mean(MeanKind::new(Family::DualBinomial, alpha)?, x, y, policy)
    }

    pub fn exp_mean(alpha: f64, x: f64, y: f64, policy: &EvalPolicy) -> Result<f64> {
        eval_mean(MeanKind::new(Family::ExpMean, alpha)?, x, y, policy)
    }
}
