//! Operator means `M(S, T)X` for positive semidefinite `S`, `T`.
//!
//! With `S = U·diag(λ)·Uᵀ` and `T = V·diag(μ)·Vᵀ` the transform is the Schur
//! multiplier
//!
//! ```text
//! M(S, T)X = U·(W ∘ (Uᵀ X V))·Vᵀ,   W_ij = M(λ_i, μ_j)
//! ```
//!
//! Two independent routes are provided for the special families that admit
//! them: finite sums of fractional-power sandwiches `S^p X T^q`
//! ([`power_sum_representation`]) and Gauss–Legendre quadrature of
//! `∫₀¹ S^ν X T^{1−ν} dν` for the logarithmic mean ([`log_mean_integral`]).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar_means::{eval_mean_ext, EvalPolicy, MeanKind};

pub const DEFAULT_CLAMP_REL: f64 = 1e-10;
pub const DEFAULT_LOG_MEAN_NODES: usize = 64;

/// Eigenvalues (descending, nonnegative) and orthonormal eigenvectors of a
/// positive semidefinite matrix. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are eigenvectors, in the order of [`eigenvalues`](Self::eigenvalues).
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `U·diag(f(λ))·Uᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(j).scale_mut(fl);
        }
        &scaled * u.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.map_spectrum(|l| l)
    }

    /// Restriction to the eigenvectors with strictly positive eigenvalues.
    pub fn support(&self) -> SpectralDecomposition {
        let keep: Vec<usize> = (0..self.dimension()).filter(|&i| self.eigenvalues[i] > 0.0).collect();
        SpectralDecomposition {
            eigenvalues: keep.iter().map(|&i| self.eigenvalues[i]).collect(),
            eigenvectors: self.eigenvectors.select_columns(keep.iter()),
        }
    }
}

/// Symmetrizes `s`, eigensolves it and enforces positive semidefiniteness.
///
/// Eigenvalues with `|λ| ≤ clamp_rel·max|λ|` are set to exactly zero; any
/// eigenvalue below `−clamp_rel·max|λ|` is an error.
pub fn decompose_psd(s: &DMatrix<f64>, clamp_rel: f64) -> Result<SpectralDecomposition> {
    let n = s.nrows();
    if n == 0 || s.ncols() != n {
        return Err(Error::Shape(format!("expected a non-empty square matrix, got {}x{}", n, s.ncols())));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    let norm = s.norm();
    let asym = (s - s.transpose()).norm();
    if asym > 1e-12 * norm {
        return Err(Error::Shape(format!("matrix is not symmetric: ||S - S^T||_F = {asym:e}")));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Convergence("symmetric eigensolver iteration limit reached".into()))?;

    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let tol = clamp_rel * scale;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut eigenvalues = Vec::with_capacity(n);
    for &i in &order {
        let l = eig.eigenvalues[i];
        if l < -tol {
            return Err(Error::NotPsd { eigenvalue: l, tolerance: tol });
        }
        eigenvalues.push(if l.abs() <= tol { 0.0 } else { l });
    }
    let eigenvectors = eig.eigenvectors.select_columns(order.iter());
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// `S^p` for `p ∈ [0, 1]`, with `0^p := 0` on the kernel (also for `p = 0`,
/// so `S^0` is the support projection).
pub fn frac_power(decomp: &SpectralDecomposition, p: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("fractional power {p} outside [0, 1]")));
    }
    Ok(decomp.map_spectrum(|l| if l > 0.0 { l.powf(p) } else { 0.0 }))
}

/// The triple `(S, T, X)` with `S` n×n, `T` m×m and `X` n×m.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTransformInput {
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub x: DMatrix<f64>,
}

impl MeanTransformInput {
    pub fn new(s: DMatrix<f64>, t: DMatrix<f64>, x: DMatrix<f64>) -> Result<Self> {
        if !s.is_square() || !t.is_square() {
            return Err(Error::Shape(format!(
                "S and T must be square, got {}x{} and {}x{}",
                s.nrows(),
                s.ncols(),
                t.nrows(),
                t.ncols()
            )));
        }
        if x.nrows() != s.nrows() || x.ncols() != t.nrows() {
            return Err(Error::Shape(format!(
                "X must be {}x{}, got {}x{}",
                s.nrows(),
                t.nrows(),
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(MeanTransformInput { s, t, x })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.s.nrows(), self.t.nrows())
    }

    pub fn decompose(&self) -> Result<DecomposedInput<'_>> {
        Ok(DecomposedInput {
            input: self,
            s: decompose_psd(&self.s, DEFAULT_CLAMP_REL)?,
            t: decompose_psd(&self.t, DEFAULT_CLAMP_REL)?,
        })
    }
}

/// An input together with the decompositions of `S` and `T`, so that several
/// transforms of the same triple share one eigensolve each.
#[derive(Debug, Clone)]
pub struct DecomposedInput<'a> {
    pub input: &'a MeanTransformInput,
    pub s: SpectralDecomposition,
    pub t: SpectralDecomposition,
}

impl DecomposedInput<'_> {
    pub fn mean_transform(&self, kind: MeanKind, policy: &EvalPolicy) -> Result<DMatrix<f64>> {
        schur_transform(kind, &self.s, &self.t, &self.input.x, policy)
    }

    pub fn power_sum(&self, rep: PowerSumRep, m: usize) -> Result<DMatrix<f64>> {
        rep.check(m)?;
        let x = &self.input.x;
        let sandwich = |p: f64, q: f64| -> Result<DMatrix<f64>> { sandwich(&self.s, p, x, &self.t, q) };
        let mf = m as f64;
        let mut acc = DMatrix::zeros(x.nrows(), x.ncols());
        match rep {
            PowerSumRep::GInvM => {
                for k in 1..=m {
                    let p = (2 * k - 1) as f64 / (2.0 * mf);
                    acc += sandwich(p, 1.0 - p)?;
                }
            }
            PowerSumRep::AInvM => {
                for k in 0..=m {
                    let p = k as f64 / mf;
                    acc += sandwich(p, 1.0 - p)?;
                }
                acc -= (&self.input.s * x + x * &self.input.t) * 0.5;
            }
            PowerSumRep::MOverMPlusOne => {
                for k in 1..=m {
                    let p = k as f64 / (mf + 1.0);
                    acc += sandwich(p, 1.0 - p)?;
                }
            }
            PowerSumRep::MOverMMinusOne => {
                for k in 0..m {
                    let p = k as f64 / (mf - 1.0);
                    acc += sandwich(p, 1.0 - p)?;
                }
            }
        }
        Ok(acc / mf)
    }

    pub fn log_mean_integral(&self, nodes: usize) -> Result<DMatrix<f64>> {
        if nodes < 2 {
            return Err(Error::Domain(format!("quadrature needs at least 2 nodes, got {nodes}")));
        }
        let x = &self.input.x;
        let (nu, w) = gauss_legendre_unit(nodes);
        let mut acc = DMatrix::zeros(x.nrows(), x.ncols());
        for (&v, &wi) in nu.iter().zip(&w) {
            let left = frac_power(&self.s, v)?;
            let right = frac_power(&self.t, 1.0 - v)?;
            acc += (left * x * right) * wi;
        }
        Ok(acc)
    }
}

/// `S^p X T^q` where a zero exponent stands for the identity, as in the
/// literal finite sums (`S^0 X = X`).
fn sandwich(
    s: &SpectralDecomposition,
    p: f64,
    x: &DMatrix<f64>,
    t: &SpectralDecomposition,
    q: f64,
) -> Result<DMatrix<f64>> {
    let left = if p == 0.0 { x.clone() } else { frac_power(s, p)? * x };
    Ok(if q == 0.0 { left } else { left * frac_power(t, q)? })
}

/// `U·(W ∘ (Uᵀ X V))·Vᵀ` with `W_ij = M(λ_i, μ_j)`.
pub fn schur_transform(
    kind: MeanKind,
    s: &SpectralDecomposition,
    t: &SpectralDecomposition,
    x: &DMatrix<f64>,
    policy: &EvalPolicy,
) -> Result<DMatrix<f64>> {
    let u = s.eigenvectors();
    let v = t.eigenvectors();
    if x.nrows() != u.nrows() || x.ncols() != v.nrows() {
        return Err(Error::Shape(format!(
            "X is {}x{} but the decompositions are {}x{}",
            x.nrows(),
            x.ncols(),
            u.nrows(),
            v.nrows()
        )));
    }
    let mut core = u.transpose() * x * v;
    for (i, &l) in s.eigenvalues().iter().enumerate() {
        for (j, &m) in t.eigenvalues().iter().enumerate() {
            core[(i, j)] *= eval_mean_ext(kind, l, m, policy)?;
        }
    }
    Ok(u * core * v.transpose())
}

pub fn mean_transform(kind: MeanKind, input: &MeanTransformInput) -> Result<DMatrix<f64>> {
    input.decompose()?.mean_transform(kind, &EvalPolicy::default())
}

/// The four finite-sum representations of special operator means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerSumRep {
    /// `G_{1/m}`: `(1/m) Σ_{k=1}^{m} S^{(2k−1)/2m} X T^{(2m−2k+1)/2m}`, m ≥ 1.
    #[serde(rename = "G_inv_m")]
    GInvM,
    /// `A_{1/m}`: `(1/m)(Σ_{k=0}^{m} S^{k/m} X T^{(m−k)/m} − (SX + XT)/2)`, m ≥ 2.
    #[serde(rename = "A_inv_m")]
    AInvM,
    /// `M_{m/(m+1)}`: `(1/m) Σ_{k=1}^{m} S^{k/(m+1)} X T^{(m+1−k)/(m+1)}`, m ≥ 1.
    #[serde(rename = "M_m_over_m_plus_1")]
    MOverMPlusOne,
    /// `M_{m/(m−1)}`: `(1/m) Σ_{k=0}^{m−1} S^{k/(m−1)} X T^{(m−1−k)/(m−1)}`, m ≥ 2.
    #[serde(rename = "M_m_over_m_minus_1")]
    MOverMMinusOne,
}

impl PowerSumRep {
    pub const ALL: [PowerSumRep; 4] =
        [PowerSumRep::GInvM, PowerSumRep::AInvM, PowerSumRep::MOverMPlusOne, PowerSumRep::MOverMMinusOne];

    pub fn min_m(self) -> usize {
        match self {
            PowerSumRep::GInvM | PowerSumRep::MOverMPlusOne => 1,
            PowerSumRep::AInvM | PowerSumRep::MOverMMinusOne => 2,
        }
    }

    fn check(self, m: usize) -> Result<()> {
        if m < self.min_m() {
            return Err(Error::Domain(format!("{self} needs m >= {}, got {m}", self.min_m())));
        }
        Ok(())
    }

    /// The mean whose transform this sum equals.
    pub fn mean_kind(self, m: usize) -> Result<MeanKind> {
        self.check(m)?;
        let mf = m as f64;
        match self {
            PowerSumRep::GInvM => MeanKind::g(1.0 / mf),
            PowerSumRep::AInvM => MeanKind::a(1.0 / mf),
            PowerSumRep::MOverMPlusOne => MeanKind::m(mf / (mf + 1.0)),
            PowerSumRep::MOverMMinusOne => MeanKind::m(mf / (mf - 1.0)),
        }
    }
}

impl fmt::Display for PowerSumRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerSumRep::GInvM => "G_inv_m",
            PowerSumRep::AInvM => "A_inv_m",
            PowerSumRep::MOverMPlusOne => "M_m_over_m_plus_1",
            PowerSumRep::MOverMMinusOne => "M_m_over_m_minus_1",
        })
    }
}

impl FromStr for PowerSumRep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PowerSumRep::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown power-sum representation {s:?}")))
    }
}

pub fn power_sum_representation(rep: PowerSumRep, m: usize, input: &MeanTransformInput) -> Result<DMatrix<f64>> {
    rep.check(m)?;
    input.decompose()?.power_sum(rep, m)
}

/// `∫₀¹ S^ν X T^{1−ν} dν` by `nodes`-point Gauss–Legendre quadrature.
pub fn log_mean_integral(input: &MeanTransformInput, nodes: usize) -> Result<DMatrix<f64>> {
    if nodes < 2 {
        return Err(Error::Domain(format!("quadrature needs at least 2 nodes, got {nodes}")));
    }
    input.decompose()?.log_mean_integral(nodes)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(z) and its derivative.
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (x.iter().map(|v| 0.5 * (v + 1.0)).collect(), w.iter().map(|v| 0.5 * v).collect())
}

/// Relative Frobenius distance `‖a − b‖_F / max(‖b‖_F, tiny)`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
    }

    #[test]
    fn decompose_examples() {
        let d = decompose_psd(&DMatrix::identity(3, 3), DEFAULT_CLAMP_REL).unwrap();
        assert_eq!(d.eigenvalues(), &[1.0, 1.0, 1.0]);
        let u = d.eigenvectors();
        assert!((u.transpose() * u - DMatrix::identity(3, 3)).norm() < 1e-14);

        let d = decompose_psd(&diag(&[1.0, 4.0]), DEFAULT_CLAMP_REL).unwrap();
        assert_eq!(d.eigenvalues(), &[4.0, 1.0]);
        assert!((d.eigenvectors()[(1, 0)].abs() - 1.0).abs() < 1e-15);

        let v = nalgebra::dvector![1.0, 2.0, 2.0] / 3.0;
        let d = decompose_psd(&(&v * v.transpose()), DEFAULT_CLAMP_REL).unwrap();
        assert_relative_eq!(d.eigenvalues()[0], 1.0, max_relative = 1e-14);
        assert_eq!(&d.eigenvalues()[1..], &[0.0, 0.0]);
        assert!((d.reconstruct() - &v * v.transpose()).norm() < 1e-14);
    }

    #[test]
    fn decompose_errors() {
        assert!(matches!(decompose_psd(&diag(&[1.0, -0.5]), DEFAULT_CLAMP_REL), Err(Error::NotPsd { .. })));
        assert!(matches!(decompose_psd(&dmatrix![1.0, 2.0; 0.0, 1.0], DEFAULT_CLAMP_REL), Err(Error::Shape(_))));
        assert!(matches!(decompose_psd(&DMatrix::zeros(2, 3), DEFAULT_CLAMP_REL), Err(Error::Shape(_))));
        // Rounding-level negativity is clamped.
        let d = decompose_psd(&diag(&[1.0, -1e-13]), DEFAULT_CLAMP_REL).unwrap();
        assert_eq!(d.eigenvalues(), &[1.0, 0.0]);
        assert!(MeanTransformInput::new(DMatrix::identity(2, 2), DMatrix::identity(3, 3), DMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn frac_power_examples() {
        let d = decompose_psd(&DMatrix::identity(3, 3), DEFAULT_CLAMP_REL).unwrap();
        assert!((frac_power(&d, 0.5).unwrap() - DMatrix::identity(3, 3)).norm() < 1e-15);
        let d = decompose_psd(&diag(&[4.0, 9.0]), DEFAULT_CLAMP_REL).unwrap();
        assert!((frac_power(&d, 0.5).unwrap() - diag(&[2.0, 3.0])).norm() < 1e-14);
        assert!(frac_power(&d, 1.5).is_err());
        // Zero power on a singular matrix is the support projection.
        let d = decompose_psd(&diag(&[4.0, 0.0]), DEFAULT_CLAMP_REL).unwrap();
        assert!((frac_power(&d, 0.0).unwrap() - diag(&[1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn gauss_legendre_rules() {
        let (x, w) = gauss_legendre(3);
        assert_relative_eq!(x[2], (0.6f64).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(w[1], 8.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(w[0], 5.0 / 9.0, max_relative = 1e-14);
        for n in [2, 5, 16, 64, 101] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-13);
            // Exact for polynomials of degree 2n−1.
            let deg = 2 * n - 2;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert_relative_eq!(q, 2.0 / (deg as f64 + 1.0), max_relative = 1e-12);
        }
        let (x, w) = gauss_legendre_unit(64);
        let q: f64 = x.iter().zip(&w).map(|(v, w)| w * (2.0 * v).exp()).sum();
        assert_relative_eq!(q, (2f64.exp() - 1.0) / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn transform_examples() {
        let x = dmatrix![1.0, -2.0, 0.5; 3.0, 0.25, -1.0; 0.0, 1.0, 2.0];
        for k in ["A:0.3", "G:2", "H:1", "M:4", "LM", "AM", "S:0.5"] {
            let kind: MeanKind = k.parse().unwrap();
            let input = MeanTransformInput::new(DMatrix::identity(3, 3), DMatrix::identity(3, 3), x.clone()).unwrap();
            assert!((mean_transform(kind, &input).unwrap() - &x).norm() < 1e-14, "{k}");
        }

        let e2 = 2f64.exp();
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        let input = MeanTransformInput::new(one(e2), one(1.0), one(1.0)).unwrap();
        assert_relative_eq!(mean_transform(MeanKind::LM, &input).unwrap()[(0, 0)], (e2 - 1.0) / 2.0, max_relative = 1e-14);
        assert_relative_eq!(log_mean_integral(&input, 64).unwrap()[(0, 0)], (e2 - 1.0) / 2.0, max_relative = 1e-10);

        let s = diag(&[2.0, 4.0]);
        let input = MeanTransformInput::new(s.clone(), s.clone(), DMatrix::identity(2, 2)).unwrap();
        assert!((mean_transform(MeanKind::a(1.0).unwrap(), &input).unwrap() - s).norm() < 1e-14);

        let input = MeanTransformInput::new(diag(&[4.0, 1.0]), diag(&[1.0, 4.0]), DMatrix::from_element(2, 2, 1.0)).unwrap();
        let y = mean_transform(MeanKind::g(1.0).unwrap(), &input).unwrap();
        assert!((y - dmatrix![2.0, 4.0; 1.0, 2.0]).norm() < 1e-14);
    }

    #[test]
    fn power_sum_examples() {
        let x = dmatrix![1.0, 2.0; -1.0, 0.5];
        let s = dmatrix![2.0, 0.5; 0.5, 1.0];
        let t = dmatrix![3.0, -1.0; -1.0, 2.0];
        let input = MeanTransformInput::new(s.clone(), t.clone(), x.clone()).unwrap();
        let ds = decompose_psd(&s, DEFAULT_CLAMP_REL).unwrap();
        let dt = decompose_psd(&t, DEFAULT_CLAMP_REL).unwrap();
        let expected = frac_power(&ds, 0.5).unwrap() * &x * frac_power(&dt, 0.5).unwrap();
        let got = power_sum_representation(PowerSumRep::GInvM, 1, &input).unwrap();
        assert!(rel_frobenius(&got, &expected) < 1e-14);

        let id = MeanTransformInput::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2), x.clone()).unwrap();
        let got = power_sum_representation(PowerSumRep::AInvM, 2, &id).unwrap();
        assert!(rel_frobenius(&got, &x) < 1e-15);

        assert!(power_sum_representation(PowerSumRep::AInvM, 1, &input).is_err());
        assert!(power_sum_representation(PowerSumRep::MOverMMinusOne, 1, &input).is_err());
        assert!(power_sum_representation(PowerSumRep::MOverMPlusOne, 0, &input).is_err());
        assert!(log_mean_integral(&input, 1).is_err());
    }

    #[test]
    fn power_sums_match_schur_transform_on_singular_inputs() {
        // Zero eigenvalues on both sides exercise the S^0 = identity convention.
        let s = diag(&[3.0, 0.0, 1.5]);
        let t = dmatrix![2.0, 1.0, 0.0; 1.0, 2.0, 0.0; 0.0, 0.0, 0.0];
        let x = dmatrix![1.0, -1.0, 2.0; 0.5, 3.0, -2.0; 1.0, 1.0, 1.0];
        let input = MeanTransformInput::new(s, t, x).unwrap();
        let dec = input.decompose().unwrap();
        for rep in PowerSumRep::ALL {
            for m in rep.min_m()..=4 {
                let sum = dec.power_sum(rep, m).unwrap();
                let spectral = dec.mean_transform(rep.mean_kind(m).unwrap(), &EvalPolicy::default()).unwrap();
                assert!(rel_frobenius(&sum, &spectral) < 1e-12, "{rep} m={m}");
            }
        }
        let integral = dec.log_mean_integral(64).unwrap();
        let spectral = dec.mean_transform(MeanKind::LM, &EvalPolicy::default()).unwrap();
        assert!(rel_frobenius(&integral, &spectral) < 1e-10);
    }

    #[test]
    fn power_sum_rep_text() {
        for rep in PowerSumRep::ALL {
            assert_eq!(rep.to_string().parse::<PowerSumRep>().unwrap(), rep);
        }
        assert_eq!(serde_json::to_string(&PowerSumRep::AInvM).unwrap(), "\"A_inv_m\"");
    }
}
