//! Gram-matrix sampling of positive definite functions on the real line and
//! the Fourier kernel of the sinh ratio `(β/α)·sinh(αt)/sinh(βt)`.
//!
//! A grid check can only certify positive definiteness *on the sampled
//! grids*. A refutation, on the other hand, is a genuine certificate: a point
//! where `φ(t) > φ(0)` or a Gram matrix with a clearly negative eigenvalue.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar_means::{ln_cosh, ln_sinhc, MeanKind, RatioScale};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_THRESHOLD_REL: f64 = 1e-10;
pub const MAX_GRID_COUNT: usize = 512;

/// Relative slack of the necessary test `φ(t) ≤ φ(0)`.
const NECESSARY_SLACK: f64 = 1e-12;
const EVENNESS_TOL: f64 = 1e-12;
const SERIES: f64 = 1e-4;

/// One symmetric grid `{−W, …, 0, …, W}` of `2·⌊count/2⌋ + 1` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub count: usize,
    /// Seed for a random perturbation of the positive points (mirrored).
    pub jitter_seed: Option<u64>,
}

impl Grid {
    pub fn new(half_width: f64, count: usize, jitter_seed: Option<u64>) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("grid half width {half_width} must be positive")));
        }
        if !(2..=MAX_GRID_COUNT).contains(&count) {
            return Err(Error::Domain(format!("grid count {count} outside 2..={MAX_GRID_COUNT}")));
        }
        Ok(Grid { half_width, count, jitter_seed })
    }

    pub fn points(&self) -> Vec<f64> {
        let half = (self.count / 2).max(1);
        let step = self.half_width / half as f64;
        let mut rng = self.jitter_seed.map(ChaCha8Rng::seed_from_u64);
        let positive: Vec<f64> = (1..=half)
            .map(|j| {
                let base = j as f64 * step;
                match rng.as_mut() {
                    Some(r) if j < half => base + step * r.random_range(-0.4..0.4),
                    _ => base,
                }
            })
            .collect();
        let mut pts: Vec<f64> = positive.iter().rev().map(|p| -p).collect();
        pts.push(0.0);
        pts.extend(positive);
        pts
    }
}

/// A sweep of grids: every scale × count, plus one jittered grid per scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    pub jitter_seed: Option<u64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { scales: vec![1.0, 5.0, 20.0, 80.0], counts: vec![8, 16, 32, 64], jitter_seed: Some(0x5eed) }
    }
}

impl GridSpec {
    pub fn grids(&self) -> Result<Vec<Grid>> {
        if self.scales.is_empty() || self.counts.is_empty() {
            return Err(Error::Domain("grid sweep needs at least one scale and one count".into()));
        }
        let mut grids = Vec::new();
        for (si, &w) in self.scales.iter().enumerate() {
            for &c in &self.counts {
                grids.push(Grid::new(w, c, None)?);
            }
            if let Some(seed) = self.jitter_seed {
                let c = *self.counts.iter().max().unwrap();
                grids.push(Grid::new(w, c, Some(seed.wrapping_add(si as u64)))?);
            }
        }
        Ok(grids)
    }

    fn max_scale(&self) -> f64 {
        self.scales.iter().cloned().fold(0.0, f64::max)
    }
}

/// `[φ(t_i − t_j)]`, exactly symmetric: one evaluation per unordered pair.
pub fn gram_matrix(phi: impl Fn(f64) -> f64, points: &[f64]) -> Result<DMatrix<f64>> {
    let n = points.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = phi(points[i] - points[j]);
            if !v.is_finite() {
                return Err(Error::Overflow(format!("phi({}) is not finite", points[i] - points[j])));
            }
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

pub fn min_eigenvalue(g: &DMatrix<f64>) -> Result<f64> {
    let vals = SymmetricEigen::try_new(g.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Convergence("Gram eigensolve iteration limit reached".into()))?
        .eigenvalues;
    Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedOnGrids,
    Refuted,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::CertifiedOnGrids => "certified-on-grids",
            Verdict::Refuted => "refuted",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub grid: Grid,
    pub size: usize,
    pub min_eigenvalue: Option<f64>,
    pub threshold: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub schema_version: u32,
    pub function_id: String,
    pub grid: GridSpec,
    pub threshold_rel: f64,
    pub min_eigenvalue: f64,
    /// Threshold of the test that decided the verdict.
    pub threshold: f64,
    pub verdict: Verdict,
    pub witness_points: Option<Vec<f64>>,
    pub witness_grid: Option<Grid>,
    /// `true` when the verdict came from the `φ(t) ≤ φ(0)` scan.
    pub necessary_test_fired: bool,
    pub grids: Vec<GridResult>,
}

/// Points used for the evenness and `φ(t) ≤ φ(0)` scans: a fine linear and a
/// logarithmic sweep of `(0, 2W]`.
fn scan_points(max_scale: f64) -> Vec<f64> {
    let top = 2.0 * max_scale;
    let linear = (1..=4096).map(|i| top * i as f64 / 4096.0);
    let log = (0..=512).map(|i| 1e-4 * (top / 1e-4).powf(i as f64 / 512.0));
    linear.chain(log).collect()
}

/// Sweeps every grid of `spec` and decides positive definiteness of `phi`.
pub fn check_positive_definite(
    function_id: &str,
    phi: &(dyn Fn(f64) -> f64 + Sync),
    spec: &GridSpec,
    threshold_rel: f64,
) -> Result<GramReport> {
    let phi0 = phi(0.0);
    if !(phi0 > 0.0 && phi0.is_finite()) {
        return Err(Error::Domain(format!("{function_id}: phi(0) = {phi0} must be positive")));
    }
    let grids = spec.grids()?;
    let scan = scan_points(spec.max_scale());

    for &t in &scan {
        let (a, b) = (phi(t), phi(-t));
        if a.is_finite() && b.is_finite() && (a - b).abs() > EVENNESS_TOL * a.abs().max(b.abs()) {
            return Err(Error::NotEven { t, positive: a, negative: b });
        }
    }

    let base = GramReport {
        schema_version: SCHEMA_VERSION,
        function_id: function_id.to_string(),
        grid: spec.clone(),
        threshold_rel,
        min_eigenvalue: f64::INFINITY,
        threshold: 0.0,
        verdict: Verdict::Inconclusive,
        witness_points: None,
        witness_grid: None,
        necessary_test_fired: false,
        grids: Vec::new(),
    };

    // Necessary condition: a positive definite function peaks at the origin.
    let worst = scan
        .iter()
        .map(|&t| (t, phi(t)))
        .filter(|(_, v)| *v > phi0 * (1.0 + NECESSARY_SLACK))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((t, v)) = worst {
        // The 2-point Gram matrix on {0, t} has eigenvalues φ(0) ± φ(t).
        return Ok(GramReport {
            min_eigenvalue: phi0 - v,
            threshold: NECESSARY_SLACK * phi0,
            verdict: Verdict::Refuted,
            witness_points: Some(vec![0.0, t]),
            necessary_test_fired: true,
            ..base
        });
    }

    let results: Vec<GridResult> = grids
        .par_iter()
        .map(|grid| {
            let pts = grid.points();
            let threshold = threshold_rel * pts.len() as f64 * phi0;
            let outcome = gram_matrix(phi, &pts).and_then(|g| min_eigenvalue(&g));
            let (min_eigenvalue, error) = match outcome {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            GridResult { grid: *grid, size: pts.len(), min_eigenvalue, threshold, error }
        })
        .collect();

    let mut report = base;
    let mut worst: Option<(f64, &GridResult)> = None;
    for r in &results {
        if let Some(v) = r.min_eigenvalue {
            report.min_eigenvalue = report.min_eigenvalue.min(v);
            let normalized = v / r.threshold;
            if worst.is_none_or(|(w, _)| normalized < w) {
                worst = Some((normalized, r));
            }
        }
    }
    let any_error = results.iter().any(|r| r.error.is_some());
    match worst {
        Some((normalized, r)) if normalized < -1.0 => {
            report.verdict = Verdict::Refuted;
            report.threshold = r.threshold;
            report.witness_grid = Some(r.grid);
            report.witness_points = Some(r.grid.points());
        }
        Some((_, r)) if !any_error => {
            report.verdict = Verdict::CertifiedOnGrids;
            report.threshold = r.threshold;
        }
        _ => {
            report.verdict = Verdict::Inconclusive;
            report.threshold = results.iter().map(|r| r.threshold).fold(0.0, f64::max);
        }
    }
    report.grids = results;
    Ok(report)
}

/// `sin(πα/β) / (2β·(cosh(πs/β) + cos(πα/β)))`, the Fourier density of
/// `sinh(αt)/sinh(βt)`.
pub fn sinh_ratio_kernel_density(alpha: f64, beta: f64, s: f64) -> Result<f64> {
    check_kernel_params(alpha, beta)?;
    let r = PI * alpha / beta;
    Ok(r.sin() / (2.0 * beta * ((PI * s / beta).cosh() + r.cos())))
}

fn check_kernel_params(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < beta && beta <= 2.0) {
        return Err(Error::Domain(format!("kernel needs 0 < alpha < beta <= 2, got alpha = {alpha}, beta = {beta}")));
    }
    Ok(())
}

/// Composite Simpson on `[0, W]` with `intervals` (even) subintervals.
fn simpson(f: impl Fn(f64) -> f64, width: f64, intervals: usize) -> f64 {
    let h = width / intervals as f64;
    let mut acc = f(0.0) + f(width);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

fn fourier_representation(alpha: f64, beta: f64, t: f64, width: f64, quad_points: usize) -> f64 {
    // Even integrand: ∫_{−W}^{W} = 2∫_0^W, on half of the node budget.
    let mut intervals = quad_points.saturating_sub(1) / 2;
    intervals = intervals.max(2);
    intervals += intervals % 2;
    let r = PI * alpha / beta;
    let (sr, cr) = (r.sin(), r.cos());
    let density = |s: f64| sr / (2.0 * beta * ((PI * s / beta).cosh() + cr));
    beta / alpha * 2.0 * simpson(|s| (t * s).cos() * density(s), width, intervals)
}

/// Max over `t_values` of `|(β/α)∫cos(ts)·density(s)ds − (β/α)sinh(αt)/sinh(βt)|`
/// with the integral truncated to `[−W, W]`.
pub fn fourier_kernel_check(
    alpha: f64,
    beta: f64,
    t_values: &[f64],
    quad_half_width: f64,
    quad_points: usize,
) -> Result<f64> {
    check_kernel_params(alpha, beta)?;
    if !(quad_half_width > 0.0) || quad_points < 3 {
        return Err(Error::Domain("quadrature needs W > 0 and at least 3 points".into()));
    }
    let mut max_err: f64 = 0.0;
    for &t in t_values {
        let coarse = fourier_representation(alpha, beta, t, quad_half_width, quad_points);
        let fine = fourier_representation(alpha, beta, t, quad_half_width, 2 * quad_points - 1);
        if (coarse - fine).abs() > 1e-4 {
            return Err(Error::Quadrature { change: (coarse - fine).abs() });
        }
        let exact = (ln_sinhc(alpha * t, SERIES) - ln_sinhc(beta * t, SERIES)).exp();
        max_err = max_err.max((coarse - exact).abs());
    }
    Ok(max_err)
}

/// Named mean-ratio functions whose positive definiteness the norm
/// inequalities rest on, written in closed hyperbolic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogFunction {
    /// `(β/α)·sinh(αt)/sinh(βt)`; `G_β/G_α` at `e^{2t}`.
    SinhRatio { alpha: f64, beta: f64 },
    /// `1/cosh(αt/2)`; `H_α/G_α` at `e^t`.
    HgRatio { alpha: f64 },
    /// `(αt/2)/sinh(αt/2)`; `G_α/L` at `e^t`.
    GlRatio { alpha: f64 },
    /// `tanh(αt/2)/(αt/2)`; `L/A_α` at `e^t`.
    LaRatio { alpha: f64 },
    /// `(α/β)·sinh(βt)cosh(αt)/(cosh(βt)sinh(αt))`; `A_α/A_β` at `e^{2t}`.
    ARatio { alpha: f64, beta: f64 },
    /// `M_{m/(m+1)}/G_{1/m}` at `e^{2t}`.
    MgRatio { m: u32 },
    /// `A_{1/m}/M_{(m+1)/m}` at `e^{2t}`.
    AmRatio { m: u32 },
    /// `H_{1/m}/M_{m/(m+1)}` at `e^{2t}`.
    HmRatio { m: u32 },
    Cosh,
}

impl CatalogFunction {
    pub fn id(&self) -> String {
        match *self {
            CatalogFunction::SinhRatio { alpha, beta } => format!("sinh-ratio(alpha={alpha},beta={beta})"),
            CatalogFunction::HgRatio { alpha } => format!("hg-ratio(alpha={alpha})"),
            CatalogFunction::GlRatio { alpha } => format!("gl-ratio(alpha={alpha})"),
            CatalogFunction::LaRatio { alpha } => format!("la-ratio(alpha={alpha})"),
            CatalogFunction::ARatio { alpha, beta } => format!("a-ratio(alpha={alpha},beta={beta})"),
            CatalogFunction::MgRatio { m } => format!("mg-ratio(m={m})"),
            CatalogFunction::AmRatio { m } => format!("am-ratio(m={m})"),
            CatalogFunction::HmRatio { m } => format!("hm-ratio(m={m})"),
            CatalogFunction::Cosh => "cosh".to_string(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = |z: f64| ln_sinhc(z, SERIES);
        let c = ln_cosh;
        let log = match *self {
            CatalogFunction::SinhRatio { alpha, beta } => s(alpha * t) - s(beta * t),
            CatalogFunction::HgRatio { alpha } => -c(alpha * t / 2.0),
            CatalogFunction::GlRatio { alpha } => -s(alpha * t / 2.0),
            CatalogFunction::LaRatio { alpha } => s(alpha * t / 2.0) - c(alpha * t / 2.0),
            CatalogFunction::ARatio { alpha, beta } => s(beta * t) + c(alpha * t) - c(beta * t) - s(alpha * t),
            CatalogFunction::MgRatio { m } => {
                let (a, b) = (1.0 / m as f64, m as f64 / (m as f64 + 1.0));
                s(b * t) + s(a * t) - s(t) - s((1.0 - b) * t)
            }
            CatalogFunction::AmRatio { m } => {
                let (a, b) = (1.0 / m as f64, (m as f64 + 1.0) / m as f64);
                s(t) + s((b - 1.0) * t) + c(a * t) - s(b * t) - s(a * t)
            }
            CatalogFunction::HmRatio { m } => {
                let (a, b) = (1.0 / m as f64, m as f64 / (m as f64 + 1.0));
                s(t) + s((1.0 - b) * t) - s(2.0 * a * t) - s(b * t)
            }
            CatalogFunction::Cosh => c(t),
        };
        log.exp()
    }

    /// The same function as a ratio of catalog means, when it is one.
    pub fn as_mean_ratio(&self) -> Result<Option<(MeanKind, MeanKind, RatioScale)>> {
        use RatioScale::{Exp, Exp2};
        let inv = |m: u32| 1.0 / m as f64;
        let below = |m: u32| m as f64 / (m as f64 + 1.0);
        let above = |m: u32| (m as f64 + 1.0) / m as f64;
        Ok(Some(match *self {
            CatalogFunction::SinhRatio { alpha, beta } => (MeanKind::g(beta)?, MeanKind::g(alpha)?, Exp2),
            CatalogFunction::HgRatio { alpha } => (MeanKind::h(alpha)?, MeanKind::g(alpha)?, Exp),
            CatalogFunction::GlRatio { alpha } => (MeanKind::g(alpha)?, MeanKind::L, Exp),
            CatalogFunction::LaRatio { alpha } => (MeanKind::L, MeanKind::a(alpha)?, Exp),
            CatalogFunction::ARatio { alpha, beta } => (MeanKind::a(alpha)?, MeanKind::a(beta)?, Exp2),
            CatalogFunction::MgRatio { m } => (MeanKind::m(below(m))?, MeanKind::g(inv(m))?, Exp2),
            CatalogFunction::AmRatio { m } => (MeanKind::a(inv(m))?, MeanKind::m(above(m))?, Exp2),
            CatalogFunction::HmRatio { m } => (MeanKind::h(inv(m))?, MeanKind::m(below(m))?, Exp2),
            CatalogFunction::Cosh => return Ok(None),
        }))
    }

    pub fn check(&self, spec: &GridSpec, threshold_rel: f64) -> Result<GramReport> {
        let f = *self;
        check_positive_definite(&self.id(), &move |t| f.eval(t), spec, threshold_rel)
    }
}

/// Functions whose positive definiteness underlies the proven inequalities.
pub fn certified_catalog() -> Vec<CatalogFunction> {
    use CatalogFunction::*;
    let mut out = vec![
        SinhRatio { alpha: 0.0, beta: 1.0 },
        SinhRatio { alpha: 0.25, beta: 0.5 },
        SinhRatio { alpha: 0.5, beta: 1.0 },
        SinhRatio { alpha: 0.25, beta: 1.0 },
        SinhRatio { alpha: 0.5, beta: 2.0 },
        SinhRatio { alpha: 1.0, beta: 2.0 },
        ARatio { alpha: 0.0, beta: 1.0 },
        ARatio { alpha: 0.25, beta: 0.5 },
        ARatio { alpha: 0.5, beta: 1.0 },
        ARatio { alpha: 0.25, beta: 0.75 },
    ];
    for alpha in [0.25, 0.5, 1.0] {
        out.extend([HgRatio { alpha }, GlRatio { alpha }, LaRatio { alpha }]);
    }
    for m in 1..=4 {
        out.extend([MgRatio { m }, AmRatio { m }]);
    }
    out.extend([HmRatio { m: 1 }, HmRatio { m: 2 }]);
    out
}

/// Functions that must be refuted.
pub fn refuted_catalog() -> Vec<CatalogFunction> {
    vec![CatalogFunction::SinhRatio { alpha: 1.0, beta: 0.5 }, CatalogFunction::Cosh, CatalogFunction::HmRatio { m: 3 }]
}
