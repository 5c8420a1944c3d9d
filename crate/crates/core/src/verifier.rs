//! Seeded randomized checks of norm inequalities between operator means.
//!
//! A chain `T₁ ≤ T₂ ≤ … ≤ T_k` asserts `‖T_i(S,T)X‖ ≤ ‖T_{i+1}(S,T)X‖` for
//! every unitarily invariant norm. Each sample draws a triple `(S, T, X)` from a
//! sub-seed derived from the master seed and the sample index, so reports do
//! not depend on how samples are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::operator_means::{DecomposedInput, MeanTransformInput, PowerSumRep, DEFAULT_LOG_MEAN_NODES};
use crate::scalar_means::{eval_mean, EvalPolicy, Family, MeanKind};
use crate::uinorms::{singular_values, NormKind};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 0x6d65_616e_7363_6f70;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_TOLERANCE_REL: f64 = 1e-9;
pub const DEFAULT_CONDITION_TARGET: f64 = 1e6;
pub const DEFAULT_DIMS: [(usize, usize); 5] = [(2, 2), (3, 3), (5, 5), (8, 8), (3, 5)];
/// Fraction of samples allowed to fail evaluation before a run fails.
pub const ERROR_BUDGET: f64 = 0.01;

pub const BUILTIN_CHAINS: [&str; 9] =
    ["thm-1.2", "thm-2.5", "prop-2.4", "prop-2.3-H", "prop-2.3-G", "prop-2.3-A", "prop-2.7", "rem-2.6", "eq-3-final"];

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed of sample `index` under `master`.
pub fn sample_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    GaussianPsd,
    RankDeficientPsd,
    IllConditionedPsd,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 3] =
        [EnsembleKind::GaussianPsd, EnsembleKind::RankDeficientPsd, EnsembleKind::IllConditionedPsd];
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::GaussianPsd => "gaussian-psd",
            EnsembleKind::RankDeficientPsd => "rank-deficient-psd",
            EnsembleKind::IllConditionedPsd => "ill-conditioned-psd",
        })
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().trim_end_matches("-psd") {
            "gaussian" => Ok(EnsembleKind::GaussianPsd),
            "rank-deficient" => Ok(EnsembleKind::RankDeficientPsd),
            "ill-conditioned" => Ok(EnsembleKind::IllConditionedPsd),
            _ => Err(Error::Parse(format!("unknown ensemble {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEnsemble {
    pub kind: EnsembleKind,
    pub condition_target: f64,
    pub seed: u64,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn reshape_spectrum(w: DMatrix<f64>, kind: EnsembleKind, condition_target: f64) -> DMatrix<f64> {
    let w = symmetrize(w);
    let n = w.nrows();
    if kind == EnsembleKind::GaussianPsd {
        return w;
    }
    let eig = SymmetricEigen::new(w.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals = eig.eigenvalues.map(|v| v.max(0.0));
    match kind {
        EnsembleKind::RankDeficientPsd => {
            for &i in order.iter().take(n.div_ceil(3)) {
                vals[i] = 0.0;
            }
        }
        EnsembleKind::IllConditionedPsd => {
            let (lo, hi) = (vals[order[0]], vals[order[n - 1]]);
            if n < 2 || !(lo > 0.0) || hi <= lo {
                return w;
            }
            // Affine map of the log spectrum onto [ln hi − ln κ, ln hi].
            let scale = condition_target.ln() / (hi.ln() - lo.ln());
            vals = vals.map(|v| (hi.ln() + (v.ln() - hi.ln()) * scale).exp());
        }
        EnsembleKind::GaussianPsd => unreachable!(),
    }
    let v = &eig.eigenvectors;
    symmetrize(v * DMatrix::from_diagonal(&vals) * v.transpose())
}

/// Draws `(S, T, X)`: `S = AAᵀ`, `T = BBᵀ` and `X` from standard normal
/// entries, with the spectra of `S` and `T` reshaped per ensemble.
pub fn sample_instance(ensemble: &SampleEnsemble, dims: (usize, usize)) -> MeanTransformInput {
    let (n, m) = dims;
    let mut rng = ChaCha8Rng::seed_from_u64(ensemble.seed);
    let a = gaussian(&mut rng, n, n);
    let b = gaussian(&mut rng, m, m);
    let x = gaussian(&mut rng, n, m);
    let s = reshape_spectrum(&a * a.transpose(), ensemble.kind, ensemble.condition_target);
    let t = reshape_spectrum(&b * b.transpose(), ensemble.kind, ensemble.condition_target);
    MeanTransformInput { s, t, x }
}

/// One side of a chain inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    Mean(MeanKind),
    PowerSum { rep: PowerSumRep, m: usize },
    LogIntegral { nodes: usize },
}

impl Term {
    pub fn eval(&self, d: &DecomposedInput<'_>, policy: &EvalPolicy) -> Result<DMatrix<f64>> {
        match *self {
            Term::Mean(kind) => d.mean_transform(kind, policy),
            Term::PowerSum { rep, m } => d.power_sum(rep, m),
            Term::LogIntegral { nodes } => d.log_mean_integral(nodes),
        }
    }

    /// The mean whose transform the term computes.
    pub fn mean_kind(&self) -> Result<MeanKind> {
        match *self {
            Term::Mean(kind) => Ok(kind),
            Term::PowerSum { rep, m } => rep.mean_kind(m),
            Term::LogIntegral { .. } => Ok(MeanKind::LM),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Term::Mean(_) => Ok(()),
            Term::PowerSum { rep, m } => rep.mean_kind(m).map(|_| ()),
            Term::LogIntegral { nodes } if nodes >= 2 => Ok(()),
            Term::LogIntegral { nodes } => Err(Error::Domain(format!("log integral needs >= 2 nodes, got {nodes}"))),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Mean(kind) => write!(f, "{kind}"),
            Term::PowerSum { rep, m } => write!(f, "sum:{rep}:{m}"),
            Term::LogIntegral { nodes } => write!(f, "integral:{nodes}"),
        }
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed term {s:?}"));
        if let Some(rest) = s.strip_prefix("sum:") {
            let (rep, m) = rest.rsplit_once(':').ok_or_else(bad)?;
            return Ok(Term::PowerSum { rep: rep.parse()?, m: m.parse().map_err(|_| bad())? });
        }
        if let Some(nodes) = s.strip_prefix("integral:") {
            return Ok(Term::LogIntegral { nodes: nodes.parse().map_err(|_| bad())? });
        }
        Ok(Term::Mean(s.parse()?))
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormSet {
    /// Every Ky Fan norm for the sample's rank bound, Schatten 1, 2, 3 and
    /// the operator norm.
    Battery,
    /// Ky Fan indices beyond a sample's rank bound are skipped.
    List(Vec<NormKind>),
}

impl NormSet {
    pub fn norms_for(&self, dims: (usize, usize)) -> Vec<NormKind> {
        let rank = dims.0.min(dims.1);
        match self {
            NormSet::Battery => NormKind::battery(rank),
            NormSet::List(list) => {
                list.iter().copied().filter(|n| !matches!(n, NormKind::KyFan(k) if *k > rank)).collect()
            }
        }
    }
}

/// How samples are drawn and judged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub ensembles: Vec<EnsembleKind>,
    pub condition_target: f64,
    pub dims: Vec<(usize, usize)>,
    pub norm_set: NormSet,
    pub samples: usize,
    pub seed: u64,
    pub tolerance_rel: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            ensembles: EnsembleKind::ALL.to_vec(),
            condition_target: DEFAULT_CONDITION_TARGET,
            dims: DEFAULT_DIMS.to_vec(),
            norm_set: NormSet::Battery,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            tolerance_rel: DEFAULT_TOLERANCE_REL,
        }
    }
}

/// Where sample `index` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    pub index: usize,
    pub ensemble: SampleEnsemble,
    pub dims: (usize, usize),
}

impl SamplePlan {
    pub fn instance(&self) -> MeanTransformInput {
        sample_instance(&self.ensemble, self.dims)
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Domain("sample count must be positive".into()));
        }
        if self.ensembles.is_empty() || self.dims.is_empty() {
            return Err(Error::Domain("sampling needs at least one ensemble and one shape".into()));
        }
        if self.dims.iter().any(|&(n, m)| n == 0 || m == 0) {
            return Err(Error::Domain("matrix dimensions must be positive".into()));
        }
        if !(self.condition_target >= 1.0 && self.condition_target.is_finite()) {
            return Err(Error::Domain(format!("condition target {} must be >= 1", self.condition_target)));
        }
        if !(self.tolerance_rel >= 0.0 && self.tolerance_rel.is_finite()) {
            return Err(Error::Domain(format!("tolerance {} must be nonnegative", self.tolerance_rel)));
        }
        if let NormSet::List(l) = &self.norm_set {
            if l.is_empty() {
                return Err(Error::Domain("norm list is empty".into()));
            }
        }
        Ok(())
    }

    /// Sample `i` cycles through the ensembles and the shapes independently.
    pub fn plan(&self, index: usize) -> SamplePlan {
        SamplePlan {
            index,
            ensemble: SampleEnsemble {
                kind: self.ensembles[index % self.ensembles.len()],
                condition_target: self.condition_target,
                seed: sample_seed(self.seed, index as u64),
            },
            dims: self.dims[index % self.dims.len()],
        }
    }

    fn is_violation(&self, left: f64, right: f64) -> bool {
        right - left < -self.tolerance_rel * left.abs().max(right.abs())
    }

    /// Runs `f` on every sample in parallel; results are in sample order.
    fn run<T: Send>(&self, f: impl Fn(&SamplePlan, &MeanTransformInput) -> Result<T> + Sync) -> Vec<(SamplePlan, Result<T>)> {
        (0..self.samples)
            .into_par_iter()
            .map(|i| {
                let plan = self.plan(i);
                let input = plan.instance();
                let out = f(&plan, &input);
                (plan, out)
            })
            .collect()
    }
}

fn relative(margin: f64, left: f64, right: f64) -> f64 {
    let scale = left.abs().max(right.abs());
    if scale == 0.0 {
        0.0
    } else {
        margin / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_ok(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
        })
    }
}

/// Chain parameters; unused ones stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub chain_id: String,
    pub terms: Vec<Term>,
    pub params: ChainParams,
    #[serde(flatten)]
    pub sampling: SamplingConfig,
}

fn check_pair(alpha: f64, beta: f64, beta_max: f64) -> Result<()> {
    if !(0.0 <= alpha && alpha < beta && beta <= beta_max) {
        return Err(Error::Domain(format!("need 0 <= alpha < beta <= {beta_max}, got alpha = {alpha}, beta = {beta}")));
    }
    Ok(())
}

fn need_m(m: usize, min: usize, what: &str) -> Result<usize> {
    if m < min {
        return Err(Error::Domain(format!("{what} needs m >= {min}, got {m}")));
    }
    Ok(m)
}

/// Builds a named chain. Missing parameters take the chain's defaults and the
/// resolved values are stored in the returned spec.
pub fn builtin_chain(chain_id: &str, params: &ChainParams, sampling: SamplingConfig) -> Result<ChainSpec> {
    use PowerSumRep::*;
    let lm_integral = Term::LogIntegral { nodes: DEFAULT_LOG_MEAN_NODES };
    let mut resolved = ChainParams::default();
    let split = |default_m1: usize, default_m2: usize, resolved: &mut ChainParams| {
        let m1 = params.m1.or(params.m).unwrap_or(default_m1);
        let m2 = params.m2.or(params.m).unwrap_or(default_m2);
        resolved.m1 = Some(m1);
        resolved.m2 = Some(m2);
        (m1, m2)
    };
    let inv = |m: usize| 1.0 / m as f64;
    let terms = match chain_id {
        "thm-1.2" => {
            let (m1, m2) = split(1, 2, &mut resolved);
            need_m(m1, 1, "m1")?;
            need_m(m2, 2, "m2")?;
            vec![
                Term::Mean(MeanKind::GM),
                Term::PowerSum { rep: MOverMPlusOne, m: m1 },
                lm_integral,
                Term::PowerSum { rep: MOverMMinusOne, m: m2 },
                Term::Mean(MeanKind::AM),
            ]
        }
        "thm-2.5" => {
            let (m1, m2) = split(1, 1, &mut resolved);
            need_m(m1, 1, "m1")?;
            need_m(m2, 1, "m2")?;
            let (a, b) = (m1 as f64, m2 as f64);
            vec![
                Term::Mean(MeanKind::m(a / (a + 1.0))?),
                Term::Mean(MeanKind::g(inv(m1))?),
                Term::Mean(MeanKind::L),
                Term::Mean(MeanKind::a(inv(m2))?),
                Term::Mean(MeanKind::m((b + 1.0) / b)?),
            ]
        }
        "prop-2.4" => {
            let alpha = params.alpha.unwrap_or(1.0);
            resolved.alpha = Some(alpha);
            vec![
                Term::Mean(MeanKind::h(alpha)?),
                Term::Mean(MeanKind::g(alpha)?),
                Term::Mean(MeanKind::new(Family::L, alpha)?),
                Term::Mean(MeanKind::a(alpha)?),
            ]
        }
        "prop-2.3-H" | "prop-2.3-G" | "prop-2.3-A" => {
            let alpha = params.alpha.unwrap_or(0.0);
            let beta = params.beta.unwrap_or(if chain_id == "prop-2.3-G" { 2.0 } else { 1.0 });
            resolved.alpha = Some(alpha);
            resolved.beta = Some(beta);
            match chain_id {
                "prop-2.3-H" => {
                    check_pair(alpha, beta, 1.0)?;
                    vec![Term::Mean(MeanKind::h(beta)?), Term::Mean(MeanKind::h(alpha)?)]
                }
                "prop-2.3-G" => {
                    check_pair(alpha, beta, 2.0)?;
                    vec![Term::Mean(MeanKind::g(beta)?), Term::Mean(MeanKind::g(alpha)?)]
                }
                _ => {
                    check_pair(alpha, beta, 1.0)?;
                    vec![Term::Mean(MeanKind::a(alpha)?), Term::Mean(MeanKind::a(beta)?)]
                }
            }
        }
        "prop-2.7" => {
            let m = need_m(params.m.unwrap_or(1), 1, "prop-2.7")?;
            resolved.m = Some(m);
            let mf = m as f64;
            vec![Term::Mean(MeanKind::h(inv(m))?), Term::Mean(MeanKind::m(mf / (mf + 1.0))?)]
        }
        "rem-2.6" => {
            let m = need_m(params.m.unwrap_or(2), 2, "rem-2.6")?;
            resolved.m = Some(m);
            let mf = m as f64;
            vec![Term::Mean(MeanKind::m((mf + 1.0) / mf)?), Term::Mean(MeanKind::m(mf / (mf - 1.0))?)]
        }
        "eq-3-final" => {
            let (m1, m2) = split(1, 2, &mut resolved);
            need_m(m1, 1, "m1")?;
            need_m(m2, 2, "m2")?;
            vec![
                Term::PowerSum { rep: MOverMPlusOne, m: m1 },
                Term::PowerSum { rep: GInvM, m: m1 },
                lm_integral,
                Term::PowerSum { rep: AInvM, m: m2 },
                Term::PowerSum { rep: MOverMMinusOne, m: m2 },
            ]
        }
        other => {
            return Err(Error::Domain(format!("unknown chain id {other:?}; known: {}", BUILTIN_CHAINS.join(", "))))
        }
    };
    Ok(ChainSpec { chain_id: chain_id.to_string(), terms, params: resolved, sampling })
}

/// Every built-in chain at the parameter values of the default battery.
pub fn default_battery(sampling: &SamplingConfig) -> Result<Vec<ChainSpec>> {
    let mut out = Vec::new();
    let mut push = |id: &str, params: ChainParams| -> Result<()> {
        out.push(builtin_chain(id, &params, sampling.clone())?);
        Ok(())
    };
    let ms = |m1, m2| ChainParams { m1: Some(m1), m2: Some(m2), ..Default::default() };
    let m = |m| ChainParams { m: Some(m), ..Default::default() };
    let ab = |alpha, beta| ChainParams { alpha: Some(alpha), beta: Some(beta), ..Default::default() };
    push("thm-1.2", ms(1, 2))?;
    push("thm-2.5", ms(1, 1))?;
    for m1 in 1..=3 {
        for m2 in 2..=4 {
            push("thm-2.5", ms(m1, m2))?;
        }
    }
    for alpha in [0.25, 0.5, 1.0] {
        push("prop-2.4", ChainParams { alpha: Some(alpha), ..Default::default() })?;
    }
    for (a, b) in [(0.0, 0.5), (0.25, 1.0)] {
        push("prop-2.3-H", ab(a, b))?;
    }
    for (a, b) in [(0.0, 1.0), (0.5, 2.0)] {
        push("prop-2.3-G", ab(a, b))?;
    }
    for (a, b) in [(0.0, 0.5), (0.25, 1.0)] {
        push("prop-2.3-A", ab(a, b))?;
    }
    for k in [1, 2] {
        push("prop-2.7", m(k))?;
    }
    for k in [2, 3, 4] {
        push("rem-2.6", m(k))?;
    }
    for (m1, m2) in [(1, 2), (2, 3), (3, 4)] {
        push("eq-3-final", ms(m1, m2))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginRecord {
    pub sample: usize,
    pub seed: u64,
    /// `None` for a triple supplied by the caller.
    pub ensemble: Option<EnsembleKind>,
    pub dim: (usize, usize),
    pub norm: NormKind,
    /// Norm of every term, in chain order.
    pub values: Vec<f64>,
    /// `values[i+1] − values[i]`.
    pub margins: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sample: usize,
    pub dim: (usize, usize),
    pub norm: NormKind,
    pub left_term: String,
    pub right_term: String,
    pub left_value: f64,
    pub right_value: f64,
    pub margin: f64,
    pub relative_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleError {
    pub sample: usize,
    pub seed: u64,
    pub dim: (usize, usize),
    pub message: String,
}

impl SampleError {
    fn new(plan: &SamplePlan, e: Error) -> Self {
        SampleError { sample: plan.index, seed: plan.ensemble.seed, dim: plan.dims, message: e.to_string() }
    }
}

fn error_budget_ok(errors: usize, samples: usize) -> bool {
    errors as f64 <= ERROR_BUDGET * samples as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub schema_version: u32,
    pub chain_id: String,
    pub terms: Vec<Term>,
    pub params: ChainParams,
    pub sampling: SamplingConfig,
    pub records: Vec<MarginRecord>,
    /// Smallest `right − left` over all records and pairs.
    pub min_margin: Option<f64>,
    /// Smallest `(right − left)/max(left, right)`.
    pub min_relative_margin: Option<f64>,
    pub violations: Vec<Violation>,
    pub errors: Vec<SampleError>,
    pub status: Status,
}

fn term_norms(
    terms: &[Term],
    input: &MeanTransformInput,
    policy: &EvalPolicy,
) -> Result<Vec<Vec<f64>>> {
    let d = input.decompose()?;
    terms.iter().map(|t| singular_values(&t.eval(&d, policy)?)).collect()
}

fn chain_records(
    spec: &ChainSpec,
    plan: &SamplePlan,
    ensemble: Option<EnsembleKind>,
    input: &MeanTransformInput,
    policy: &EvalPolicy,
) -> Result<Vec<MarginRecord>> {
    let svs = term_norms(&spec.terms, input, policy)?;
    spec.sampling
        .norm_set
        .norms_for(plan.dims)
        .into_iter()
        .map(|norm| {
            let values = svs.iter().map(|sv| norm.eval_singular_values(sv)).collect::<Result<Vec<f64>>>()?;
            let margins = values.windows(2).map(|w| w[1] - w[0]).collect();
            Ok(MarginRecord { sample: plan.index, seed: plan.ensemble.seed, ensemble, dim: plan.dims, norm, values, margins })
        })
        .collect()
}

fn check_chain(spec: &ChainSpec) -> Result<()> {
    if spec.terms.len() < 2 {
        return Err(Error::Domain(format!("chain {} needs at least two terms", spec.chain_id)));
    }
    for t in &spec.terms {
        t.validate()?;
    }
    spec.sampling.validate()
}

pub fn verify_chain(spec: &ChainSpec) -> Result<ChainReport> {
    check_chain(spec)?;
    let policy = EvalPolicy::default();
    let outcomes = spec
        .sampling
        .run(|plan, input| chain_records(spec, plan, Some(plan.ensemble.kind), input, &policy));
    Ok(assemble_chain(spec, outcomes, spec.sampling.samples))
}

/// Evaluates the chain on one given triple instead of sampled ones.
pub fn verify_chain_on(spec: &ChainSpec, input: &MeanTransformInput) -> Result<ChainReport> {
    check_chain(spec)?;
    let mut plan = spec.sampling.plan(0);
    plan.dims = input.dims();
    let out = chain_records(spec, &plan, None, input, &EvalPolicy::default());
    let mut spec = spec.clone();
    spec.sampling.samples = 1;
    Ok(assemble_chain(&spec, vec![(plan, out)], 1))
}

fn assemble_chain(spec: &ChainSpec, outcomes: Vec<(SamplePlan, Result<Vec<MarginRecord>>)>, samples: usize) -> ChainReport {
    let sampling = &spec.sampling;
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (plan, out) in outcomes {
        match out {
            Ok(r) => records.extend(r),
            Err(e) => errors.push(SampleError::new(&plan, e)),
        }
    }

    let mut min_margin: Option<f64> = None;
    let mut min_rel: Option<f64> = None;
    let mut violations = Vec::new();
    for r in &records {
        for (k, w) in r.values.windows(2).enumerate() {
            let (l, rt) = (w[0], w[1]);
            let margin = r.margins[k];
            let rel = relative(margin, l, rt);
            min_margin = Some(min_margin.map_or(margin, |m| m.min(margin)));
            min_rel = Some(min_rel.map_or(rel, |m| m.min(rel)));
            if sampling.is_violation(l, rt) || !margin.is_finite() {
                violations.push(Violation {
                    sample: r.sample,
                    dim: r.dim,
                    norm: r.norm,
                    left_term: spec.terms[k].to_string(),
                    right_term: spec.terms[k + 1].to_string(),
                    left_value: l,
                    right_value: rt,
                    margin,
                    relative_margin: rel,
                });
            }
        }
    }
    let ok = violations.is_empty() && !records.is_empty() && error_budget_ok(errors.len(), samples);
    ChainReport {
        schema_version: SCHEMA_VERSION,
        chain_id: spec.chain_id.clone(),
        terms: spec.terms.clone(),
        params: spec.params,
        sampling: sampling.clone(),
        records,
        min_margin,
        min_relative_margin: min_rel,
        violations,
        errors,
        status: Status::from_ok(ok),
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    chain_id: &'a str,
    sample: usize,
    dim: String,
    norm: String,
    left_term: String,
    right_term: String,
    left_value: f64,
    right_value: f64,
    margin: f64,
}

/// One row per (sample, norm, adjacent pair).
pub fn write_margin_csv<'a, W: Write>(reports: impl IntoIterator<Item = &'a ChainReport>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for report in reports {
        for r in &report.records {
            for (k, &margin) in r.margins.iter().enumerate() {
                w.serialize(CsvRow {
                    chain_id: &report.chain_id,
                    sample: r.sample,
                    dim: format!("{}x{}", r.dim.0, r.dim.1),
                    norm: r.norm.to_string(),
                    left_term: report.terms[k].to_string(),
                    right_term: report.terms[k + 1].to_string(),
                    left_value: r.values[k],
                    right_value: r.values[k + 1],
                    margin,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub schema_version: u32,
    pub chains: Vec<ChainReport>,
    pub status: Status,
}

pub fn run_battery(specs: &[ChainSpec]) -> Result<BatteryReport> {
    let chains = specs.iter().map(verify_chain).collect::<Result<Vec<_>>>()?;
    let ok = chains.iter().all(|c| c.status == Status::Pass);
    Ok(BatteryReport { schema_version: SCHEMA_VERSION, chains, status: Status::from_ok(ok) })
}

/// Runs `f` on a pool of `threads` workers (`0` = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    /// `+1` when `lhs(t,1) > rhs(t,1)`, `−1` when smaller.
    pub sign: i8,
    pub lhs: f64,
    pub rhs: f64,
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub schema_version: u32,
    pub lhs: MeanKind,
    pub rhs: MeanKind,
    pub t_range: (f64, f64),
    pub grid_points: usize,
    pub refine_iters: usize,
    /// For each sign that occurs, the grid point with the largest `|lhs − rhs|`.
    pub witnesses: Vec<Witness>,
    /// Bisected sign changes of `lhs − rhs`.
    pub crossings: Vec<Witness>,
}

impl SearchReport {
    pub fn has_sign(&self, sign: i8) -> bool {
        self.witnesses.iter().any(|w| w.sign == sign)
    }
}

fn witness_at(lhs: MeanKind, rhs: MeanKind, t: f64, policy: &EvalPolicy) -> Result<Witness> {
    let l = eval_mean(lhs, t, 1.0, policy)?;
    let r = eval_mean(rhs, t, 1.0, policy)?;
    let d = l - r;
    // Differences at rounding level carry no sign.
    let sign = if d.abs() <= 1e-13 * l.abs().max(r.abs()) { 0 } else { d.signum() as i8 };
    Ok(Witness { t, sign, lhs: l, rhs: r, difference: d })
}

/// Scans `lhs(t,1) − rhs(t,1)` on a log-spaced grid and bisects each sign
/// change in `ln t`.
pub fn counterexample_search(
    lhs: MeanKind,
    rhs: MeanKind,
    t_range: (f64, f64),
    grid_points: usize,
    refine_iters: usize,
) -> Result<SearchReport> {
    let (lo, hi) = t_range;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::Domain(format!("t range ({lo}, {hi}) must be a positive interval")));
    }
    if grid_points < 2 {
        return Err(Error::Domain("search grid needs at least 2 points".into()));
    }
    let policy = EvalPolicy::default();
    let (llo, lhi) = (lo.ln(), hi.ln());
    let grid = (0..grid_points)
        .map(|i| {
            let t = if i + 1 == grid_points { hi } else { (llo + (lhi - llo) * i as f64 / (grid_points - 1) as f64).exp() };
            witness_at(lhs, rhs, t, &policy)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut witnesses = Vec::new();
    for sign in [1i8, -1] {
        if let Some(w) = grid.iter().filter(|w| w.sign == sign).max_by(|a, b| a.difference.abs().total_cmp(&b.difference.abs())) {
            witnesses.push(*w);
        }
    }

    let mut crossings = Vec::new();
    let mut last: Option<&Witness> = None;
    for w in grid.iter().filter(|w| w.sign != 0) {
        if let Some(prev) = last {
            if prev.sign != w.sign {
                let (mut a, mut b) = (prev.t.ln(), w.t.ln());
                for _ in 0..refine_iters {
                    let mid = 0.5 * (a + b);
                    let wm = witness_at(lhs, rhs, mid.exp(), &policy)?;
                    if wm.sign == prev.sign {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                crossings.push(witness_at(lhs, rhs, (0.5 * (a + b)).exp(), &policy)?);
            }
        }
        last = Some(w);
    }
    Ok(SearchReport {
        schema_version: SCHEMA_VERSION,
        lhs,
        rhs,
        t_range,
        grid_points,
        refine_iters,
        witnesses,
        crossings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub sample: usize,
    pub dim: (usize, usize),
    pub norm: NormKind,
    /// `‖A_α X‖`
    pub a_alpha: f64,
    /// `‖A_β X‖`
    pub a_beta: f64,
    /// `‖A_α X − A_β X‖`
    pub difference: f64,
    /// Relative slacks of `‖A_α‖ ≤ ‖A_β‖`, `‖A_β‖ ≤ ((2β−α)/α)‖A_α‖` and
    /// `‖A_α − A_β‖ ≤ (2(β−α)/α)‖A_α‖`.
    pub slacks: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub schema_version: u32,
    pub alpha: f64,
    pub beta: f64,
    pub sampling: SamplingConfig,
    pub records: Vec<BoundRecord>,
    pub min_slack: [Option<f64>; 3],
    pub violations: [usize; 3],
    pub errors: Vec<SampleError>,
    pub status: Status,
}

/// Two-sided comparison of `A_α` and `A_β` transforms and the perturbation
/// bound on their difference.
pub fn bound_check_prop32(alpha: f64, beta: f64, sampling: &SamplingConfig) -> Result<BoundReport> {
    if !(0.0 < alpha && alpha < beta && beta <= 1.0) {
        return Err(Error::Domain(format!("need 0 < alpha < beta <= 1, got alpha = {alpha}, beta = {beta}")));
    }
    sampling.validate()?;
    let policy = EvalPolicy::default();
    let (ka, kb) = (MeanKind::a(alpha)?, MeanKind::a(beta)?);
    let upper = (2.0 * beta - alpha) / alpha;
    let diff_factor = 2.0 * (beta - alpha) / alpha;
    let outcomes = sampling.run(|plan, input| {
        let d = input.decompose()?;
        let ya = d.mean_transform(ka, &policy)?;
        let yb = d.mean_transform(kb, &policy)?;
        let (sa, sb, sd) = (singular_values(&ya)?, singular_values(&yb)?, singular_values(&(&ya - &yb))?);
        sampling
            .norm_set
            .norms_for(plan.dims)
            .into_iter()
            .map(|norm| {
                let a = norm.eval_singular_values(&sa)?;
                let b = norm.eval_singular_values(&sb)?;
                let diff = norm.eval_singular_values(&sd)?;
                let pairs = [(a, b), (b, upper * a), (diff, diff_factor * a)];
                Ok((BoundRecord {
                    sample: plan.index,
                    dim: plan.dims,
                    norm,
                    a_alpha: a,
                    a_beta: b,
                    difference: diff,
                    slacks: pairs.map(|(l, r)| relative(r - l, l, r)),
                }, pairs.map(|(l, r)| sampling.is_violation(l, r))))
            })
            .collect::<Result<Vec<_>>>()
    });

    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut min_slack = [None; 3];
    let mut violations = [0usize; 3];
    for (plan, out) in outcomes {
        match out {
            Ok(rs) => {
                for (r, bad) in rs {
                    for k in 0..3 {
                        min_slack[k] = Some(min_slack[k].map_or(r.slacks[k], |m: f64| m.min(r.slacks[k])));
                        violations[k] += bad[k] as usize;
                    }
                    records.push(r);
                }
            }
            Err(e) => errors.push(SampleError::new(&plan, e)),
        }
    }
    let ok = violations.iter().all(|&v| v == 0) && !records.is_empty() && error_budget_ok(errors.len(), sampling.samples);
    Ok(BoundReport {
        schema_version: SCHEMA_VERSION,
        alpha,
        beta,
        sampling: sampling.clone(),
        records,
        min_slack,
        violations,
        errors,
        status: Status::from_ok(ok),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeFamily {
    G,
    A,
}

impl ProbeFamily {
    fn kind(self, alpha: f64) -> Result<MeanKind> {
        let ok = match self {
            ProbeFamily::G => alpha > 0.0 && alpha <= 2.0,
            ProbeFamily::A => (0.0..=1.0).contains(&alpha),
        };
        if !ok {
            let range = if self == ProbeFamily::G { "(0, 2]" } else { "[0, 1]" };
            return Err(Error::Domain(format!("{self:?} parameter {alpha} outside {range}")));
        }
        match self {
            ProbeFamily::G => MeanKind::g(alpha),
            ProbeFamily::A => MeanKind::a(alpha),
        }
    }
}

impl FromStr for ProbeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "G" => Ok(ProbeFamily::G),
            "A" => Ok(ProbeFamily::A),
            _ => Err(Error::Parse(format!("probe family must be G or A, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub param: f64,
    /// `‖family_param X − family_target X‖`
    pub difference: f64,
    /// `difference / ‖family_target X‖`
    pub relative_difference: f64,
    /// The rate bound `4|α′−α|/α·‖A_β X‖`, when it applies to this point.
    pub rate_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub schema_version: u32,
    pub family: ProbeFamily,
    pub target: f64,
    pub norm: NormKind,
    /// `‖family_target X‖`
    pub target_norm: f64,
    pub rate_beta: f64,
    pub points: Vec<ProbePoint>,
    pub rate_violations: usize,
}

impl ContinuityReport {
    /// Whether differences never increase from index `start` on.
    pub fn nonincreasing_from(&self, start: usize) -> bool {
        self.points.iter().skip(start).collect::<Vec<_>>().windows(2).all(|w| w[1].difference <= w[0].difference)
    }
}

/// `‖family_p X − family_target X‖` along `sequence`. For the A family with
/// `target > 0` the explicit rate `‖A_α − A_{α′}‖ ≤ 4|α′−α|/α·‖A_β X‖` is checked
/// at every `α′ ∈ [α/2, β)`, with `β = 1`.
pub fn continuity_probe(
    family: ProbeFamily,
    target: f64,
    sequence: &[f64],
    input: &MeanTransformInput,
    norm: NormKind,
) -> Result<ContinuityReport> {
    let policy = EvalPolicy::default();
    let d = input.decompose()?;
    let reference = d.mean_transform(family.kind(target)?, &policy)?;
    let target_norm = norm.eval_singular_values(&singular_values(&reference)?)?;
    let rate_beta = 1.0;
    let a_beta_norm = match family {
        ProbeFamily::A if target > 0.0 => {
            Some(norm.eval_singular_values(&singular_values(&d.mean_transform(MeanKind::a(rate_beta)?, &policy)?)?)?)
        }
        _ => None,
    };
    let mut points = Vec::with_capacity(sequence.len());
    let mut rate_violations = 0;
    for &p in sequence {
        let y = d.mean_transform(family.kind(p)?, &policy)?;
        let difference = norm.eval_singular_values(&singular_values(&(&y - &reference))?)?;
        let rate_bound = a_beta_norm
            .filter(|_| p >= target / 2.0 && p < rate_beta)
            .map(|nb| 4.0 * (p - target).abs() / target * nb);
        if let Some(b) = rate_bound {
            if difference > b * (1.0 + 1e-12) {
                rate_violations += 1;
            }
        }
        let relative_difference = if target_norm > 0.0 { difference / target_norm } else { difference };
        points.push(ProbePoint { param: p, difference, relative_difference, rate_bound });
    }
    Ok(ContinuityReport {
        schema_version: SCHEMA_VERSION,
        family,
        target,
        norm,
        target_norm,
        rate_beta,
        points,
        rate_violations,
    })
}

/// `target + 2^{−k}·offset` for `k = 1..=count`.
pub fn geometric_sequence(target: f64, offset: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| target + offset * 0.5f64.powi(k as i32)).collect()
}

/// A chain from term codes such as `A:0.5`, `sum:G_inv_m:2` or `integral:64`.
pub fn custom_chain(chain_id: &str, terms: &[&str], sampling: SamplingConfig) -> Result<ChainSpec> {
    let terms = terms.iter().map(|t| t.parse()).collect::<Result<Vec<Term>>>()?;
    Ok(ChainSpec { chain_id: chain_id.to_string(), terms, params: ChainParams::default(), sampling })
}

/// Per-chain pass/fail summary keyed by chain id and parameters.
pub fn summarize(report: &BatteryReport) -> BTreeMap<String, (Status, Option<f64>)> {
    report
        .chains
        .iter()
        .map(|c| (format!("{} {}", c.chain_id, serde_json::to_string(&c.params).unwrap_or_default()), (c.status, c.min_relative_margin)))
        .collect()
}
