use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use meanscope::matrix_io::read_triple;
use meanscope::posdef_lab::{
    check_positive_definite, fourier_kernel_check, CatalogFunction, GramReport, GridSpec, Verdict,
    DEFAULT_THRESHOLD_REL,
};
use meanscope::verifier::{
    bound_check_prop32, builtin_chain, continuity_probe, counterexample_search, custom_chain, default_battery,
    geometric_sequence, run_battery, sample_instance, verify_chain_on, with_threads, BatteryReport,
    BoundReport, ChainParams, ChainReport, ChainSpec, ContinuityReport, EnsembleKind, NormSet, ProbeFamily,
    SampleEnsemble, SamplingConfig, SearchReport, Status, DEFAULT_CONDITION_TARGET, DEFAULT_SAMPLES, DEFAULT_SEED,
    DEFAULT_TOLERANCE_REL, SCHEMA_VERSION,
};
use meanscope::{eval_mean_ext, eval_ratio, EvalPolicy, MeanKind, NormKind, RatioScale};

mod render;

#[derive(Parser)]
#[command(name = "meanscope", version, about = "Operator means, positive definite ratio functions and norm inequality checks")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "MEANSCOPE_THREADS", default_value_t = 0)]
    threads: usize,

    /// Output format; `scalar` defaults to pretty, everything else to json.
    #[arg(long, global = true, env = "MEANSCOPE_FORMAT", value_enum)]
    format: Option<Format>,

    /// Write the report here instead of standard output.
    #[arg(long, short = 'o', global = true, env = "MEANSCOPE_OUTPUT")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a mean M(x, y) or a ratio M(s,1)/N(s,1).
    Scalar(ScalarArgs),
    /// Gram-matrix positive definiteness check of a catalog function.
    Posdef(PosdefArgs),
    /// Run norm inequality chains on seeded samples.
    Verify(VerifyArgs),
    /// Scan lhs(t,1) − rhs(t,1) for sign changes.
    Search(SearchArgs),
    /// Norm distance of G or A transforms from their limit along a sequence.
    Continuity(ContinuityArgs),
    /// Re-render a saved JSON report.
    Report(ReportArgs),
}

fn parse_kind(s: &str) -> Result<MeanKind, String> {
    s.parse().map_err(|e: meanscope::Error| e.to_string())
}

fn parse_norm(s: &str) -> Result<NormKind, String> {
    s.parse().map_err(|e: meanscope::Error| e.to_string())
}

fn parse_ensemble(s: &str) -> Result<EnsembleKind, String> {
    s.parse().map_err(|e: meanscope::Error| e.to_string())
}

fn parse_family(s: &str) -> Result<ProbeFamily, String> {
    s.parse().map_err(|e: meanscope::Error| e.to_string())
}

/// `n` for an n×n shape or `nxm`.
fn parse_dim(s: &str) -> Result<(usize, usize), String> {
    let bad = || format!("malformed shape {s:?}; expected N or NxM");
    let (a, b) = s.split_once(['x', 'X']).unwrap_or((s, s));
    let n: usize = a.trim().parse().map_err(|_| bad())?;
    let m: usize = b.trim().parse().map_err(|_| bad())?;
    if n == 0 || m == 0 {
        return Err(bad());
    }
    Ok((n, m))
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Exp,
    Exp2,
}

impl From<ScaleArg> for RatioScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Exp => RatioScale::Exp,
            ScaleArg::Exp2 => RatioScale::Exp2,
        }
    }
}

#[derive(Args)]
struct ScalarArgs {
    /// Mean code such as `A:0.5`, `M:0.75` or `LM`.
    #[arg(long, value_parser = parse_kind)]
    kind: MeanKind,
    #[arg(long, required_unless_present = "t")]
    x: Option<f64>,
    #[arg(long, required_unless_present = "t")]
    y: Option<f64>,
    /// Denominator mean: prints kind(s,1)/over(s,1) at s = e^t or e^{2t}.
    #[arg(long, value_parser = parse_kind, requires = "t")]
    over: Option<MeanKind>,
    #[arg(long, allow_hyphen_values = true, requires = "over")]
    t: Option<f64>,
    #[arg(long, value_enum, default_value = "exp")]
    scale: ScaleArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expect {
    Certified,
    Refuted,
    Any,
}

#[derive(Args)]
struct PosdefArgs {
    /// sinh-ratio, hg-ratio, gl-ratio, la-ratio, a-ratio, mg-ratio, am-ratio,
    /// hm-ratio, cosh or mean-ratio.
    #[arg(long, default_value = "sinh-ratio")]
    function: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    /// Numerator of `mean-ratio`.
    #[arg(long, value_parser = parse_kind)]
    num: Option<MeanKind>,
    /// Denominator of `mean-ratio`.
    #[arg(long, value_parser = parse_kind)]
    den: Option<MeanKind>,
    #[arg(long, value_enum, default_value = "exp")]
    ratio_scale: ScaleArg,
    #[arg(long, value_delimiter = ',', default_values_t = GridSpec::default().scales)]
    scales: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = GridSpec::default().counts)]
    counts: Vec<usize>,
    #[arg(long)]
    jitter_seed: Option<u64>,
    /// Skip the jittered grids.
    #[arg(long)]
    no_jitter: bool,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_REL)]
    threshold_rel: f64,
    /// Verdict that counts as success.
    #[arg(long, value_enum, default_value = "certified")]
    expect: Expect,
    /// Check the Fourier representation of the sinh ratio instead.
    #[arg(long)]
    fourier: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![0.0, 0.5, 1.0, 2.0])]
    t_values: Vec<f64>,
    #[arg(long, default_value_t = 120.0)]
    width: f64,
    #[arg(long, default_value_t = 8001)]
    points: usize,
    #[arg(long, default_value_t = 1e-6)]
    fourier_tol: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Chain ids; repeat or separate with commas. `prop-3.2` runs the A_α/A_β
    /// bound check. Without chains the full default battery runs.
    #[arg(long, value_delimiter = ',', env = "MEANSCOPE_CHAIN")]
    chain: Vec<String>,
    /// Custom chain from term codes (`A:0.5`, `sum:G_inv_m:2`, `integral:64`).
    #[arg(long, value_delimiter = ',', conflicts_with = "chain")]
    terms: Vec<String>,
    #[arg(long, env = "MEANSCOPE_M")]
    m: Option<usize>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Shapes such as `3`, `3x5`.
    #[arg(long, value_delimiter = ',', value_parser = parse_dim, env = "MEANSCOPE_DIMS")]
    dims: Vec<(usize, usize)>,
    #[arg(long, env = "MEANSCOPE_SAMPLES", default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, env = "MEANSCOPE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Norm codes (`kyfan:2`, `schatten:3`, `op`, `tr`, `fro`); default is the full battery.
    #[arg(long, value_delimiter = ',', value_parser = parse_norm, env = "MEANSCOPE_NORMS")]
    norms: Vec<NormKind>,
    #[arg(long, env = "MEANSCOPE_TOLERANCE", default_value_t = DEFAULT_TOLERANCE_REL)]
    tolerance: f64,
    #[arg(long, value_delimiter = ',', value_parser = parse_ensemble)]
    ensembles: Vec<EnsembleKind>,
    #[arg(long, default_value_t = DEFAULT_CONDITION_TARGET)]
    condition: f64,
    /// Evaluate on the (S, T, X) triple in this file instead of samples.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_parser = parse_kind)]
    lhs: MeanKind,
    #[arg(long, value_parser = parse_kind)]
    rhs: MeanKind,
    #[arg(long, default_value_t = 1e-6)]
    t_min: f64,
    #[arg(long, default_value_t = 1e6)]
    t_max: f64,
    #[arg(long, default_value_t = 4096)]
    points: usize,
    #[arg(long, default_value_t = 60)]
    iters: usize,
}

#[derive(Args)]
struct ContinuityArgs {
    /// `G` or `A`.
    #[arg(long, value_parser = parse_family)]
    family: ProbeFamily,
    #[arg(long)]
    target: f64,
    /// Sequence is target + 2^{−k}·offset.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    offset: f64,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, env = "MEANSCOPE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "6", value_parser = parse_dim)]
    dim: (usize, usize),
    #[arg(long, default_value = "gaussian-psd", value_parser = parse_ensemble)]
    ensemble: EnsembleKind,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "op", value_parser = parse_norm)]
    norm: NormKind,
    /// Bound on the last relative difference.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Differences must not increase from this k on.
    #[arg(long, default_value_t = 3)]
    monotone_from: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON report written by another subcommand.
    path: PathBuf,
}

#[derive(Debug)]
struct CliError(String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Rendered report plus whether every check in it passed.
struct Rendered {
    text: String,
    passed: bool,
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

#[derive(Serialize)]
struct ScalarOutput {
    schema_version: u32,
    kind: MeanKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    over: Option<MeanKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    value: f64,
}

fn scalar(args: &ScalarArgs, format: Format) -> CliResult<Rendered> {
    let policy = EvalPolicy::default();
    let out = match (args.over, args.t) {
        (Some(den), Some(t)) => ScalarOutput {
            schema_version: SCHEMA_VERSION,
            kind: args.kind,
            over: Some(den),
            x: None,
            y: None,
            t: Some(t),
            value: eval_ratio(args.kind, den, t, args.scale.into(), &policy)?,
        },
        _ => {
            let (x, y) = (args.x.unwrap_or_default(), args.y.unwrap_or_default());
            ScalarOutput {
                schema_version: SCHEMA_VERSION,
                kind: args.kind,
                over: None,
                x: Some(x),
                y: Some(y),
                t: None,
                value: eval_mean_ext(args.kind, x, y, &policy)?,
            }
        }
    };
    let text = match format {
        Format::Json => json(&out)?,
        Format::Pretty => format!("{}\n", render::sig6(out.value)),
        Format::Csv => render::csv_rows(
            &["kind", "over", "x", "y", "t", "value"],
            [vec![
                out.kind.to_string(),
                out.over.map(|k| k.to_string()).unwrap_or_default(),
                render::opt(out.x),
                render::opt(out.y),
                render::opt(out.t),
                format!("{:?}", out.value),
            ]],
        )?,
    };
    Ok(Rendered { text, passed: true })
}

fn need<T>(v: Option<T>, flag: &str, function: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError(format!("--{flag} is required for {function}")))
}

fn catalog_function(args: &PosdefArgs) -> CliResult<CatalogFunction> {
    let f = args.function.as_str();
    let alpha = || need(args.alpha, "alpha", f);
    let beta = || need(args.beta, "beta", f);
    let m = || need(args.m, "m", f);
    let in_range = |ok: bool, what: &str| if ok { Ok(()) } else { Err(CliError(format!("{f}: {what}"))) };
    Ok(match f {
        "sinh-ratio" => {
            let (a, b) = (args.alpha.unwrap_or(0.5), args.beta.unwrap_or(1.0));
            in_range(a.abs() <= 2.0 && b.abs() <= 2.0, "alpha and beta must lie in [-2, 2]")?;
            CatalogFunction::SinhRatio { alpha: a, beta: b }
        }
        "hg-ratio" => CatalogFunction::HgRatio { alpha: args.alpha.unwrap_or(1.0) },
        "gl-ratio" => CatalogFunction::GlRatio { alpha: args.alpha.unwrap_or(1.0) },
        "la-ratio" => CatalogFunction::LaRatio { alpha: args.alpha.unwrap_or(1.0) },
        "a-ratio" => {
            let (a, b) = (alpha()?, beta()?);
            in_range(a.abs() <= 1.0 && b.abs() <= 1.0, "alpha and beta must lie in [-1, 1]")?;
            CatalogFunction::ARatio { alpha: a, beta: b }
        }
        "mg-ratio" | "am-ratio" | "hm-ratio" => {
            let m = m()?;
            in_range(m >= 1, "m must be >= 1")?;
            match f {
                "mg-ratio" => CatalogFunction::MgRatio { m },
                "am-ratio" => CatalogFunction::AmRatio { m },
                _ => CatalogFunction::HmRatio { m },
            }
        }
        "cosh" => CatalogFunction::Cosh,
        other => return Err(CliError(format!("unknown function {other:?}"))),
    })
}

#[derive(Serialize)]
struct FourierOutput {
    schema_version: u32,
    alpha: f64,
    beta: f64,
    t_values: Vec<f64>,
    width: f64,
    points: usize,
    max_error: f64,
    tolerance: f64,
    status: Status,
}

fn posdef(args: &PosdefArgs, format: Format, threads: usize) -> CliResult<Rendered> {
    if args.fourier {
        let (alpha, beta) = (args.alpha.unwrap_or(0.5), args.beta.unwrap_or(1.0));
        let max_error = fourier_kernel_check(alpha, beta, &args.t_values, args.width, args.points)?;
        let passed = max_error <= args.fourier_tol;
        let out = FourierOutput {
            schema_version: SCHEMA_VERSION,
            alpha,
            beta,
            t_values: args.t_values.clone(),
            width: args.width,
            points: args.points,
            max_error,
            tolerance: args.fourier_tol,
            status: if passed { Status::Pass } else { Status::Fail },
        };
        let text = match format {
            Format::Json => json(&out)?,
            Format::Pretty => format!(
                "fourier kernel alpha={} beta={} W={} points={}: max error {} (tolerance {}) {}\n",
                alpha,
                beta,
                args.width,
                args.points,
                render::sig6(max_error),
                args.fourier_tol,
                out.status
            ),
            Format::Csv => render::csv_rows(
                &["alpha", "beta", "width", "points", "max_error", "tolerance", "status"],
                [vec![
                    format!("{alpha:?}"),
                    format!("{beta:?}"),
                    format!("{:?}", args.width),
                    args.points.to_string(),
                    format!("{max_error:?}"),
                    format!("{:?}", args.fourier_tol),
                    out.status.to_string(),
                ]],
            )?,
        };
        return Ok(Rendered { text, passed });
    }

    let spec = GridSpec {
        scales: args.scales.clone(),
        counts: args.counts.clone(),
        jitter_seed: if args.no_jitter { None } else { args.jitter_seed.or(GridSpec::default().jitter_seed) },
    };
    let report: GramReport = if args.function == "mean-ratio" {
        let num = need(args.num, "num", "mean-ratio")?;
        let den = need(args.den, "den", "mean-ratio")?;
        let scale: RatioScale = args.ratio_scale.into();
        let policy = EvalPolicy::default();
        let phi = move |t: f64| eval_ratio(num, den, t, scale, &policy).unwrap_or(f64::NAN);
        let id = format!("mean-ratio({num}/{den},{})", serde_json::to_value(scale)?.as_str().unwrap_or(""));
        with_threads(threads, || check_positive_definite(&id, &phi, &spec, args.threshold_rel))??
    } else {
        let f = catalog_function(args)?;
        with_threads(threads, || f.check(&spec, args.threshold_rel))??
    };
    let passed = match args.expect {
        Expect::Certified => report.verdict == Verdict::CertifiedOnGrids,
        Expect::Refuted => report.verdict == Verdict::Refuted,
        Expect::Any => true,
    };
    let text = match format {
        Format::Json => json(&report)?,
        Format::Pretty => render::pretty_gram(&report),
        Format::Csv => render::csv_gram(&report)?,
    };
    Ok(Rendered { text, passed })
}

fn sampling(args: &VerifyArgs) -> SamplingConfig {
    let mut s = SamplingConfig {
        samples: args.samples,
        seed: args.seed,
        tolerance_rel: args.tolerance,
        condition_target: args.condition,
        ..Default::default()
    };
    if !args.dims.is_empty() {
        s.dims = args.dims.clone();
    }
    if !args.norms.is_empty() {
        s.norm_set = NormSet::List(args.norms.clone());
    }
    if !args.ensembles.is_empty() {
        s.ensembles = args.ensembles.clone();
    }
    s
}

fn verify(args: &VerifyArgs, format: Format, threads: usize) -> CliResult<Rendered> {
    let cfg = sampling(args);
    let params = ChainParams { m: args.m, m1: args.m1, m2: args.m2, alpha: args.alpha, beta: args.beta };

    if args.chain.iter().any(|c| c == "prop-3.2") {
        if args.chain.len() > 1 {
            return Err(CliError("prop-3.2 must be run on its own".into()));
        }
        if args.input.is_some() {
            return Err(CliError("prop-3.2 runs on sampled inputs only".into()));
        }
        let (a, b) = (args.alpha.unwrap_or(0.5), args.beta.unwrap_or(1.0));
        let report: BoundReport = with_threads(threads, || bound_check_prop32(a, b, &cfg))??;
        let passed = report.status == Status::Pass;
        let text = match format {
            Format::Json => json(&report)?,
            Format::Pretty => render::pretty_bound(&report),
            Format::Csv => render::csv_bound(&report)?,
        };
        return Ok(Rendered { text, passed });
    }

    let specs: Vec<ChainSpec> = if !args.terms.is_empty() {
        let terms: Vec<&str> = args.terms.iter().map(String::as_str).collect();
        vec![custom_chain("custom", &terms, cfg)?]
    } else if args.chain.is_empty() {
        default_battery(&cfg)?
    } else {
        args.chain.iter().map(|id| builtin_chain(id, &params, cfg.clone())).collect::<Result<_, _>>()?
    };
    let input = args.input.as_deref().map(read_triple).transpose()?;
    let single = specs.len() == 1;
    let battery: BatteryReport = with_threads(threads, || -> meanscope::Result<BatteryReport> {
        match &input {
            None => run_battery(&specs),
            Some(inp) => {
                let chains = specs.iter().map(|s| verify_chain_on(s, inp)).collect::<meanscope::Result<Vec<_>>>()?;
                let ok = chains.iter().all(|c| c.status == Status::Pass);
                Ok(BatteryReport {
                    schema_version: SCHEMA_VERSION,
                    chains,
                    status: if ok { Status::Pass } else { Status::Fail },
                })
            }
        }
    })??;
    let passed = battery.status == Status::Pass;
    let text = match format {
        Format::Json if single => json(&battery.chains[0])?,
        Format::Json => json(&battery)?,
        Format::Pretty => render::pretty_chains(&battery.chains),
        Format::Csv => render::csv_chains(&battery.chains)?,
    };
    Ok(Rendered { text, passed })
}

fn search(args: &SearchArgs, format: Format) -> CliResult<Rendered> {
    let report = counterexample_search(args.lhs, args.rhs, (args.t_min, args.t_max), args.points, args.iters)?;
    let text = match format {
        Format::Json => json(&report)?,
        Format::Pretty => render::pretty_search(&report),
        Format::Csv => render::csv_search(&report)?,
    };
    Ok(Rendered { text, passed: true })
}

#[derive(Serialize, serde::Deserialize)]
struct ContinuityOutput {
    #[serde(flatten)]
    report: ContinuityReport,
    tolerance: f64,
    monotone_from: usize,
    status: Status,
}

fn continuity(args: &ContinuityArgs, format: Format) -> CliResult<Rendered> {
    let input = match &args.input {
        Some(p) => read_triple(p)?,
        None => sample_instance(
            &SampleEnsemble { kind: args.ensemble, condition_target: DEFAULT_CONDITION_TARGET, seed: args.seed },
            args.dim,
        ),
    };
    let seq = geometric_sequence(args.target, args.offset, args.count);
    let report = continuity_probe(args.family, args.target, &seq, &input, args.norm)?;
    let last = report.points.last().map(|p| p.relative_difference).unwrap_or(0.0);
    let ok = last < args.tolerance
        && report.nonincreasing_from(args.monotone_from.saturating_sub(1))
        && report.rate_violations == 0;
    let out = ContinuityOutput {
        report,
        tolerance: args.tolerance,
        monotone_from: args.monotone_from,
        status: if ok { Status::Pass } else { Status::Fail },
    };
    let text = match format {
        Format::Json => json(&out)?,
        Format::Pretty => render::pretty_continuity(&out.report, out.status),
        Format::Csv => render::csv_continuity(&out.report)?,
    };
    Ok(Rendered { text, passed: ok })
}

fn report(args: &ReportArgs, format: Format) -> CliResult<Rendered> {
    let text = std::fs::read_to_string(&args.path)
        .map_err(|e| CliError(format!("cannot read {}: {e}", args.path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let has = |k: &str| value.get(k).is_some();
    let status_ok = |s: Status| s == Status::Pass;
    let (text, passed) = if has("chains") {
        let r: BatteryReport = serde_json::from_value(value)?;
        let passed = status_ok(r.status);
        (
            match format {
                Format::Json => json(&r)?,
                Format::Pretty => render::pretty_chains(&r.chains),
                Format::Csv => render::csv_chains(&r.chains)?,
            },
            passed,
        )
    } else if has("chain_id") {
        let r: ChainReport = serde_json::from_value(value)?;
        let passed = status_ok(r.status);
        let chains = [r];
        (
            match format {
                Format::Json => json(&chains[0])?,
                Format::Pretty => render::pretty_chains(&chains),
                Format::Csv => render::csv_chains(&chains)?,
            },
            passed,
        )
    } else if has("verdict") {
        let r: GramReport = serde_json::from_value(value)?;
        (
            match format {
                Format::Json => json(&r)?,
                Format::Pretty => render::pretty_gram(&r),
                Format::Csv => render::csv_gram(&r)?,
            },
            r.verdict != Verdict::Inconclusive,
        )
    } else if has("witnesses") {
        let r: SearchReport = serde_json::from_value(value)?;
        (
            match format {
                Format::Json => json(&r)?,
                Format::Pretty => render::pretty_search(&r),
                Format::Csv => render::csv_search(&r)?,
            },
            true,
        )
    } else if has("min_slack") {
        let r: BoundReport = serde_json::from_value(value)?;
        let passed = status_ok(r.status);
        (
            match format {
                Format::Json => json(&r)?,
                Format::Pretty => render::pretty_bound(&r),
                Format::Csv => render::csv_bound(&r)?,
            },
            passed,
        )
    } else if has("points") {
        let r: ContinuityOutput = serde_json::from_value(value)?;
        let passed = status_ok(r.status);
        (
            match format {
                Format::Json => json(&r)?,
                Format::Pretty => render::pretty_continuity(&r.report, r.status),
                Format::Csv => render::csv_continuity(&r.report)?,
            },
            passed,
        )
    } else {
        return Err(CliError(format!("{} is not a recognised report", args.path.display())));
    };
    Ok(Rendered { text, passed })
}

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(std::io::stdout().lock())),
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(f))
        }
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    // Open the destination first so a bad path fails before any work.
    let mut out = open_output(cli.output.as_deref())?;
    let default_format = if matches!(cli.command, Command::Scalar(_)) { Format::Pretty } else { Format::Json };
    let format = cli.format.unwrap_or(default_format);
    let rendered = match &cli.command {
        Command::Scalar(a) => scalar(a, format)?,
        Command::Posdef(a) => posdef(a, format, cli.threads)?,
        Command::Verify(a) => verify(a, format, cli.threads)?,
        Command::Search(a) => search(a, format)?,
        Command::Continuity(a) => continuity(a, format)?,
        Command::Report(a) => report(a, format)?,
    };
    out.write_all(rendered.text.as_bytes())?;
    out.flush()?;
    Ok(rendered.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
