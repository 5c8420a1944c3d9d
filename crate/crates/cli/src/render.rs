use std::fmt::Write as _;

use meanscope::posdef_lab::GramReport;
use meanscope::verifier::{write_margin_csv, BoundReport, ChainReport, ContinuityReport, SearchReport, Status};

use crate::CliResult;

/// Six significant digits, printed in shortest round-trip form.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    format!("{rounded:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn opt6(v: Option<f64>) -> String {
    v.map(sig6).unwrap_or_else(|| "-".into())
}

pub fn csv_rows<I>(header: &[&str], rows: I) -> CliResult<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn dim(d: (usize, usize)) -> String {
    format!("{}x{}", d.0, d.1)
}

fn params(r: &ChainReport) -> String {
    let p = &r.params;
    let mut parts = Vec::new();
    for (k, v) in [("m", p.m), ("m1", p.m1), ("m2", p.m2)] {
        if let Some(v) = v {
            parts.push(format!("{k}={v}"));
        }
    }
    for (k, v) in [("alpha", p.alpha), ("beta", p.beta)] {
        if let Some(v) = v {
            parts.push(format!("{k}={v}"));
        }
    }
    if parts.is_empty() {
        "-".into()
    } else {
        parts.join(",")
    }
}

pub fn pretty_chains(reports: &[ChainReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:<22} {:>8} {:>13} {:>13} {:>10} {:>6}  status",
        "chain", "params", "records", "min_margin", "min_rel", "violations", "errors"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<12} {:<22} {:>8} {:>13} {:>13} {:>10} {:>6}  {}",
            r.chain_id,
            params(r),
            r.records.len(),
            opt6(r.min_margin),
            opt6(r.min_relative_margin),
            r.violations.len(),
            r.errors.len(),
            r.status
        );
    }
    for r in reports {
        for v in r.violations.iter().take(5) {
            let _ = writeln!(
                s,
                "violation {} sample {} {} {}: {} = {} > {} = {}",
                r.chain_id,
                v.sample,
                dim(v.dim),
                v.norm,
                v.left_term,
                sig6(v.left_value),
                v.right_term,
                sig6(v.right_value)
            );
        }
    }
    let failed = reports.iter().filter(|r| r.status == Status::Fail).count();
    let _ = writeln!(s, "{} chains, {} failed", reports.len(), failed);
    s
}

pub fn csv_chains(reports: &[ChainReport]) -> CliResult<String> {
    let mut buf = Vec::new();
    write_margin_csv(reports, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

pub fn pretty_gram(r: &GramReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "function   {}", r.function_id);
    let _ = writeln!(s, "verdict    {}", r.verdict);
    let _ = writeln!(s, "min eig    {}", sig6(r.min_eigenvalue));
    let _ = writeln!(s, "threshold  {}", sig6(r.threshold));
    if r.necessary_test_fired {
        let _ = writeln!(s, "decided by phi(t) <= phi(0) scan");
    }
    if let Some(w) = &r.witness_points {
        let pts: Vec<String> = w.iter().map(|x| sig6(*x)).collect();
        let _ = writeln!(s, "witness    [{}]", pts.join(", "));
    }
    let _ = writeln!(s, "{:>10} {:>6} {:>8} {:>14} {:>12}  note", "half_width", "count", "jitter", "min_eig", "threshold");
    for g in &r.grids {
        let _ = writeln!(
            s,
            "{:>10} {:>6} {:>8} {:>14} {:>12}  {}",
            g.grid.half_width,
            g.grid.count,
            if g.grid.jitter_seed.is_some() { "yes" } else { "no" },
            opt6(g.min_eigenvalue),
            sig6(g.threshold),
            g.error.as_deref().unwrap_or("")
        );
    }
    s
}

pub fn csv_gram(r: &GramReport) -> CliResult<String> {
    csv_rows(
        &["function_id", "half_width", "count", "jitter_seed", "size", "min_eigenvalue", "threshold", "error"],
        r.grids.iter().map(|g| {
            vec![
                r.function_id.clone(),
                format!("{:?}", g.grid.half_width),
                g.grid.count.to_string(),
                g.grid.jitter_seed.map(|x| x.to_string()).unwrap_or_default(),
                g.size.to_string(),
                opt(g.min_eigenvalue),
                format!("{:?}", g.threshold),
                g.error.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn pretty_search(r: &SearchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} - {} on t in [{}, {}]", r.lhs, r.rhs, r.t_range.0, r.t_range.1);
    for (label, list) in [("witness", &r.witnesses), ("crossing", &r.crossings)] {
        for w in list {
            let _ = writeln!(
                s,
                "{label:<9} t = {:<14} sign {:+}  lhs {}  rhs {}  diff {}",
                sig6(w.t),
                w.sign,
                sig6(w.lhs),
                sig6(w.rhs),
                sig6(w.difference)
            );
        }
    }
    if r.witnesses.is_empty() {
        let _ = writeln!(s, "no sign found");
    }
    s
}

pub fn csv_search(r: &SearchReport) -> CliResult<String> {
    let rows = r
        .witnesses
        .iter()
        .map(|w| ("witness", w))
        .chain(r.crossings.iter().map(|w| ("crossing", w)))
        .map(|(k, w)| {
            vec![
                k.to_string(),
                format!("{:?}", w.t),
                w.sign.to_string(),
                format!("{:?}", w.lhs),
                format!("{:?}", w.rhs),
                format!("{:?}", w.difference),
            ]
        });
    csv_rows(&["kind", "t", "sign", "lhs", "rhs", "difference"], rows)
}

pub fn pretty_bound(r: &BoundReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "A_alpha vs A_beta bounds, alpha = {}, beta = {}", r.alpha, r.beta);
    let names = ["|A_a| <= |A_b|", "|A_b| <= ((2b-a)/a)|A_a|", "|A_a - A_b| <= (2(b-a)/a)|A_a|"];
    for (i, n) in names.iter().enumerate() {
        let _ = writeln!(s, "{:<32} min slack {:>13}  violations {}", n, opt6(r.min_slack[i]), r.violations[i]);
    }
    let _ = writeln!(s, "{} records, {} errors, {}", r.records.len(), r.errors.len(), r.status);
    s
}

pub fn csv_bound(r: &BoundReport) -> CliResult<String> {
    csv_rows(
        &["sample", "dim", "norm", "a_alpha", "a_beta", "difference", "slack_1", "slack_2", "slack_3"],
        r.records.iter().map(|b| {
            vec![
                b.sample.to_string(),
                dim(b.dim),
                b.norm.to_string(),
                format!("{:?}", b.a_alpha),
                format!("{:?}", b.a_beta),
                format!("{:?}", b.difference),
                format!("{:?}", b.slacks[0]),
                format!("{:?}", b.slacks[1]),
                format!("{:?}", b.slacks[2]),
            ]
        }),
    )
}

pub fn pretty_continuity(r: &ContinuityReport, status: Status) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:?} -> target {} in {} (target norm {})",
        r.family,
        r.target,
        r.norm,
        sig6(r.target_norm)
    );
    let _ = writeln!(s, "{:>4} {:>22} {:>13} {:>13} {:>13}", "k", "param", "difference", "relative", "rate_bound");
    for (k, p) in r.points.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:>4} {:>22} {:>13} {:>13} {:>13}",
            k + 1,
            format!("{:?}", p.param),
            sig6(p.difference),
            sig6(p.relative_difference),
            opt6(p.rate_bound)
        );
    }
    let _ = writeln!(s, "rate violations {}, {}", r.rate_violations, status);
    s
}

pub fn csv_continuity(r: &ContinuityReport) -> CliResult<String> {
    csv_rows(
        &["param", "difference", "relative_difference", "rate_bound"],
        r.points.iter().map(|p| {
            vec![
                format!("{:?}", p.param),
                format!("{:?}", p.difference),
                format!("{:?}", p.relative_difference),
                opt(p.rate_bound),
            ]
        }),
    )
}
