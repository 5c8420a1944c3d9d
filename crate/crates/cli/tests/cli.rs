use std::process::{Command, Output};

use serde_json::Value;

fn meanscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meanscope"))
        .args(args)
        .env_remove("MEANSCOPE_THREADS")
        .env_remove("MEANSCOPE_FORMAT")
        .env_remove("MEANSCOPE_OUTPUT")
        .env_remove("MEANSCOPE_SEED")
        .env_remove("MEANSCOPE_SAMPLES")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn scalar_arithmetic_half() {
    let o = meanscope(&["scalar", "--kind", "A:0.5", "--x", "9", "--y", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "4.0");
}

#[test]
fn scalar_json_and_ratio() {
    let o = meanscope(&["scalar", "--kind", "GM", "--x", "4", "--y", "1", "--format", "json"]);
    let v = json(&o);
    assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let o = meanscope(&["scalar", "--kind", "AM", "--over", "GM", "--t", "-1", "--format", "json"]);
    let r = json(&o)["value"].as_f64().unwrap();
    assert!((r - 0.5f64.cosh()).abs() < 1e-12, "{r}");
}

#[test]
fn verify_thm25_example() {
    let o = meanscope(&["verify", "--chain", "thm-2.5", "--m", "2", "--dims", "3", "--samples", "50", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["chain_id"], "thm-2.5");
    assert_eq!(v["status"], "pass");
    assert!(v["min_margin"].as_f64().unwrap() > 0.0);
    assert!(v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn verify_is_byte_identical_across_runs_and_threads() {
    let args = ["verify", "--chain", "thm-1.2,prop-2.4", "--samples", "20", "--seed", "11"];
    let a = meanscope(&[&args[..], &["--threads", "1"]].concat());
    let b = meanscope(&[&args[..], &["--threads", "4"]].concat());
    let c = meanscope(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    assert_eq!(json(&a)["chains"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_csv_margins() {
    let o = meanscope(&["verify", "--chain", "prop-2.7", "--samples", "3", "--dims", "2,3x5", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "chain_id,sample,dim,norm,left_term,right_term,left_value,right_value,margin"
    );
    assert!(text.contains(",3x5,"));
    assert!(lines.all(|l| l.starts_with("prop-2.7,")));
}

#[test]
fn verify_custom_terms_and_norm_list() {
    let o = meanscope(&[
        "verify", "--terms", "G:0.5,LM,A:0.5", "--norms", "op,tr,schatten:3", "--samples", "10",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["chain_id"], "custom");
    assert_eq!(v["records"].as_array().unwrap().len(), 30);
}

#[test]
fn verify_reversed_chain_fails_with_exit_one() {
    let o = meanscope(&["verify", "--terms", "A:0.5,G:0.5", "--samples", "5", "--dims", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["status"], "fail");
}

#[test]
fn verify_bound_check() {
    let o = meanscope(&["verify", "--chain", "prop-3.2", "--alpha", "0.25", "--beta", "0.75", "--samples", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["violations"], serde_json::json!([0, 0, 0]));
}

#[test]
fn verify_on_supplied_triple() {
    let dir = std::env::temp_dir().join(format!("meanscope-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("triple.txt");
    std::fs::write(&path, "2 2\n2 0.5\n0.5 1\n2 2\n3 -1\n-1 2\n2 2\n1 2\n-1 0.5\n").unwrap();
    let o = meanscope(&["verify", "--chain", "prop-2.4", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let records = v["records"].as_array().unwrap();
    assert!(!records.is_empty());
    assert!(records.iter().all(|r| r["ensemble"].is_null() && r["dim"] == serde_json::json!([2, 2])));
}

#[test]
fn unknown_chain_is_a_configuration_error() {
    let o = meanscope(&["verify", "--chain", "thm-9.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("thm-9.9"));
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_codes_are_configuration_errors() {
    assert_eq!(meanscope(&["verify", "--norms", "kyfan:0"]).status.code(), Some(2));
    assert_eq!(meanscope(&["verify", "--norms", "bogus"]).status.code(), Some(2));
    assert_eq!(meanscope(&["verify", "--dims", "3y"]).status.code(), Some(2));
    assert_eq!(meanscope(&["scalar", "--kind", "Z:1", "--x", "1", "--y", "2"]).status.code(), Some(2));
    assert_eq!(meanscope(&["verify", "--chain", "rem-2.6", "--m", "1"]).status.code(), Some(2));
    assert_eq!(meanscope(&["verify", "--samples", "0"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_configuration_error() {
    let o = meanscope(&["scalar", "--kind", "AM", "--x", "1", "--y", "3", "--output", "/nonexistent-dir/out.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot write"));
}

#[test]
fn posdef_hg_ratio_certified() {
    let o = meanscope(&["posdef", "--function", "hg-ratio", "--alpha", "1.0"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verdict"], "certified-on-grids");
    assert_eq!(v["function_id"], "hg-ratio(alpha=1)");
}

#[test]
fn posdef_refutations_and_expectations() {
    let o = meanscope(&["posdef", "--function", "sinh-ratio", "--alpha", "1", "--beta", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["verdict"], "refuted");

    let o = meanscope(&["posdef", "--function", "cosh", "--expect", "refuted"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["necessary_test_fired"], true);
    assert!(v["witness_points"].as_array().unwrap().len() >= 2);
}

#[test]
fn posdef_mean_ratio_and_fourier() {
    let o = meanscope(&[
        "posdef", "--function", "mean-ratio", "--num", "GM", "--den", "AM", "--scales", "1,5", "--counts", "8,16",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdict"], "certified-on-grids");

    let o = meanscope(&["posdef", "--fourier", "--alpha", "0.5", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(json(&o)["max_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn posdef_missing_parameter() {
    let o = meanscope(&["posdef", "--function", "a-ratio", "--alpha", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--beta"));
}

#[test]
fn search_heinz_vs_power_finds_both_signs() {
    let o = meanscope(&["search", "--lhs", "H:0.3333333333", "--rhs", "M:0.75", "--t-min", "1e-6", "--t-max", "1e6"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let signs: Vec<i64> = v["witnesses"].as_array().unwrap().iter().map(|w| w["sign"].as_i64().unwrap()).collect();
    assert!(signs.contains(&1) && signs.contains(&-1), "{signs:?}");
}

#[test]
fn continuity_probe_passes() {
    let o = meanscope(&["continuity", "--family", "A", "--target", "0.5", "--count", "24", "--norm", "fro"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(&o);
    assert_eq!(v["status"], "pass");
    assert_eq!(v["points"].as_array().unwrap().len(), 24);
}

#[test]
fn report_rerenders_saved_json() {
    let dir = std::env::temp_dir().join(format!("meanscope-report-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("chain.json");
    let p = path.to_str().unwrap();
    let o = meanscope(&["verify", "--chain", "prop-2.7", "--samples", "5", "--output", p]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let saved = std::fs::read(&path).unwrap();

    let again = meanscope(&["report", p]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(again.stdout, saved);

    let pretty = meanscope(&["report", p, "--format", "pretty"]);
    assert!(stdout(&pretty).contains("prop-2.7"));

    let gram = dir.join("gram.json");
    meanscope(&["posdef", "--function", "cosh", "--expect", "refuted", "--output", gram.to_str().unwrap()]);
    let r = meanscope(&["report", gram.to_str().unwrap(), "--format", "csv"]);
    assert!(stdout(&r).starts_with("function_id,half_width"));

    assert_eq!(meanscope(&["report", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn environment_supplies_defaults() {
    let run = |envs: &[(&str, &str)], args: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_meanscope"));
        c.args(args);
        for (k, v) in envs {
            c.env(k, v);
        }
        c.output().unwrap()
    };
    let base = ["verify", "--chain", "prop-2.3-A", "--dims", "2"];
    let a = run(&[("MEANSCOPE_SAMPLES", "4"), ("MEANSCOPE_SEED", "99")], &base);
    let b = run(&[], &[&base[..], &["--samples", "4", "--seed", "99"]].concat());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let p = run(&[("MEANSCOPE_FORMAT", "pretty")], &["scalar", "--kind", "GM", "--x", "4", "--y", "9"]);
    assert_eq!(stdout(&p).trim(), "6.0");
    let j = run(&[("MEANSCOPE_FORMAT", "json")], &["scalar", "--kind", "GM", "--x", "4", "--y", "9"]);
    assert!((json(&j)["value"].as_f64().unwrap() - 6.0).abs() < 1e-12);
}

#[test]
fn full_default_battery_passes() {
    let o = meanscope(&["verify", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["status"], "pass");
    assert_eq!(v["chains"].as_array().unwrap().len(), 28);
}
