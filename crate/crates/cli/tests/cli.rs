use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::Value;
use tempfile::TempDir;

fn slowdiff(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slowdiff"))
        .args(args)
        .env("SLOWDIFF_OUT", out)
        .output()
        .expect("binary runs")
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn barenblatt_vanishes_at_the_origin() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["eval", "--family", "barenblatt", "--at", "0,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = json_of(&o);
    assert_eq!(j["value"], Value::from(0.0));
    assert_eq!(j["params"]["n"], Value::from(2));
}

#[test]
fn eval_reports_infinity_as_text() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["eval", "--family", "stationary_fundamental", "--p", "3", "--n", "4", "--at", "0,0,0,0", "--t", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json_of(&o)["value"], Value::from("inf"));
}

#[test]
fn gap_schedule_example() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["schedule", "--eps", "0.5", "--sigma", "0.25", "--p", "3", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let got: Vec<f64> = serde_json::from_value(json_of(&o)["schedule"].clone()).unwrap();
    assert_eq!(got.len(), 3);
    for (g, w) in got.iter().zip([1.36, 1.9, 3.25]) {
        assert!((g - w).abs() < 1e-12, "{got:?}");
    }
    assert!(dir.path().join("schedule-gap-p3-n2.dat").exists());
}

#[test]
fn alpha_schedule_stops_above_p_minus_two() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["schedule", "--alpha", "0.3", "--p", "3", "--n", "2"]);
    let got: Vec<f64> = serde_json::from_value(json_of(&o)["schedule"].clone()).unwrap();
    assert_eq!(got.len(), 3);
    assert!((got[2] - 1.2).abs() < 1e-12, "{got:?}");
    let o = slowdiff(dir.path(), &["schedule", "--alpha", "0.3", "--eps", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn classify_barenblatt_is_class_b() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["classify", "--family", "barenblatt", "--p", "3", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = json_of(&o);
    assert_eq!(j["verdict"], "ClassB");
    let s = j["s_star"].as_f64().unwrap();
    assert!((s - 3.5).abs() <= 0.15, "s_star {s}");
    for key in ["field", "params", "estimates", "flags", "refinement"] {
        assert!(j.get(key).is_some(), "missing {key}");
    }
    let triple = &j["estimates"][0];
    assert_eq!(triple.as_array().unwrap().len(), 3);
    let dat = std::fs::read_to_string(dir.path().join("classify-barenblatt-p3-n2.dat")).unwrap();
    assert!(dat.starts_with("# s level estimate\n"));
}

#[test]
fn heat_kernel_control_exits_with_verdict_failure() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["classify", "--family", "heat_kernel", "--p", "3", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let j = json_of(&o);
    assert!(j["flags"].as_array().unwrap().iter().any(|f| f == "gap_violation"));
}

fn snapshot(values: &[f64]) -> String {
    let mut s = format!("# nx={} nt=2 x0=0 x1=1 t0=0 t1=1 p=3 n=1\n", values.len());
    for level in 0..2 {
        for (i, v) in values.iter().enumerate() {
            let x = i as f64 / (values.len() - 1) as f64;
            s.push_str(&format!("{level},{x},{v},0\n"));
        }
    }
    s
}

#[test]
fn compare_exit_codes() {
    let dir = TempDir::new().unwrap();
    let lower = dir.path().join("lower.csv");
    let upper = dir.path().join("upper.csv");
    std::fs::write(&lower, snapshot(&[0.0, 1.0, 0.0])).unwrap();
    std::fs::write(&upper, snapshot(&[0.0, 2.0, 0.0])).unwrap();
    let (l, u) = (lower.to_str().unwrap(), upper.to_str().unwrap());
    let ok = slowdiff(dir.path(), &["compare", "--lower", l, "--upper", u]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert_eq!(json_of(&ok)["pass"], true);
    let bad = slowdiff(dir.path(), &["compare", "--lower", u, "--upper", l]);
    assert_eq!(bad.status.code(), Some(2));
    let j = json_of(&bad);
    assert_eq!(j["pass"], false);
    assert!((j["worst_violation"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let missing = slowdiff(dir.path(), &["compare", "--lower", l, "--upper", "/nonexistent.csv"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn giant_writes_field_sidecar_and_profile() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["giant", "--p", "3", "--nodes", "65"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = json_of(&o);
    for key in ["lam", "C", "el_residual", "iters"] {
        assert!(j[key].is_number(), "missing {key}");
    }
    let csv = std::fs::read_to_string(dir.path().join("giant-p3-n1.csv")).unwrap();
    assert!(csv.starts_with("# nx=65 nt=1"));
    assert_eq!(csv.lines().count(), 66);
    assert!(dir.path().join("giant-p3-n1.dat").exists());
}

#[test]
fn evolve_reproduces_barenblatt_roughly() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["evolve", "--family", "barenblatt", "--p", "3", "--n", "1", "--grid", "nx=33,nt=9"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = json_of(&o);
    assert!(j["max_error"].as_f64().unwrap() < 0.02, "{j}");
    let csv = std::fs::read_to_string(dir.path().join("evolve-barenblatt-p3-n1.csv")).unwrap();
    assert!(csv.starts_with("# nx=33 nt=9 x0=-1.5 x1=1.5 t0=0.5 t1=1 p=3 n=1"), "{}", csv.lines().next().unwrap());

    let again = slowdiff(
        dir.path(),
        &["evolve", "--initial", dir.path().join("evolve-barenblatt-p3-n1.csv").to_str().unwrap(), "--grid", "t0=1,t1=1.5,nt=5"],
    );
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    assert_eq!(json_of(&again)["max_error"], Value::Null);
}

#[test]
fn slices_report_both_modes() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["slices", "--family", "barenblatt", "--p", "3", "--n", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = json_of(&o);
    assert!(j["down"]["fraction"].as_f64().unwrap() <= 0.02);
    assert_eq!(j["perp_in_down"], true);
    assert_eq!(j["dichotomy"]["pass"], true);
}

#[test]
fn probes_run_with_defaults() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["probe", "--kind", "slice-norm", "--family", "barenblatt", "--p", "3", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json_of(&o)["bounded"], true);
    let o = slowdiff(dir.path(), &["probe", "--kind", "rn-scaling", "--p", "3", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = json_of(&o);
    assert_eq!(j["monotone"], true);
    assert!(j["values"].as_array().unwrap().iter().any(|v| v.as_f64().unwrap() > 1e6));
}

#[test]
fn hyperplane_demo_finds_the_contradiction() {
    let dir = TempDir::new().unwrap();
    let o = slowdiff(dir.path(), &["demo-hyperplane", "--a", "1", "--p", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let j = json_of(&o);
    assert_eq!(j["applicable"], true);
    assert_eq!(j["exceeds_at"], Value::from(1000.0));
}

#[test]
fn report_deduplicates_and_keeps_the_finest_run() {
    let runs = TempDir::new().unwrap();
    let coarse = TempDir::new().unwrap();
    let o = slowdiff(runs.path(), &["classify", "--family", "barenblatt", "--p", "3", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let fine_s = json_of(&o)["s_star"].clone();
    let o = slowdiff(runs.path(), &["classify", "--family", "separable", "--p", "3", "--n", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = slowdiff(coarse.path(), &["classify", "--family", "barenblatt", "--p", "3", "--n", "2", "--levels", "3"]);
    assert_eq!(o.status.code(), Some(0));

    let out = TempDir::new().unwrap();
    let o = slowdiff(out.path(), &["report", coarse.path().to_str().unwrap(), runs.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "field,p,n,s_star,q_star,verdict,slice_fraction_down,slice_fraction_perp,slice_measure_down,slice_measure_perp"
    );
    assert_eq!(lines.len(), 3, "{csv}");
    let b: Vec<&str> = lines[1].split(',').collect();
    assert_eq!((b[0], b[2], b[5]), ("barenblatt", "2", "ClassB"));
    assert_eq!(b[3], fine_s.to_string());
    let s: Vec<&str> = lines[2].split(',').collect();
    assert_eq!((s[0], s[5]), ("separable", "ClassM"));
}

#[test]
fn empty_report_is_header_only() {
    let out = TempDir::new().unwrap();
    let o = slowdiff(out.path(), &["report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("field,p,n,"));
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reference_thread_mode_is_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["classify", "--family", "barenblatt", "--p", "3", "--n", "1", "--gradient", "--threads", "0"];
    let oa = slowdiff(a.path(), &args);
    let ob = slowdiff(b.path(), &args);
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(files(a.path()), files(b.path()));

    let args = ["giant", "--p", "3", "--n", "2", "--nodes", "17", "--seed", "5", "--threads", "0"];
    slowdiff(a.path(), &args);
    slowdiff(b.path(), &args);
    assert_eq!(files(a.path()), files(b.path()));
}

#[test]
fn output_directory_precedence() {
    let env_dir = TempDir::new().unwrap();
    let flag_dir = TempDir::new().unwrap();
    let o = slowdiff(env_dir.path(), &["schedule", "--alpha", "0.3", "--out", flag_dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.path().join("schedule-alpha-p3-n1.json").exists());
    assert!(!flag_dir.path().join("schedule-alpha-p3-n1.json").exists());

    let o = Command::new(env!("CARGO_BIN_EXE_slowdiff"))
        .args(["schedule", "--alpha", "0.3", "--out", flag_dir.path().to_str().unwrap()])
        .env_remove("SLOWDIFF_OUT")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.path().join("schedule-alpha-p3-n1.json").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"p": 4, "n": 2, "family": "barenblatt"}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let o = slowdiff(dir.path(), &["eval", "--config", c, "--at", "0.1,0", "--t", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json_of(&o)["params"]["p"], Value::from(4.0));
    let o = slowdiff(dir.path(), &["eval", "--config", c, "--p", "3", "--at", "0.1,0", "--t", "1"]);
    assert_eq!(json_of(&o)["params"]["p"], Value::from(3.0));
    let o = slowdiff(dir.path(), &["eval", "--config", c, "--family", "constant", "--at", "0.1,0"]);
    assert_eq!(json_of(&o)["field"], "constant");
}

#[test]
fn malformed_config_names_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"p": 3, "bogus_key": 1}"#).unwrap();
    let o = slowdiff(dir.path(), &["schedule", "--alpha", "0.3", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bogus_key"), "{}", stderr(&o));

    std::fs::write(&cfg, r#"{"grid": {"nx": "many"}}"#).unwrap();
    let o = slowdiff(dir.path(), &["schedule", "--alpha", "0.3", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid.nx"), "{}", stderr(&o));

    std::fs::write(&cfg, "{},").unwrap();
    let o = slowdiff(dir.path(), &["schedule", "--alpha", "0.3", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "trailing characters accepted");

    let o = slowdiff(dir.path(), &["schedule", "--alpha", "0.3", "--grid", "nx=3,ny=4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`ny`"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let dir = TempDir::new().unwrap();
    for args in [&["frobnicate"][..], &["eval", "--family", "barenblatt"], &["classify", "--p", "x"], &[]] {
        let o = slowdiff(dir.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
    let o = slowdiff(dir.path(), &["eval", "--family", "nosuch", "--at", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = slowdiff(dir.path(), &["eval", "--family", "barenblatt", "--p", "1.5", "--at", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = slowdiff(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("--threads"));
}

const KEYS: [&str; 12] = ["p", "n", "family", "args", "field", "grid", "out", "threads", "seed", "levels", "tol_newton", "delta"];

fn malformed_config() -> impl Strategy<Value = (String, String)> {
    let unknown = "[a-z_]{1,12}"
        .prop_filter("not a config key", |k| !KEYS.contains(&k.as_str()))
        .prop_map(|k| (format!(r#"{{"{k}": 1}}"#), k));
    let wrong_type = (0..KEYS.len()).prop_map(|i| {
        let k = KEYS[i];
        let bad = if k == "family" || k == "out" { "[1, 2]" } else { r#""not-a-value""# };
        (format!(r#"{{"{k}": {bad}}}"#), k.to_string())
    });
    let broken = "[{}\\[\\]:,\"a-z0-9 ]{0,12}"
        .prop_filter("not valid JSON", |s| serde_json::from_str::<Value>(s).is_err())
        .prop_map(|s| (s, String::new()));
    prop_oneof![unknown, wrong_type, broken]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn malformed_configs_exit_one((text, key) in malformed_config()) {
        let dir = TempDir::new().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, &text).unwrap();
        let o = slowdiff(dir.path(), &["schedule", "--alpha", "0.3", "--config", cfg.to_str().unwrap()]);
        prop_assert_eq!(o.status.code(), Some(1), "{}: {}", text, stderr(&o));
        prop_assert!(stderr(&o).contains(&key), "{}: {}", text, stderr(&o));
    }
}
