use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cksvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cksvar")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).expect("standard error carries one JSON object")
}

#[test]
fn classify_infltarget_reports_case_one() {
    let o = cksvar(&["classify", "--example", "infltarget_1b", "--delta", "-0.2", "--mu", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["case"], "RegulatedCoint");
    assert_eq!(v["r"], 1);
    let beta = &v["factor_plus"]["beta"];
    let ratio = beta[1][0].as_f64().unwrap() / beta[0][0].as_f64().unwrap();
    assert!((ratio + 1.0).abs() < 1e-10);
}

#[test]
fn classify_kinked_variant() {
    let o = cksvar(&["classify", "--example", "infltarget_1b", "--delta", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["case"], "KinkedCoint");
}

#[test]
fn simulate_is_byte_identical_under_a_seed() {
    let args = ["simulate", "--example", "univariate_tobit", "--n", "1000", "--seed", "7"];
    let a = cksvar(&args);
    let b = cksvar(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = cksvar(&["simulate", "--example", "univariate_tobit", "--n", "1000", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("path.csv");
    let o = cksvar(&["simulate", "--example", "natrate_1a", "--n", "200", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,y,y_plus,y_minus,x_1,u_1,u_2");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 200);

    let json = cksvar(&["simulate", "--example", "natrate_1a", "--n", "200", "--seed", "3", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&json)).unwrap();
    for (name, col) in [("y", 1), ("y_plus", 2), ("y_minus", 3), ("x_1", 4), ("u_2", 6)] {
        let exact: Vec<f64> = v[name].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let parsed: Vec<f64> = rows.iter().map(|r| r[col]).collect();
        assert_eq!(exact, parsed, "{name}");
    }
    for r in &rows {
        assert_eq!(r[2] * r[3], 0.0);
        assert_eq!(r[2] + r[3], r[1]);
    }
}

fn write_model(dir: &Path, name: &str, edit: impl Fn(&mut Value)) -> String {
    let o = cksvar(&["examples", "--dump", "natrate_1a"]);
    assert_eq!(o.status.code(), Some(0));
    let mut v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    edit(&mut v);
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_rejects_incoherent_model() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_model(dir.path(), "bad.json", |v| v["phi0_minus"] = serde_json::json!([-1.0, 0.0]));
    let o = cksvar(&["verify", "--model", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["kind"], "DGP.2");
    assert!(e["message"].as_str().unwrap().contains("DGP.2"));
}

#[test]
fn verify_model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_model(dir.path(), "good.json", |_| {});
    let from_file = cksvar(&["classify", "--model", &good]);
    let from_example = cksvar(&["classify", "--example", "natrate_1a"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_example.stdout);
}

#[test]
fn verify_tobit_passes_and_certifies() {
    let o = cksvar(&["verify", "--example", "univariate_tobit"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["all_ok"], true);
}

#[test]
fn verify_reports_uncertified_jsr_with_exit_two() {
    let o = cksvar(&["verify", "--example", "infltarget_1b", "--depth", "4"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["kind"], "assumption");
    assert!(e["message"].as_str().unwrap().contains("--depth"));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["all_ok"], false);
}

#[test]
fn parse_and_io_errors_exit_one() {
    assert_eq!(cksvar(&["classify", "--example", "natrate_1a", "--bogus"]).status.code(), Some(1));
    assert_eq!(cksvar(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cksvar(&["classify", "--model", "/nonexistent/model.json"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.json");
    fs::write(&p, "{ not json").unwrap();
    let o = cksvar(&["classify", "--model", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "parse");
    assert_eq!(cksvar(&["--help"]).status.code(), Some(0));
}

#[test]
fn out_of_range_parameter_exits_two() {
    let o = cksvar(&["classify", "--example", "infltarget_1b", "--gamma", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("gamma > 1"));
    let o = cksvar(&["classify", "--example", "univariate_tobit", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn limit_writes_grid_and_rejects_bad_z0() {
    let o = cksvar(&["limit", "--example", "infltarget_1b", "--delta", "0", "--case", "ii", "--m", "64", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,Y,X_1");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 65);
    assert_eq!(rows[64][0], 1.0);
    assert_eq!(&rows[0][1..], &[0.0, 0.0]);

    let tobit = cksvar(&["limit", "--example", "univariate_tobit", "--m", "64"]);
    let ys: Vec<f64> = stdout(&tobit).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(ys.iter().all(|&y| y >= 0.0));

    let wrong = cksvar(&["limit", "--example", "univariate_tobit", "--case", "ii"]);
    assert_eq!(wrong.status.code(), Some(2));
    let off = cksvar(&["limit", "--example", "univariate_tobit", "--z0=-1"]);
    assert_eq!(off.status.code(), Some(2));
    assert_eq!(stderr_json(&off)["kind"], "not_in_trend_space");
}

#[test]
fn jsr_of_golden_pair() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("set.json");
    fs::write(&p, r#"{"matrices": [[[1,1],[0,1]], [[1,0],[1,1]]], "labels": ["A", "B"]}"#).unwrap();
    let o = cksvar(&["jsr", "--file", p.to_str().unwrap(), "--depth", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lower = v["estimate"]["lower"].as_f64().unwrap();
    assert!((lower - 1.618_033_988_749_895).abs() < 1e-9);
    assert_eq!(v["labels"][1], "B");
    fs::write(&p, "[[[1,2],[3]]]").unwrap();
    assert_eq!(cksvar(&["jsr", "--file", p.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn examples_lists_defaults_and_ranges() {
    let o = cksvar(&["examples"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["natrate_1a", "infltarget_1b", "univariate_tobit"]);
    let csv = stdout(&cksvar(&["examples", "--format", "csv"]));
    assert!(csv.lines().any(|l| l.starts_with("infltarget_1b,gamma,1.5") && l.ends_with("\"(1,inf)\"")));
}

#[test]
fn mc_writes_report_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc");
    let args = [
        "mc", "--example", "univariate_tobit", "--n-list", "250,1000", "--reps", "200", "--grid", "256",
        "--limit-reps", "2000", "--ks-tol", "0.15", "--functionals", "terminal_value,path_sup", "--seed", "11",
        "--out", out.to_str().unwrap(),
    ];
    let o = cksvar(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["case"], "case_i");
    assert_eq!(report["ks"].as_array().unwrap().len(), 4);
    assert!(report.get("model_samples").is_none());
    let samples = fs::read_to_string(out.join("terminal_value.csv")).unwrap();
    assert_eq!(samples.lines().next().unwrap(), "model,limit");
    assert_eq!(samples.lines().count(), 2001);
    let first = fs::read(out.join("path_sup.csv")).unwrap();
    assert_eq!(cksvar(&args).status.code(), Some(0));
    assert_eq!(fs::read(out.join("path_sup.csv")).unwrap(), first);

    let strict = cksvar(&["mc", "--example", "univariate_tobit", "--n-list", "250", "--reps", "100", "--grid", "64", "--ks-tol", "0.0"]);
    assert_eq!(strict.status.code(), Some(2));
    assert_eq!(stderr_json(&strict)["kind"], "ks");
}
