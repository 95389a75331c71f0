use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tbechart(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbechart"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn close(a: &Value, b: f64, tol: f64) -> bool {
    (a.as_f64().unwrap() - b).abs() <= tol * b.abs()
}

#[test]
fn design_known_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = tbechart(dir.path(), &["design", "--alpha", "0.0027", "--eta", "1", "--beta", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let d = &json(&out)["design"];
    assert!(close(&d["lcl"], 0.001_350_912_070_956_274, 1e-12));
    assert!(close(&d["cl"], 1.0, 1e-12));
    assert!(close(&d["ucl"], 6.607_650_686_531_799, 1e-12));
    assert_eq!(d["source"], "known");
}

#[test]
fn design_from_phase1_file_scales_limits() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p1.csv"), "# three points\n1\n2\n\n3\n").unwrap();
    let out = tbechart(dir.path(), &["design", "--alpha", "0.0027", "--eta", "1", "--phase1", "p1.csv", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(close(&v["phase1"]["beta_hat"], 2.0, 1e-15));
    assert_eq!(v["phase1"]["m"], 3);
    assert!(close(&v["design"]["lcl"], 2.0 * 0.001_350_912_070_956_274, 1e-12));
    assert!(close(&v["design"]["ucl"], 2.0 * 6.607_650_686_531_799, 1e-12));
    assert_eq!(v["design"]["source"], "estimated");
}

#[test]
fn design_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p1.csv"), "1\n").unwrap();
    for args in [
        &["design", "--alpha", "1.5", "--eta", "1", "--beta", "1"][..],
        &["design", "--eta", "1"],
        &["design", "--beta", "1"],
        &["design", "--eta", "1", "--beta", "1", "--phase1", "p1.csv"],
        &["design", "--eta", "1", "--phase1", "missing.csv"],
        &["design", "--eta", "1", "--beta", "1", "--format", "xml"],
    ] {
        let out = tbechart(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tbechart(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(tbechart(dir.path(), &["--version"]).status.code(), Some(0));
    assert_eq!(tbechart(dir.path(), &[]).status.code(), Some(1));
}

#[test]
fn eval_known_case() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&tbechart(dir.path(), &["eval", "--case", "k", "--delta1", "1", "--delta2", "1", "--format", "json"]));
    assert!(close(&v["arl"], 370.370_370_370_370_4, 1e-12));
    let v = json(&tbechart(dir.path(), &["eval", "--case", "k", "--delta1", "2", "--eta", "1", "--format", "json"]));
    assert!(close(&v["arl"], 26.725_409_752_904_37, 1e-9));
}

#[test]
fn eval_estimated_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = tbechart(dir.path(), &["eval", "--case", "u", "--m", "30", "--alpha", "0.0027", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // published simulation: 338.93 and 52.9%
    assert!(close(&v["ecarl"], 338.93, 0.015));
    assert!((v["epc"].as_f64().unwrap() - 0.529).abs() < 0.01);
    assert!(v["p95"].as_f64().unwrap() < v["carl_max"].as_f64().unwrap());
    let out = tbechart(dir.path(), &["eval", "--case", "u"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_csv_has_header_and_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = tbechart(dir.path(), &["eval", "--case", "u", "--m", "100", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("case,m,alpha0,eta0,delta1,delta2,ecarl,sdcarl,epc"));
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
}

#[test]
fn table1_is_deterministic_and_schema_stable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |file: &str| {
        let out = tbechart(dir.path(), &["table1", "--m", "30", "--reps", "1000", "--seed", "7", "--out", file]);
        assert_eq!(out.status.code(), Some(0));
        fs::read_to_string(dir.path().join(file)).unwrap()
    };
    let a = run("a.csv");
    assert_eq!(a, run("b.csv"));
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("eta0,beta0,m,acarl,sdcarl,epc,p05,p10,p25,p50,p75,p90,p95"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn table1_config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("study.toml"),
        "alpha0 = 0.0027\nm = [30, 50]\nreplications = 500\nseed = 3\nparams = [{ eta0 = 2.0, beta0 = 5.0 }]\n",
    )
    .unwrap();
    let out = tbechart(dir.path(), &["table1", "--config", "study.toml", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["rows"][0]["eta0"], 2.0);
    assert_eq!(v["replications"], 500);

    let out = tbechart(dir.path(), &["table1", "--config", "study.toml", "--m", "40", "--params", "(0.5,10)", "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert_eq!(v["rows"][0]["m"], 40);
    assert_eq!(v["rows"][0]["beta0"], 10.0);

    fs::write(dir.path().join("bad.toml"), "replications = 10\nunknown = 1\n").unwrap();
    assert_eq!(tbechart(dir.path(), &["table1", "--config", "bad.toml"]).status.code(), Some(1));
    assert_eq!(tbechart(dir.path(), &["table1", "--reps", "0", "--m", "30"]).status.code(), Some(1));
    assert_eq!(tbechart(dir.path(), &["table1", "--params", "(1,2,3)"]).status.code(), Some(1));
}

#[test]
fn table1_pivotal_across_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let out = tbechart(
        dir.path(),
        &["table1", "--params", "(0.5,10)", "--params", "(1,1)", "--m", "100", "--reps", "20000", "--format", "json"],
    );
    let v = json(&out);
    let row = |i: usize| {
        let r = &v["rows"][i];
        (r["acarl"].as_f64().unwrap(), r["sdcarl"].as_f64().unwrap())
    };
    let (a, sa) = row(0);
    let (b, sb) = row(1);
    let se = (sa * sa + sb * sb).sqrt() / 20000f64.sqrt();
    assert!((a - b).abs() <= 2.0 * se, "{a} vs {b}, se {se}");
}

#[test]
fn adjust_ecarl_match() {
    let dir = tempfile::tempdir().unwrap();
    let out = tbechart(dir.path(), &["adjust", "--m", "30", "--criterion", "ecarl", "--target", "370.4", "--reps", "20000", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let row = &json(&out)["rows"][0];
    assert!(row["alpha_adj"].as_f64().unwrap() < 0.0027);
    assert!(close(&row["verification"]["ecarl"], 370.4, 1e-3));
    let mc = &row["monte_carlo"];
    let tol = 3.0 * mc["acarl_se"].as_f64().unwrap();
    assert!((mc["acarl"].as_f64().unwrap() - 370.4).abs() < tol);
    assert_eq!(row["out_of_control"].as_array().unwrap().len(), 2);
}

#[test]
fn adjust_large_sample_approaches_nominal() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&tbechart(dir.path(), &["adjust", "--m", "100000", "--criterion", "ecarl", "--format", "json"]));
    assert!(close(&v["rows"][0]["alpha_adj"], 1.0 / 370.4, 1e-3));
}

#[test]
fn adjust_infeasible_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = tbechart(dir.path(), &["adjust", "--m", "30", "--criterion", "sdcarl", "--epsilon", "0.001", "--format", "json"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(json(&out)["rows"][0]["infeasible"].as_str().unwrap().contains("m = 30"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsatisfiable"));
    let out = tbechart(dir.path(), &["adjust", "--m", "30", "--criterion", "epc"]);
    assert_eq!(out.status.code(), Some(1));
    let out = tbechart(dir.path(), &["adjust", "--m", "30", "--criterion", "ecarl", "--epsilon", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn adjust_curve_over_several_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = tbechart(dir.path(), &["adjust", "--m", "30,100", "--m", "1000", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let alphas: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r["alpha_adj"].as_f64().unwrap()).collect();
    assert_eq!(alphas.len(), 3);
    assert!(alphas.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn monitor_flags_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("signal.csv"), "# phase II\n1.0\n7.0\n0.0013509120709562744\n0.001\n").unwrap();
    fs::write(p.join("quiet.csv"), "1.0\n6.6\n").unwrap();
    fs::write(p.join("text.csv"), "1.0\n\nabc\n").unwrap();
    fs::write(p.join("zero.csv"), "1.0\n0\n").unwrap();

    let out = tbechart(p, &["monitor", "--alpha", "0.0027", "--eta", "1", "--beta", "1", "signal.csv", "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    let status: Vec<&str> = v["records"].as_array().unwrap().iter().map(|r| r["status"].as_str().unwrap()).collect();
    // a point exactly on the LCL does not signal
    assert_eq!(status, ["in_limits", "above_ucl", "in_limits", "below_lcl"]);
    assert_eq!(v["summary"]["first_signal"], 2);
    assert_eq!(v["summary"]["signals"], 2);

    let out = tbechart(p, &["monitor", "--eta", "1", "--beta", "1", "quiet.csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no signal"));

    let out = tbechart(p, &["monitor", "--eta", "1", "--beta", "1", "text.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let out = tbechart(p, &["monitor", "--eta", "1", "--beta", "1", "zero.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn monitor_reads_back_a_design_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("p1.csv"), "2.5\n4.0\n1.2\n").unwrap();
    fs::write(p.join("p2.csv"), "3.0\n").unwrap();
    let out = tbechart(p, &["design", "--eta", "1.5", "--phase1", "p1.csv", "--out", "d.json"]);
    assert_eq!(out.status.code(), Some(0));
    let written: Value = serde_json::from_str(&fs::read_to_string(p.join("d.json")).unwrap()).unwrap();
    let out = tbechart(p, &["monitor", "--design", "d.json", "p2.csv", "--format", "json"]);
    assert_eq!(json(&out)["design"], written["design"]);

    fs::write(p.join("junk.json"), "{\"design\": {\"lcl\": 1}}").unwrap();
    assert_eq!(tbechart(p, &["monitor", "--design", "junk.json", "p2.csv"]).status.code(), Some(1));
    let out = tbechart(p, &["monitor", "--design", "d.json", "--beta", "1", "p2.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_override_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tbechart"))
        .args(["eval", "--case", "k"])
        .env("TBECHART_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
