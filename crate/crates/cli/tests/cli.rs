//! End-to-end runs of the `optsel` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn optsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optsel")).args(args).env_remove("OPTSEL_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_csv(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

/// A 40×3 pool with well-spread rows.
fn pool_csv() -> String {
    let mut s = String::from("a,b,c\n");
    for i in 0..40 {
        let t = i as f64;
        writeln_row(&mut s, &[(0.7 * t).sin() + 0.1 * t, (1.3 * t).cos(), 1.0 + (t * 0.37).sin().powi(3)]);
    }
    s
}

fn writeln_row(s: &mut String, row: &[f64]) {
    let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
    s.push_str(&cells.join(","));
    s.push('\n');
}

#[test]
fn greedy_on_identity_selects_everything_with_unit_ratio() {
    let dir = TempDir::new().unwrap();
    let design = write_csv(&dir, "id.csv", "1,0,0\n0,1,0\n0,0,1\n");
    let out = dir.path().join("sel.csv");
    let run = optsel(&[
        "select",
        "--design",
        design.to_str().unwrap(),
        "--k",
        "3",
        "--method",
        "greedy",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), "index,multiplicity\n0,1\n1,1\n2,1\n");
    let side = read_json(&dir.path().join("sel.json"));
    assert!((num(&side["ratio"]) - 1.0).abs() < 1e-9);
    assert!((num(&side["objective"]) - 3.0).abs() < 1e-12);
    assert!(side["wall_time_s"].is_number());
}

#[test]
fn every_method_respects_the_certificate_and_reruns_are_identical() {
    let dir = TempDir::new().unwrap();
    let design = write_csv(&dir, "pool.csv", &pool_csv());
    let methods = ["sampling-soft", "sampling-hard", "greedy", "fedorov", "uniform", "leverage", "plength"];
    for method in methods {
        let modes: &[&str] =
            if method.starts_with("sampling") { &["with-rep", "without-rep"] } else { &["without-rep"] };
        for mode in modes {
            let mut bytes = Vec::new();
            for run in 0..2 {
                let out = dir.path().join(format!("{method}-{mode}-{run}.csv"));
                let res = optsel(&[
                    "select",
                    "--design",
                    design.to_str().unwrap(),
                    "--k",
                    "10",
                    "--method",
                    method,
                    "--mode",
                    mode,
                    "--seed",
                    "7",
                    "--strict-repro",
                    "--out",
                    out.to_str().unwrap(),
                ]);
                assert_eq!(code(&res), 0, "{method} {mode}: {}", String::from_utf8_lossy(&res.stderr));
                let side_path = out.with_extension("json");
                let side = read_json(&side_path);
                assert!(num(&side["ratio"]) >= 1.0 - 1e-6, "{method} {mode}: {side}");
                assert!(side.get("wall_time_s").is_none());
                bytes.push((fs::read(&out).unwrap(), fs::read(&side_path).unwrap()));
            }
            assert_eq!(bytes[0], bytes[1], "{method} {mode} is not reproducible");
        }
    }
}

#[test]
fn glm_and_prediction_transforms_run() {
    let dir = TempDir::new().unwrap();
    let design = write_csv(&dir, "pool.csv", &pool_csv());
    let pilot = write_csv(&dir, "pilot.csv", "beta\n0.5\n-0.25\n0.1\n");
    let z = write_csv(&dir, "z.csv", "1,0,1\n0,1,1\n1,1,0\n2,-1,1\n");
    let out = dir.path().join("glm.csv");
    let d = design.to_str().unwrap();
    let o = out.to_str().unwrap();
    for extra in [
        vec!["--glm", "logistic", "--pilot", pilot.to_str().unwrap()],
        vec!["--glm", "poisson", "--pilot", pilot.to_str().unwrap()],
        vec!["--predict-on", z.to_str().unwrap()],
    ] {
        let mut args = vec!["select", "--design", d, "--k", "8", "--method", "greedy", "--out", o];
        args.extend(extra);
        let res = optsel(&args);
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
        assert!(num(&read_json(&out.with_extension("json"))["ratio"]) >= 1.0 - 1e-6);
    }
    let res = optsel(&["select", "--design", d, "--k", "8", "--method", "greedy", "--out", o, "--glm", "logistic"]);
    assert_eq!(code(&res), 1);
}

#[test]
fn ragged_input_is_a_domain_failure_with_its_line() {
    let dir = TempDir::new().unwrap();
    let design = write_csv(&dir, "bad.csv", "1,2\n3\n");
    let out = dir.path().join("sel.csv");
    let res = optsel(&[
        "select",
        "--design",
        design.to_str().unwrap(),
        "--k",
        "2",
        "--method",
        "greedy",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 2);
    let err: Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "ragged-rows");
    assert!(err["error"]["message"].as_str().unwrap().contains("line 2"));
    assert_eq!(read_json(&out.with_extension("json"))["error"]["kind"], "ragged-rows");
    assert!(!out.exists());
}

#[test]
fn header_and_dos_line_endings_are_accepted() {
    let dir = TempDir::new().unwrap();
    let design = write_csv(&dir, "dos.csv", "x,y\r\n1,0\r\n0,1\r\n1,1\r\n");
    let res = optsel(&["certificate", "--design", design.to_str().unwrap(), "--k", "2"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let cert: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(cert["n"], 3);
    assert!(num(&cert["certificate"]) > 0.0);
}

#[test]
fn numerical_failures_exit_two() {
    let dir = TempDir::new().unwrap();
    let design = write_csv(&dir, "rank1.csv", "1,2\n2,4\n3,6\n");
    let out = dir.path().join("w.csv");
    let res = optsel(&["solve", "--design", design.to_str().unwrap(), "--k", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    let err: Value = serde_json::from_slice(&res.stderr).unwrap();
    assert!(err["error"]["kind"].is_string());
    let nonfinite = write_csv(&dir, "nan.csv", "1,0\nnan,1\n");
    let res = optsel(&["certificate", "--design", nonfinite.to_str().unwrap(), "--k", "2"]);
    assert_eq!(code(&res), 2);
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&optsel(&["certificate", "--design", missing.to_str().unwrap(), "--k", "2"])), 2);
}

#[test]
fn usage_errors_exit_one() {
    let bad: &[&[&str]] = &[
        &["benchmark", "--spec", "t:3", "--n", "100", "--p", "5", "--budgets", "10", "--trials", "0"],
        &["benchmark", "--spec", "gauss:1", "--n", "100", "--p", "5", "--budgets", "10", "--trials", "1"],
        &["benchmark", "--spec", "t:3", "--p", "5", "--budgets", "10", "--trials", "1"],
        &["benchmark", "--spec", "t:3", "--n", "100", "--p", "5", "--budgets", "10:5:1", "--trials", "1"],
        &["benchmark", "--spec", "t:3", "--n", "100", "--p", "5", "--budgets", "10", "--trials", "1", "--strict-repro"],
        &["select", "--design", "x.csv", "--k", "3", "--method", "greedy", "--mode", "with-rep", "--out", "o.csv"],
        &["select", "--design", "x.csv", "--k", "3", "--method", "uniform", "--strict-repro", "--out", "o.csv"],
        &["select", "--k", "3"],
        &["frobnicate"],
    ];
    for args in bad {
        assert_eq!(code(&optsel(args)), 1, "{args:?}");
    }
    assert_eq!(code(&optsel(&["--help"])), 0);
}

#[test]
fn benchmark_writes_a_report_and_a_median_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let args = [
        "benchmark",
        "--spec",
        "skewed:2",
        "--n",
        "200",
        "--p",
        "4",
        "--budgets",
        "8:16:8",
        "--trials",
        "3",
        "--seed",
        "5",
        "--strict-repro",
        "--threads",
        "2",
        "--out",
        out.to_str().unwrap(),
    ];
    let res = optsel(&args);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table = String::from_utf8(res.stdout.clone()).unwrap();
    assert!(table.contains("median F(S; X)") && table.contains("L5* greedy") && table.contains("k=16"));
    let first = fs::read(&out).unwrap();
    let report = read_json(&out);
    assert_eq!(report["meta"]["budgets"], serde_json::json!([8, 16]));
    assert_eq!(report["cells"].as_array().unwrap().len(), 12);
    assert!(report["cells"][0]["trial_stats"].get("wall_time_s").is_none());
    for cell in report["cells"].as_array().unwrap() {
        assert!(num(&cell["trial_stats"]["min_certificate_ratio"]) >= 1.0 - 1e-6);
    }

    // One worker or two, the report is the same.
    let res = Command::new(env!("CARGO_BIN_EXE_optsel")).args(args).env("OPTSEL_THREADS", "1").output().unwrap();
    assert_eq!(code(&res), 0);
    assert_eq!(fs::read(&out).unwrap(), first);
    assert_eq!(res.stdout, table.into_bytes());
}

#[test]
fn bad_thread_env_is_a_usage_error() {
    let res = Command::new(env!("CARGO_BIN_EXE_optsel"))
        .args(["benchmark", "--spec", "t:3", "--n", "50", "--p", "3", "--budgets", "6", "--trials", "1"])
        .env("OPTSEL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&res), 1);
}

#[test]
fn cpu_bench_prints_coefficient_medians() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cpu.json");
    let res =
        optsel(&["cpu-bench", "--budgets", "20,30", "--trials", "5", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table = String::from_utf8(res.stdout).unwrap();
    assert!(table.contains("k = 20") && table.contains("|db4|") && table.contains("L6 fedorov"));
    let report = read_json(&out);
    assert_eq!(report["cells"][0]["trial_stats"]["coefficient_error"].as_array().unwrap().len(), 4);
}

#[test]
fn support_study_fits_the_excess() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("support.json");
    let res = optsel(&[
        "support-study",
        "--spec",
        "t:3",
        "--n",
        "300",
        "--p-values",
        "3:7:1",
        "--k-per-p",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let study = read_json(&out);
    for pt in study["points"].as_array().unwrap() {
        assert!(pt["support"].as_u64().unwrap() <= pt["bound"].as_u64().unwrap());
    }
    assert!(String::from_utf8(res.stdout).unwrap().contains("excess ~"));
}
