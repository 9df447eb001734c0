use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn asip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asip"))
        .args(args)
        .output()
        .expect("run asip")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sha256_dir(dir: &Path, suffix: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .map(|p| {
            let digest = Sha256::digest(fs::read(&p).unwrap());
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            (p.file_name().unwrap().to_string_lossy().into_owned(), hex)
        })
        .collect();
    out.sort();
    out
}

#[test]
fn rates_reports_theta_bar() {
    let out = asip(&["rates", "--p", "4", "--delta", "2"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let theta = v["theta_bar"].as_f64().unwrap();
    assert!((theta - 26.0 / 53.0).abs() < 1e-12, "{theta}");
    assert!(v["delta_bar"].is_null());
}

#[test]
fn rates_with_epsilon_reports_delta_bar() {
    let out = asip(&["rates", "--p", "4", "--delta", "2", "--epsilon", "0.05"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["delta_bar"].as_f64().unwrap() - 10.6).abs() < 1e-12);
}

#[test]
fn rates_rejects_small_p() {
    let out = asip(&["rates", "--p", "2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("p must exceed 2"));
}

#[test]
fn unparseable_flags_exit_2() {
    assert_eq!(code(&asip(&["rates", "--p", "four"])), 2);
    assert_eq!(code(&asip(&["verify", "--n", "-3"])), 2);
    assert_eq!(code(&asip(&["frobnicate"])), 2);
}

#[test]
fn simulate_writes_one_file_per_replica() {
    let tmp = TempDir::new().unwrap();
    let run = |name: &str| {
        let dir = tmp.path().join(name);
        let out = asip(&[
            "simulate",
            "--n",
            "64",
            "--replicas",
            "2",
            "--dim",
            "4",
            "--seed",
            "7",
            "--output",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        dir
    };
    let a = run("a");
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, vec!["manifest.json", "path_7_0.csv", "path_7_1.csv"]);

    let text = fs::read_to_string(a.join("path_7_0.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,c1,c2,c3,c4"));
    assert_eq!(lines.count(), 64);

    let b = run("b");
    assert_eq!(sha256_dir(&a, ".csv"), sha256_dir(&b, ".csv"));
}

#[test]
fn manifest_records_resolved_run() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("m");
    let out = asip(&[
        "simulate",
        "--n",
        "8192",
        "--replicas",
        "1",
        "--dim",
        "2",
        "--output",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let m: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config"]["dim"], 2);
    assert_eq!(m["config"]["n"], 8192);
    // auto C* for the shipped FAR model: 2(1 − α1)(p′ − ½)/(−ln λ1)
    let expected = 2.0 * 0.5 * 2.5 / 2f64.ln();
    assert!((m["cstar"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert_eq!(m["plans"].as_array().unwrap().len(), 7);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 32, "replicas": 3, "dim": 3, "seed": 11}"#).unwrap();
    let dir = tmp.path().join("o");
    let out = asip(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--replicas",
        "1",
        "--output",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let m: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["replicas"], 1);
    assert_eq!(m["config"]["n"], 32);
    assert_eq!(m["config"]["seed"], 11);
    assert!(dir.join("path_11_0.csv").exists());
}

#[test]
fn bad_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"replica": 3}"#).unwrap();
    let out = asip(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let missing = tmp.path().join("absent.json");
    assert_eq!(
        code(&asip(&["verify", "--config", missing.to_str().unwrap()])),
        2
    );
    assert_eq!(code(&asip(&["verify", "--suite", "no-such-suite"])), 2);
    assert_eq!(code(&asip(&["verify", "--model", "arma"])), 2);
}

#[test]
fn nonstationary_model_exits_2() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("o");
    let out = asip(&["verify", "--c", "1.0", "--output", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(!dir.exists());
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let dir = blocker.join("sub");
    let args = ["--suite", "rates", "--output", dir.to_str().unwrap()];
    assert_eq!(code(&asip(&[&["verify"][..], &args].concat())), 3);
    let sim = [
        "simulate",
        "--n",
        "16",
        "--replicas",
        "1",
        "--output",
        dir.to_str().unwrap(),
    ];
    assert_eq!(code(&asip(&sim)), 3);
}

#[test]
fn verify_is_identical_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let run = |workers: &str| {
        let dir = tmp.path().join(format!("w{workers}"));
        let out = asip(&[
            "verify",
            "--suite",
            "moment-slope",
            "--suite",
            "clt",
            "--dim",
            "4",
            "--replicas",
            "500",
            "--n",
            "4096",
            "--workers",
            workers,
            "--output",
            dir.to_str().unwrap(),
        ]);
        assert!(code(&out) <= 1, "{}", String::from_utf8_lossy(&out.stderr));
        dir
    };
    let one = run("1");
    let three = run("3");
    let a = sha256_dir(&one, ".json");
    let b = sha256_dir(&three, ".json");
    // manifests differ only in the recorded worker count
    let verdicts = |v: &[(String, String)]| -> Vec<(String, String)> {
        v.iter()
            .filter(|(n, _)| n != "manifest.json")
            .cloned()
            .collect()
    };
    assert_eq!(verdicts(&a).len(), 2);
    assert_eq!(verdicts(&a), verdicts(&b));
    assert_eq!(sha256_dir(&one, ".csv"), sha256_dir(&three, ".csv"));
}

#[test]
fn shipped_default_config_passes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("out");
    let cfg = configs_dir().join("default.json");
    let out = asip(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        dir.to_str().unwrap(),
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        code(&out),
        0,
        "{stdout}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(stdout.lines().count(), 9);
    assert!(!stdout.contains("FAIL"));

    let report = asip(&["report", dir.to_str().unwrap()]);
    assert_eq!(code(&report), 0);
    let md = String::from_utf8_lossy(&report.stdout);
    assert!(md.contains("| independence-gap | diagnostic | DIAGNOSTIC |"));
    assert!(md.contains("8 of 8 hard suites passed."));
}

#[test]
fn shipped_markov_config_runs_from_any_directory() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("out");
    let cfg = configs_dir().join("markov.json");
    let out = Command::new(env!("CARGO_BIN_EXE_asip"))
        .current_dir(tmp.path())
        .args([
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--suite",
            "rates",
            "--suite",
            "merl-domination",
            "--output",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let m: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    // −ln SLEM of the two-state chain is ln 2
    let expected = 2.0 * 0.5 * 2.5 / 2f64.ln();
    assert!((m["cstar"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn mixing_table_for_two_state_chain() {
    let out = asip(&["mixing", "--max-n", "10"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,beta_exact,beta_bound"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    for row in &rows {
        // P^n − Π has entries ±2^{-n-1}; β(n) = Σ_i π_i Σ_j |·| / 2 = 2^{-n-1}
        let exact = 0.5f64.powi(row[0] as i32 + 1);
        assert!((row[1] - exact).abs() <= 1e-15 * exact, "{row:?}");
    }
}

#[test]
fn mixing_reads_chain_file_and_rejects_bad_one() {
    let tmp = TempDir::new().unwrap();
    let chain = configs_dir().join("two_state_chain.json");
    let csv = tmp.path().join("beta.csv");
    let out = asip(&[
        "mixing",
        "--chain",
        chain.to_str().unwrap(),
        "--max-n",
        "5",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 6);

    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"P": [[0.5, 0.6], [0.5, 0.5]], "V": [1, 1], "gamma": 0.5, "K": 1, "C": [0], "embed": [[1], [0]]}"#,
    )
    .unwrap();
    assert_eq!(
        code(&asip(&["mixing", "--chain", bad.to_str().unwrap()])),
        2
    );
}

#[test]
fn report_flags_failed_hard_suite() {
    let tmp = TempDir::new().unwrap();
    let verdict = serde_json::json!({
        "suite": "moment-slope",
        "params": {},
        "statistics": {"slope": 0.3},
        "pass": false,
        "hard": true
    });
    fs::write(tmp.path().join("moment-slope.json"), verdict.to_string()).unwrap();
    let out = asip(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let md = String::from_utf8_lossy(&out.stdout);
    assert!(md.contains("| moment-slope | hard | FAIL | slope=0.300000 |"));
    assert!(md.contains("0 of 1 hard suites passed."));
}
