use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SET1: &str = r#"{"model": "heston", "kappa": 6.21, "theta": 0.019, "gamma": 0.31, "rho": -0.7, "v0": 0.010201, "T": 1.0, "n": 252, "r": 0.0319}"#;
const SIMPLE: &str = r#"{"model": "heston", "kappa": 11.35, "theta": 0.022, "gamma": 0.618, "rho": -0.64, "v0": 0.04, "T": 1.0, "n": 4, "r": 0.1}"#;
const CONST_VAR: &str = r#"{"model": "heston", "kappa": 1.0, "theta": 0.04, "gamma": 0.0, "rho": 0.0, "v0": 0.04, "T": 1.0, "n": 1, "r": 0.0}"#;

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn varswap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varswap")).args(args).env("RUST_LOG", "info").output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    let prefix = format!("{key}: ");
    text.lines().find_map(|l| l.strip_prefix(&prefix)).unwrap_or_else(|| panic!("no {key} in {text}")).parse().unwrap()
}

#[test]
fn price_set1_daily() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "set1.json", SET1);
    let out = varswap(&["price", "--model", arg(&model)]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!((field(&text, "K_c") - 0.0175859386925).abs() < 1e-12);
    assert!((field(&text, "K_d") - 0.0175956912897).abs() < 1e-12);
    assert!((2.0 * field(&text, "critical_rate") - 0.0176).abs() < 1e-4);
    let log = String::from_utf8(out.stderr).unwrap();
    assert!(log.contains("resolved parameters"), "{log}");
}

#[test]
fn price_simple_returns_in_basis_units() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "simple.json", SIMPLE);
    let out = varswap(&["price", "--model", arg(&model), "--n", "4", "--simple-returns"]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).contains("K_simple_x1e4: 263.2"), "{}", stdout(&out));
}

#[test]
fn price_constant_variance() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "cv.json", CONST_VAR);
    let out = varswap(&["price", "--model", arg(&model), "--n", "1"]);
    assert!(out.status.success());
    assert!((field(&stdout(&out), "K_d") - 0.0404).abs() < 1e-15);
}

#[test]
fn flags_override_file_values() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "cv.json", CONST_VAR);
    let out = varswap(&["price", "--model", arg(&model), "--n", "4", "--T", "2", "--r", "0.03"]);
    let expected = 0.04 + 2.0 * (0.06f64 - 0.04).powi(2) / 16.0;
    assert!((field(&stdout(&out), "K_d") - expected).abs() < 1e-15);
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad_rho = write(&dir, "bad.json", &SET1.replace("-0.7", "2.0"));
    assert_eq!(varswap(&["price", "--model", arg(&bad_rho)]).status.code(), Some(2));
    assert_eq!(varswap(&["check", "--model", arg(&bad_rho)]).status.code(), Some(2));
    let unknown = write(&dir, "unknown.json", &SET1.replace("\"v0\"", "\"x\": 1, \"v0\""));
    assert_eq!(varswap(&["price", "--model", arg(&unknown)]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(varswap(&["price", "--model", arg(&missing)]).status.code(), Some(2));
    let model = write(&dir, "set1.json", SET1);
    assert_eq!(varswap(&["price", "--model", arg(&model), "--r", "-0.01"]).status.code(), Some(2));
    assert_eq!(varswap(&["price"]).status.code(), Some(2));
}

#[test]
fn simple_returns_outside_domain_is_an_error() {
    let dir = TempDir::new().unwrap();
    // 2 kappa theta / gamma^2 < 1
    let model = write(&dir, "h2.json", &SET1.replace("0.31", "1.0"));
    let out = varswap(&["price", "--model", arg(&model), "--simple-returns"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "set1.json", SET1);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = varswap(&[
            "sweep",
            "--model",
            arg(&model),
            "--var",
            "rho",
            "--start",
            "-1",
            "--stop",
            "1",
            "--count",
            "9",
            "--r",
            "0",
            "--out",
            arg(path),
        ]);
        assert!(out.status.success(), "{out:?}");
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,K_d,K_c,gap,a1_prediction");
    assert_eq!(lines.len(), 10);
    // at r = 0 the gap is positive for rho = -1 and changes sign once
    let gaps: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(gaps[0] > 0.0);
    assert_eq!(gaps.windows(2).filter(|w| w[0].signum() != w[1].signum()).count(), 1);
}

#[test]
fn sweep_maturity_with_constant_variance() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "cv.json", &CONST_VAR.replace("\"r\": 0.0", "\"r\": 0.05"));
    let out = varswap(&[
        "sweep",
        "--model",
        arg(&model),
        "--n",
        "4",
        "--var",
        "T",
        "--start",
        "0.5",
        "--stop",
        "4",
        "--count",
        "4",
        "--spacing",
        "log",
    ]);
    assert!(out.status.success(), "{out:?}");
    for line in stdout(&out).lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let expected = cols[0] * (0.1f64 - 0.04).powi(2) / 16.0;
        assert!((cols[3] - expected).abs() <= 1e-12 * expected, "{line}");
    }
}

#[test]
fn sweep_rejects_foreign_parameter() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "set1.json", SET1);
    let out = varswap(&[
        "sweep",
        "--model",
        arg(&model),
        "--var",
        "sigma",
        "--start",
        "0.1",
        "--stop",
        "0.5",
        "--count",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn match_writes_usable_hull_white_file() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "set1.json", SET1);
    let hw = dir.path().join("hw.json");
    let out = varswap(&["match", "--model", arg(&model), "--T", "1", "--out", arg(&hw)]);
    assert!(out.status.success(), "{out:?}");
    assert!((field(&stdout(&out), "sigma") - 0.42).abs() < 0.005);
    let priced = varswap(&["price", "--model", arg(&hw), "--n", "252", "--r", "0.0319"]);
    assert!(priced.status.success(), "{priced:?}");
    assert!((field(&stdout(&priced), "K_c") - 0.0175859386925).abs() < 1e-12);
}

#[test]
fn check_passes_and_fails_with_exit_4() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "set1.json", SET1);
    let base = ["check", "--model", arg(&model), "--n", "12", "--mc-paths", "20000", "--seed", "5"];
    let ok = varswap(&base);
    assert!(ok.status.success(), "{ok:?}");
    assert_eq!(stdout(&ok).lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let strict: Vec<&str> = base.iter().copied().chain(["--max-se", "0"]).collect();
    let fail = varswap(&strict);
    assert_eq!(fail.status.code(), Some(4));
    assert!(stdout(&fail).contains("FAIL monte carlo"));
}

#[test]
fn expand_prints_report() {
    let dir = TempDir::new().unwrap();
    let model = write(&dir, "set1.json", SET1);
    let out = varswap(&["expand", "--model", arg(&model)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["model"], "heston");
    assert!(v["a1"].as_f64().unwrap() > 0.0);
    assert!((v["critical_rate"].as_f64().unwrap() - 0.0088).abs() < 5e-5);
}
