use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nccap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nccap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = nccap(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("missing {key} in {v}"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn chain_file(dir: &TempDir, name: &str, kernel: [[f64; 2]; 2]) -> String {
    let body = serde_json::json!({ "order": 1, "contexts": ["0", "1"], "kernel": kernel });
    write(dir, name, &body.to_string())
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn golden_mean_capacity() {
    let v = json(&["capacity", "--rll", "1,inf"]);
    assert!((num(&v, "c0") - 0.4812118250).abs() <= 1e-9);
    assert!((num(&v, "c_log") + 0.5527864045).abs() <= 1e-9);
    assert!((num(&v, "rho0") - 0.6180339887498949).abs() <= 1e-12);
    let bits = json(&["capacity", "--rll", "1,inf", "--bits"]);
    assert!((num(&bits, "c0") - num(&v, "c0") / 2f64.ln()).abs() <= 1e-15);
    let only = json(&["capacity", "--rll", "1,inf", "--noiseless"]);
    assert!(only.get("c_log").is_none());
    assert_eq!(num(&only, "c0"), num(&v, "c0"));
}

#[test]
fn short_runs_have_no_log_term() {
    let v = json(&["capacity", "--rll", "1,2"]);
    assert!(num(&v, "c_log").abs() <= 1e-12);
}

#[test]
fn unconstrained_capacity() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.txt", "# nothing is forbidden\n");
    let v = json(&["capacity", "--forbidden", &empty]);
    assert_eq!(num(&v, "c0"), 2f64.ln());
    assert!((num(&v, "c_log") + 1.0).abs() <= 1e-12);
    assert!((num(&v, "c_lin") + 1.0).abs() <= 1e-12);
}

#[test]
fn forbidden_file_matches_run_length_flag() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "rll13.txt", "11\n0000\n");
    let a = json(&["capacity", "--forbidden", &f]);
    let b = json(&["capacity", "--rll", "1,3"]);
    for key in ["c0", "c_log", "c_lin"] {
        assert!((num(&a, key) - num(&b, key)).abs() <= 1e-12, "{key}");
    }
}

#[test]
fn coefficient_reports() {
    let dir = TempDir::new().unwrap();
    let p = 0.25;
    let iso = chain_file(&dir, "iso.json", [[1.0 - p, p], [1.0, 0.0]]);
    let v = json(&["coeffs", "--chain", &iso]);
    assert!((num(&v, "f") - 0.35).abs() <= 1e-12);
    assert!(v["stability"]["f_spread"].as_f64().unwrap() <= 1e-12);
    assert!(v["stability"]["g_spread"].as_f64().unwrap() <= 1e-12);

    let pos = chain_file(&dir, "pos.json", [[0.3, 0.7], [0.6, 0.4]]);
    assert_eq!(num(&json(&["coeffs", "--chain", &pos]), "f"), 0.0);

    let golden = json(&["coeffs", "--rll", "1,inf"]);
    assert!((num(&golden, "f") - 0.4472135955).abs() <= 1e-9);
}

#[test]
fn entropy_sandwich_is_ordered() {
    let v = json(&["entropy", "--rll", "1,3", "--eps", "0.01", "-n", "8"]);
    assert!(num(&v, "lower") <= num(&v, "upper"));
    assert!((num(&v, "asymptotic") - num(&v, "upper")).abs() <= 1e-3);
}

#[test]
fn bounds_bracket_the_expansion() {
    let v = json(&["bounds", "--rll", "1,inf", "--eps", "0.001"]);
    let (lo, up, x) = (num(&v, "lower"), num(&v, "upper"), num(&v, "expansion"));
    assert!(lo <= up);
    assert!((0.5 * (lo + up) - x).abs() <= 1e-4);
}

fn stdout(args: &[&str]) -> String {
    let out = nccap(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn sweep_csv_shape_and_stability() {
    let args = ["sweep", "--rll", "1,inf", "-n", "10"];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("eps,lower,upper,asymptotic,residual"));
    let rows: Vec<Vec<f64>> = lines
        .clone()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.len(), 5);
        assert!((0.5 * (r[1] + r[2]) - r[3] - r[4]).abs() <= 1e-15);
    }
    assert!(lines.any(|l| l.starts_with("# fit a=")));
}

#[test]
fn fair_coin_sweep_is_flat() {
    let dir = TempDir::new().unwrap();
    let coin = chain_file(&dir, "coin.json", [[0.5, 0.5], [0.5, 0.5]]);
    let text = stdout(&["sweep", "--chain", &coin, "-n", "6"]);
    for l in text.lines().skip(1).filter(|l| !l.starts_with('#')) {
        let residual: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(residual.abs() <= 1e-12, "{l}");
    }
    let fit = text.lines().find(|l| l.starts_with("# fit")).unwrap();
    let coef = |name: &str| -> f64 {
        let tail = &fit[fit.find(&format!("{name}=")).unwrap() + 2..];
        tail.split_whitespace().next().unwrap().parse().unwrap()
    };
    assert!(coef("b").abs() <= 1e-9 && coef("c").abs() <= 1e-9, "{fit}");
}

#[test]
fn verify_passes() {
    let out = nccap(&["verify"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], Value::Bool(true));
    assert!(v["checks"].as_array().unwrap().len() >= 5);
}

#[test]
fn taylor_report() {
    let v = json(&["taylor"]);
    assert!((v["taylor"]["k1"].as_f64().unwrap() + 3.065).abs() <= 0.005);
    assert!(nccap(&["taylor", "--alpha", "5"]).status.code() == Some(2));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let bad_word = write(&dir, "bad.txt", "1a\n");
    let reducible = write(&dir, "red.txt", "10\n");
    let bad_kernel = chain_file(&dir, "k.json", [[0.3, 0.8], [0.6, 0.4]]);
    let missing = dir.path().join("missing.txt");
    let cases: Vec<Vec<&str>> = vec![
        vec!["capacity", "--forbidden", &bad_word],
        vec!["capacity", "--forbidden", &reducible],
        vec!["capacity", "--forbidden", missing.to_str().unwrap()],
        vec!["capacity", "--rll", "1,x"],
        vec!["capacity", "--rll", "1,2", "--forbidden", &bad_word],
        vec!["capacity"],
        vec!["coeffs", "--chain", &bad_kernel],
        vec!["sweep", "--rll", "1,inf", "--eps", "0,0.01"],
        vec!["entropy", "--rll", "1,inf", "--eps", "0.7"],
    ];
    for args in cases {
        assert_eq!(code(&nccap(&args)), 2, "{args:?}");
    }
    assert!(!Path::new(&missing).exists());
}

#[test]
fn resource_limits_exit_with_three() {
    let out = nccap(&["entropy", "--rll", "1,inf", "--eps", "0.1", "-n", "40"]);
    assert_eq!(code(&out), 3);
}
