use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_subexp"))
}

fn model(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const EXP: &str = r#"{"variant":"compound_poisson","params":{"mass":1,"jump":{"law":"exponential","rate":1}}}"#;
const STABLE: &str = r#"{"variant":"stable","params":{"alpha":0.5}}"#;

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[test]
fn tail_reproduces_stable_display_differences() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "stable.json", STABLE);
    let out = run(&["tail", "--model", s(&m), "--t", "10,20,40"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# model_hash: ") && text.contains("# version: "));
    let r = rows(&text);
    let a: f64 = 0.5;
    let display = |t: f64| -a / (2.0 * (1.0 - a)) * t.ln() - (1.0 - a) * t.powf(1.0 / (1.0 - a));
    for w in r.windows(2) {
        let d = (w[1][1] - w[0][1]) - (display(w[1][0]) - display(w[0][0]));
        assert!(d.abs() < 1e-8, "{d}");
    }
}

#[test]
fn validate_unit_model_passes_with_unit_constant() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "exp.json", EXP);
    let out_path = dir.path().join("report.json");
    let out = run(&["validate", "--model", s(&m), "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let explicit = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "c_I_explicit").unwrap();
    let c = explicit["detail"]["c_hat"].as_f64().unwrap();
    assert!((0.8..1.25).contains(&c), "{c}");
    assert!((explicit["detail"]["known"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn validate_failure_exits_three() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "stable.json", STABLE);
    // Far below the asymptotic regime the slope law cannot hold.
    let out = run(&["validate", "--model", s(&m), "--n", "200000", "--t", "1.2,1.6,2.0", "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_and_domain_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "exp.json", EXP);
    assert_eq!(run(&["moments", "--model", s(&m), "--n", "0"]).status.code(), Some(1));
    assert_eq!(run(&["phi", "--model", s(&m), "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["phi", "--model", "/nonexistent/model.json"]).status.code(), Some(1));
    let bad = model(&dir, "bad.json", r#"{"variant":"stable","params":{"alpha":1.5}}"#);
    assert_eq!(run(&["phi", "--model", s(&bad)]).status.code(), Some(1));
    assert_eq!(run(&["phi", "--model", s(&m), "--t", "1,x"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--model", s(&m), "--eps", "0.1"]).status.code(), Some(1));
}

#[test]
fn resource_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "stable.json", STABLE);
    let out = run(&["simulate", "--model", s(&m), "--n", "10", "--eps", "1e-14"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn moments_table() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "exp.json", EXP);
    let out = run(&["moments", "--model", s(&m), "--n", "4"]);
    let r = rows(&String::from_utf8(out.stdout).unwrap());
    // E[Iⁿ] = (n+1)! for φ(x) = x/(1+x).
    for (row, want) in r.iter().zip([2.0, 6.0, 24.0, 120.0]) {
        assert!((row[1] / want - 1.0).abs() < 1e-12);
    }
}

#[test]
fn outputs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "stable.json", STABLE);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let raw = dir.path().join("raw.bin");
    for p in [&a, &b] {
        let out = run(&["simulate", "--model", s(&m), "--n", "5000", "--seed", "9", "--out", s(p), "--raw", s(&raw)]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let samples = subexp::monte_carlo::read_samples(std::fs::File::open(&raw).unwrap()).unwrap();
    assert_eq!(samples.len(), 5000);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(summary["summary"]["seed"], 9);
    let mean = summary["summary"]["moment_estimates"][0]["mean"].as_f64().unwrap();
    assert!((mean - samples.iter().sum::<f64>() / 5000.0).abs() < 1e-12);
}

#[test]
fn density_reports_small_residual() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "exp.json", EXP);
    let out_path = dir.path().join("k.csv");
    let out = run(&["density", "--model", s(&m), "--grid", "256", "--out", s(&out_path)]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let residual: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# integral_equation_residual: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual < 0.05);
    // f′(x) = x/(1+x) for this model.
    for r in rows(&text).iter().take(100) {
        assert!((r[1] - r[0] / (1.0 + r[0])).abs() < 1e-4, "{r:?}");
    }
}

#[test]
fn phi_and_psi_tables() {
    let dir = TempDir::new().unwrap();
    let m = model(&dir, "stable.json", STABLE);
    let r = rows(&String::from_utf8(run(&["phi", "--model", s(&m), "--t", "4"]).stdout).unwrap());
    assert_eq!(r[0], vec![4.0, 2.0, 0.25, 0.5]);
    let r = rows(&String::from_utf8(run(&["psi", "--model", s(&m), "--t", "3"]).stdout).unwrap());
    assert!((r[0][1] - 9.0).abs() < 1e-9 && (r[0][2] - 6.0).abs() < 1e-9);
}
