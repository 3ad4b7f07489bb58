use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn distal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distal")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/configs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn triangularize_identity() {
    let path = configs().join("identity.json");
    let o = distal(&["triangularize", "--matrix", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let id = serde_json::json!({"rows": 3, "cols": 3, "entries": [["1","0","0"],["0","1","0"],["0","0","1"]]});
    assert_eq!(v["P"], id);
    assert_eq!(v["B"], id);
    assert_eq!(v["sign"], 1);
}

#[test]
fn triangularize_reports_compute_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "cat.json", "[[2, 1], [1, 1]]");
    let o = distal(&["triangularize", "--matrix", &m]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("E_COMPUTE:"));

    let bad = write(dir.path(), "bad.json", r#"{"rows": 1, "cols": 1, "entries": [[1]], "extra": 0}"#);
    let o = distal(&["triangularize", "--matrix", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("E_VALIDATION:"));
}

#[test]
fn unknown_subcommand_is_a_validation_error() {
    let o = distal(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("E_VALIDATION:"));
    let o = distal(&["mobius", "--n", "ten", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn orbit_and_classify() {
    let flow = configs().join("shear_flow.json");
    let o = distal(&["orbit", "--flow", flow.to_str().unwrap(), "--x", "0,0", "--at", "2,3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["polynomials"]["polys"][0], serde_json::json!(["0", "-1/4", "1/4"]));
    assert_eq!(v["points"][0]["x"], serde_json::json!(["1/2", "0"]));
    assert_eq!(v["points"][1]["x"], serde_json::json!(["1/2", "1/2"]));

    let o = distal(&["classify", "--flow", flow.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["class"], "distal_unipotent");

    let dir = tempfile::tempdir().unwrap();
    let cat = write(dir.path(), "cat.json", "[[2, 1], [1, 1]]");
    let v: Value = serde_json::from_slice(&distal(&["classify", "--flow", &cat]).stdout).unwrap();
    assert_eq!(v["class"], "positive_entropy");
}

#[test]
fn non_triangular_orbit_is_conjugated() {
    let dir = tempfile::tempdir().unwrap();
    let flow = write(dir.path(), "flow.json", r#"{"A": [[3, -1], [4, -1]], "a": ["1/3", "0"]}"#);
    let o = distal(&["orbit", "--flow", &flow, "--x", "1/2,1/5", "--at", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    // T^7 x by hand iteration of x -> A x + a mod 1.
    let (mut x, mut y) = ((1i64, 2i64), (1i64, 5i64));
    for _ in 0..7 {
        // Work over the common denominator 30.
        let (xn, yn) = (x.0 * 30 / x.1, y.0 * 30 / y.1);
        let nx = (3 * xn - yn + 10).rem_euclid(30);
        let ny = (4 * xn - yn).rem_euclid(30);
        x = (nx, 30);
        y = (ny, 30);
    }
    let reduce = |(n, d): (i64, i64)| {
        let g = num_gcd(n, d);
        if n == 0 { "0".to_string() } else { format!("{}/{}", n / g, d / g) }
    };
    assert_eq!(v["points"][0]["x"], serde_json::json!([reduce(x), reduce(y)]));
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { num_gcd(b, a % b) }
}

#[test]
fn mobius_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mu.bin");
    let o = distal(&["mobius", "--n", "12", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let bytes: Vec<i8> = fs::read(&out).unwrap().into_iter().map(|b| b as i8).collect();
    assert_eq!(bytes, vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mertens"], -2);
}

#[test]
fn geometric_sequence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let o = distal(&["seq", "geometric", "--alpha", "1/3", "--beta", "2", "--n", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,re,im");
    assert_eq!(lines.len(), 5);
    // 2^n / 3 mod 1 alternates 2/3, 1/3.
    let theta = |line: &str| {
        let parts: Vec<f64> = line.split(',').skip(1).map(|s| s.parse().unwrap()).collect();
        parts[1].atan2(parts[0]).rem_euclid(std::f64::consts::TAU) / std::f64::consts::TAU
    };
    assert!((theta(lines[1]) - 2.0 / 3.0).abs() < 1e-12);
    assert!((theta(lines[2]) - 1.0 / 3.0).abs() < 1e-12);

    let o = distal(&["seq", "geometric", "--alpha", "1", "--beta", "1/2", "--n", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn disjoint_example_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("disjoint_mobius_shear.json");
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("s{workers}.csv"));
        let o = distal(&["disjoint", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push((fs::read(&out).unwrap(), fs::read(out.with_extension("meta.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,re,im,mag");
    assert_eq!(lines.len(), 5);
    let mag = |i: usize| lines[i].split(',').nth(3).unwrap().parse::<f64>().unwrap();
    assert!(mag(4) < 0.05 && mag(4) < mag(2));
    let meta: Value = serde_json::from_slice(&outputs[0].1).unwrap();
    assert_eq!(meta["seed"], 2024);
}

#[test]
fn weyl_and_probe_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "w.json",
        r#"{"weights": {"kind": "constant", "re": 1}, "phase": {"rational": ["0", "1/2"]}, "checkpoints": [10, 100]}"#,
    );
    let out = dir.path().join("w.csv");
    let o = distal(&["weyl", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("N,re,im,mag\n10,0e0,"), "{csv}");

    let cfg = write(
        dir.path(),
        "p.json",
        r#"{"weights": {"kind": "mobius"}, "order": 2, "mode": "strong", "samples": 3, "t_grid": ["0", 0.25], "checkpoints": [1000, 5000], "seed": 1}"#,
    );
    let out = dir.path().join("p.csv");
    let o = distal(&["probe", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let families: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(families, ["weak", "weak", "weak_k1", "weak_k1", "weak_k2", "weak_k2", "strong", "strong"]);

    let bad = write(dir.path(), "bad.json", r#"{"weights": {"kind": "mobius"}, "order": 1, "checkpoints": [10], "colour": 1}"#);
    let o = distal(&["probe", "--config", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let bad = write(dir.path(), "bad2.json", r#"{"weights": {"kind": "mobius"}, "order": 1, "checkpoints": [10, 5]}"#);
    let o = distal(&["probe", "--config", &bad, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exact_engine_rejects_irrational_shift() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
        "weights": {"kind": "mobius"},
        "flow": {"A": [[1, 1], [0, 1]], "a": ["0", "sqrt(2)"]},
        "f": {"dim": 2, "terms": [{"k": [1, 0], "re": 1}]},
        "x": [0, 0],
        "checkpoints": [100]
    }"#;
    let cfg = write(dir.path(), "d.json", body);
    let out = dir.path().join("d.csv");
    let o = distal(&["disjoint", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exact engine unavailable"));
    let cfg = write(dir.path(), "f.json", &body.replace("\"checkpoints\"", "\"engine\": \"float\", \"checkpoints\""));
    let o = distal(&["disjoint", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn selftest_passes() {
    let o = distal(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).lines().all(|l| l.ends_with(": ok")));
}
