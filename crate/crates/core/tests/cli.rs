mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hill-octant")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bands_for_zero_potential() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "zero.json", "{}");
    let out = dir.path().join("out");
    let o = run(&["bands", "--potential", &pot, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("bands.csv")), ["n", "lambda_minus", "lambda_plus", "mu", "nu", "sign", "xi1", "xi2"]);
    let r = rows(&out.join("bands.csv"));
    assert_eq!(r.len(), 5);
    for (i, row) in r.iter().enumerate() {
        let e = (PI * (i + 1) as f64).powi(2);
        for col in 1..=4 {
            assert!((row[col].parse::<f64>().unwrap() - e).abs() < 1e-8);
        }
        assert_eq!(row[5], "");
    }
    let sweep = rows(&out.join("discriminant.csv"));
    assert!(sweep.len() > 100);
    for row in sweep {
        let l: f64 = row[0].parse().unwrap();
        let f: f64 = row[1].parse().unwrap();
        let expect = if l >= 0.0 { l.sqrt().cos() } else { (-l).sqrt().cosh() };
        assert!((f - expect).abs() < 1e-10 * expect.abs().max(1.0));
    }
}

#[test]
fn bands_for_mathieu_match_hill_matrix() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "m.json", r#"{"fourier":[{"k":1,"cos":2.0,"sin":0.0}]}"#);
    let out = dir.path().join("out");
    let o = run(&["bands", "--potential", &pot, "--out", out.to_str().unwrap(), "--N", "4"]);
    assert_eq!(code(&o), 0);
    let (_, edges) = common::hill_edges(&common::mathieu(), 4);
    for (row, (lo, hi)) in rows(&out.join("bands.csv")).iter().zip(edges) {
        assert!(common::rel(row[1].parse().unwrap(), lo) < 1e-6);
        assert!(common::rel(row[2].parse().unwrap(), hi) < 1e-6);
    }
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "m.json", r#"{"fourier":[{"k":1,"cos":2.0,"sin":1.0},{"k":2,"cos":-3.0,"sin":0.5}]}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run(&["bands", "--potential", &pot, "--out", a.to_str().unwrap(), "--jobs", "1"])), 0);
    assert_eq!(code(&run(&["bands", "--potential", &pot, "--out", b.to_str().unwrap(), "--jobs", "2"])), 0);
    for f in ["bands.csv", "discriminant.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_spec_names_the_field() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "bad.json", r#"{"fourier":[{"k":1,"cosine":2.0}]}"#);
    let o = run(&["bands", "--potential", &pot, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cosine"));
}

#[test]
fn invalid_flags_exit_2() {
    assert_eq!(code(&run(&["bands", "--N", "0", "--potential", "x.json"])), 2);
    assert_eq!(code(&run(&["halfsolid", "--tau-grid", "5:1:4", "--potential", "x.json"])), 2);
    assert_eq!(code(&run(&["cluster", "--kappa", "0.5", "--N", "3", "--potential", "x.json"])), 2);
    assert_eq!(code(&run(&["nonsense"])), 2);
}

#[test]
fn halfsolid_outputs() {
    let dir = TempDir::new().unwrap();
    let zero = write(dir.path(), "zero.json", "{}");
    let out = dir.path().join("z");
    let o = run(&["halfsolid", "--potential", &zero, "--tau-grid", "1e2:1e4:4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(rows(&out.join("halfsolid.csv")).is_empty());
    assert_eq!(header(&out.join("halfsolid.csv")), ["tau", "j", "mu_j_tau", "w_residual"]);
    assert!(json(&out.join("rate.json"))["slope"].is_null());

    let o = run(&["halfsolid", "--potential", &zero, "--tau-grid", "1e2:1e3:2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let pot = write(dir.path(), "zero.json", "{}");
    let out = dir.path().join("c");
    let cfg = write(dir.path(), "run.json", &format!(r#"{{"potential":"{pot}","N":2,"out":"{}"}}"#, out.display()));
    assert_eq!(code(&run(&["bands", "--config", &cfg, "--N", "3"])), 0);
    assert_eq!(rows(&out.join("bands.csv")).len(), 3);

    let bad = write(dir.path(), "bad.json", r#"{"gamam":3}"#);
    assert_eq!(code(&run(&["bands", "--config", &bad])), 2);
}

#[test]
fn design_small_gap() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d");
    let o = run(&["design", "--N", "1", "--gamma", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("design_report.json"));
    assert!(report["report"]["residual"].as_f64().unwrap() < 1e-4);
    let o = run(&["bands", "--potential", out.join("potential.json").to_str().unwrap(), "--N", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = &rows(&out.join("bands.csv"))[0];
    let len = r[2].parse::<f64>().unwrap() - r[1].parse::<f64>().unwrap();
    assert!((len - 20.0).abs() < 20.0 * 1e-4);

    let o = run(&["design", "--N", "3", "--gamma", "20", "--basis", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

/// The full pipeline on the N = 3, ϰ = 0.05 model potential. In two
/// dimensions the centres of `K_n^e` fall outside the separating intervals,
/// so `cluster` reports the failure and exits 5; in three dimensions the
/// counts are right but `I_n` sits closer than `2ϰ` to the a.c. spectrum.
#[test]
fn designed_pipeline() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("m");
    let o = run(&["design", "--N", "3", "--kappa", "0.05", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pot = out.join("potential.json");
    let pot = pot.to_str().unwrap();
    let gamma = 4.0 * PI * PI * 16.0 / 0.05;

    assert_eq!(code(&run(&["bands", "--potential", pot, "--N", "3", "--out", out.to_str().unwrap()])), 0);
    for row in rows(&out.join("bands.csv")) {
        let len = row[2].parse::<f64>().unwrap() - row[1].parse::<f64>().unwrap();
        assert!((len - gamma).abs() < 1e-4 * gamma);
        assert_eq!(row[5], "1");
    }

    let o = run(&["cluster", "--potential", pot, "--N", "3", "--kappa", "0.05", "--dim", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    let report = json(&out.join("cluster_report.json"));
    assert_eq!(report["all_checks_pass"], Value::Bool(false));
    for c in report["counts"].as_array().unwrap() {
        assert!(c["distance_to_ac"].as_f64().unwrap() >= 0.1);
    }
    assert!(!rows(&out.join("cluster_spectrum.csv")).is_empty());

    let o = run(&["cluster", "--potential", pot, "--N", "3", "--kappa", "0.05", "--dim", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 5);
    let report = json(&out.join("cluster_report.json"));
    let counts: Vec<u64> = report["counts"].as_array().unwrap().iter().take(3).map(|c| c["count"].as_u64().unwrap()).collect();
    assert_eq!(counts, [1, 3, 6]);
}
