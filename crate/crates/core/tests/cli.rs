use std::fs;
use std::path::Path;
use std::process::{Command, Output};

mod common;
use common::{chain_frequency, scan_finite};

fn pathfinder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathfinder"))
        .args(args)
        .env_remove("PATHFINDER_WORKERS")
        .output()
        .expect("spawn pathfinder")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(pathfinder(&["--help"]).status.code(), Some(0));
    assert_eq!(pathfinder(&["--version"]).status.code(), Some(0));
    assert_eq!(pathfinder(&["continue", "--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec![],
        vec!["frobnicate"],
        vec!["continue", "--model", "vmtruss", "-L", "-1", "-N", "3"],
        vec!["continue", "--model", "vmtruss", "-L", "0.1", "-N", "0"],
        vec!["continue", "--model", "nope", "-L", "0.1", "-N", "3"],
        vec!["static", "--model", "vmtruss", "--set", "ea=abc"],
        vec!["static"],
        vec!["uniaxial", "--material", "/nonexistent/material.kv"],
    ] {
        let o = pathfinder(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn continue_writes_path_csv() {
    let o = pathfinder(&["continue", "--model", "vmtruss", "--stepper", "crisfield", "-L", "0.05", "-N", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("step,lambda,u_0,u_1,stability,dl\n"));
    assert_eq!(rows(&text).len(), 11);
    scan_finite(&text).unwrap();
}

#[test]
fn modal_chain_frequencies() {
    let o = pathfinder(&["modal", "--model", "chain", "--n", "5", "--count", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("mode,omega_squared,omega,phi_0,"));
    let r = rows(&text);
    assert_eq!(r.len(), 3);
    for (k, row) in r.iter().enumerate() {
        assert!((row[2] - chain_frequency(5, 1.0, 1.0, k + 1)).abs() <= 1e-8);
    }
}

#[test]
fn uniaxial_from_material_file() {
    let dir = tempfile::tempdir().unwrap();
    let mat = dir.path().join("nh.kv");
    fs::write(&mat, "model = NH\nE = 3\nnu = 0.5\n").unwrap();
    let out = dir.path().join("curve.csv");
    let o = pathfinder(&[
        "uniaxial",
        "--material",
        mat.to_str().unwrap(),
        "--samples",
        "20",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("lambda,lambda3,sigma,J\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 20);
    assert_eq!(r[0][0], 1.0);
    assert_eq!(r[19][0], 12.5);
    for row in r {
        // μ = 1 for E = 3, ν = ½: σ = μ(λ² − 1/λ)
        assert!((row[1] - row[0].powf(-0.5)).abs() <= 1e-12);
        assert!((row[2] - (row[0] * row[0] - 1.0 / row[0])).abs() <= 1e-9 * row[2].abs().max(1.0));
    }
}

#[test]
fn model_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("spring.kv");
    fs::write(&f, "model = spring\nk = 4  # stiffer\n").unwrap();
    let o = pathfinder(&["static", "--model-file", f.to_str().unwrap(), "--set", "f=2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&stdout(&o))[0][1], 0.5);
}

#[test]
fn json_output_parses() {
    let o = pathfinder(&["continue", "--model", "spring", "-L", "0.1", "-N", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    let o = pathfinder(&["static", "--model", "membrane", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "Converged");
}

#[test]
fn workers_env_does_not_change_apalm_output() {
    let run = |workers: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_pathfinder"))
            .args(["apalm", "--model", "vmtruss", "-L", "0.05", "-N", "30", "--max-level", "2"])
            .env("PATHFINDER_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
    };
    let one = run("1");
    assert!(one.starts_with("step,lambda,u_0,u_1,stability,dl,level,interval_id\n"));
    assert_eq!(one, run("8"));
}

fn check_partial(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.lines().count() >= 2, "{text}");
    scan_finite(&text).unwrap();
}

#[test]
fn poisoned_runs_exit_two_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let o = out.to_str().unwrap();
    for args in [
        vec!["static", "--model", "spring", "--set", "f=10", "--poison", "2"],
        vec!["continue", "--model", "vmtruss", "-L", "0.05", "-N", "100", "--poison", "0.3"],
    ] {
        let mut a = args.clone();
        a.extend(["-o", o]);
        let res = pathfinder(&a);
        assert_eq!(res.status.code(), Some(2), "{args:?}");
        check_partial(&out);
        fs::remove_file(&out).unwrap();
    }
}

#[test]
fn spline_demo_writes_map() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("map.csv");
    let o = pathfinder(&["spline-demo", "--samples", "11", "--map", map.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let samples = stdout(&o);
    assert_eq!(samples.lines().next().unwrap().split(',').count(), 19);
    let r = rows(&samples);
    for row in &r {
        let sum: f64 = row[1..].iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }
    assert!(fs::read_to_string(&map).unwrap().starts_with("row,col,value\n"));
}
