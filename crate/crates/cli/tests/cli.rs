use std::fs;
use std::path::Path;
use std::process::Command;

use inclusion_degree_cli::{run, ProblemConfig};

fn indeg(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_indeg")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn degree_value(stdout: &str) -> i64 {
    let line = stdout.lines().find(|l| l.starts_with("deg(")).unwrap();
    line.rsplit(' ').next().unwrap().parse().unwrap()
}

#[test]
fn config_round_trip_through_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ProblemConfig::default();
    let path = write_config(tmp.path(), "p.toml", &cfg.to_toml().unwrap());
    assert_eq!(ProblemConfig::load(Path::new(&path)).unwrap(), cfg);
}

#[test]
fn check_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, stdout) = indeg(&["check"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("transversal: yes, dim ker = 1"));

    let toy = write_config(tmp.path(), "toy.toml", "[grid]\nn = 16\noperator = \"even_kernel_toy\"\n");
    assert_eq!(indeg(&["check", "-c", &toy]).0, 1);

    let bad = write_config(tmp.path(), "bad.toml", "[grid\nn = ");
    assert_eq!(indeg(&["check", "-c", &bad]).0, 2);
    let unknown = write_config(tmp.path(), "unknown.toml", "[grid]\nsize = 16\n");
    assert_eq!(indeg(&["check", "-c", &unknown]).0, 2);
}

#[test]
fn degree_at_window_edges() {
    let (code, out) = indeg(&["degree", "--lambda", "-0.5"]);
    assert_eq!(code, 0);
    assert_eq!(degree_value(&out), 1);
    let (_, out) = indeg(&["degree", "--lambda", "0.5"]);
    assert_eq!(degree_value(&out), -1);
    let (_, out) = indeg(&["degree", "--lambda", "0"]);
    assert_eq!(degree_value(&out), 0);
    assert!(out.contains("operator is singular"));
}

#[test]
fn usage_errors() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    assert_eq!(run(["indeg", "degree", "--lambda", "nan"], &mut out, &mut err), 2);
    assert_eq!(run(["indeg", "approx", "--eps", "-1"], &mut out, &mut err), 2);
    assert_eq!(run(["indeg", "frobnicate"], &mut out, &mut err), 2);
}

#[test]
fn approx_certifies_selections() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    assert_eq!(run(["indeg", "approx", "--eps", "1e-10"], &mut out, &mut err), 0);
}

#[test]
fn trace_default_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let (code, stdout) = indeg(&["trace", "-o", dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let s = summary(&dir);
    assert_eq!(s["nonempty_all"], true);
    let point = s["detected_bifurcation"].as_i64().unwrap();
    assert!(point == 1 || point == -1);

    let gamma = fs::read_to_string(dir.join("gamma.csv")).unwrap();
    assert_eq!(gamma.lines().next().unwrap(), "eps,s,lambda,residual,u_dist_to_S0,converged");
    let sigma = fs::read_to_string(dir.join("sigma.csv")).unwrap();
    assert!(sigma.starts_with("eps,s,lambda,u0,"));

    // the summary reports the same degrees as the degree command at -b and +b
    let b = s["b"].as_f64().unwrap();
    let jump: Vec<i64> = s["degree_jump"].as_array().unwrap().iter().map(|v| v.as_i64().unwrap()).collect();
    let minus = degree_value(&indeg(&["degree", "--lambda", &format!("{}", -b)]).1);
    let plus = degree_value(&indeg(&["degree", "--lambda", &format!("{b}")]).1);
    assert_eq!(jump, vec![minus, plus]);
}

#[test]
fn trace_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", "[grid]\nn = 16\n[rectangle]\neps_count = 5\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(indeg(&["trace", "-c", &cfg, "-o", a.to_str().unwrap()]).0, 0);
    assert_eq!(indeg(&["trace", "-c", &cfg, "-o", b.to_str().unwrap()]).0, 0);
    for file in ["gamma.csv", "sigma.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn trace_unreachable_rectangle_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "far.toml", "[grid]\nn = 16\n[rectangle]\na = 10.0\neps_count = 3\n");
    let dir = tmp.path().join("out");
    let (code, stdout) = indeg(&["trace", "-c", &cfg, "-o", dir.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stdout.contains("FAIL"));
    assert_eq!(summary(&dir)["nonempty_all"], false);
}

#[test]
fn trace_at_zero_eps_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "zero.toml", "[grid]\nn = 16\n[rectangle]\neps_grid = [0.0]\n");
    let dir = tmp.path().join("out");
    assert_eq!(indeg(&["trace", "-c", &cfg, "-o", dir.to_str().unwrap()]).0, 0);
    let gamma = fs::read_to_string(dir.join("gamma.csv")).unwrap();
    for row in gamma.lines().skip(1) {
        let lambda: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(lambda, 0.0);
    }
}
