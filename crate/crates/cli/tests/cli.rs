use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn plauth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plauth")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = plauth(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn manifest(out: &Path) -> Value {
    let mut side = out.as_os_str().to_owned();
    side.push(".json");
    serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap()
}

/// `key=value` fields of the solve summary line.
fn field(line: &str, key: &str) -> String {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
        .to_string()
}

fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

#[test]
fn solve_identity_n64_converges_quickly() {
    let line = ok(&["solve", "--n", "64", "--rho", "0.1"]);
    assert_eq!(field(&line, "converged"), "true");
    assert!(field(&line, "iterations").parse::<usize>().unwrap() < 200);
    assert!(num(&field(&line, "residual")) <= 1e-7);
    let d = num(&field(&line, "D*"));
    assert!((num(&field(&line, "J*")) - d - 128.0).abs() < 1e-9);
}

const COPY_OF_X: &str = "kind = explicit
# z is an exact copy of x
[Kxx] 1 1
1
[Kxy] 1 1
0.9
[Kxz] 1 1
1
[Kyy] 1 1
1
[Kyz] 1 1
0.9
[Kzz] 1 1
1
";

#[test]
fn solve_writes_a_reloadable_solution_and_manifest() {
    let dir = TempDir::new().unwrap();
    let scenario = write(&dir, "copy.txt", COPY_OF_X);
    let out = path(&dir, "sol.txt");
    let line = ok(&["solve", "--scenario", &scenario, "--out", out.to_str().unwrap()]);
    assert!(num(&field(&line, "D*")).abs() < 1e-10, "{line}");

    let text = std::fs::read_to_string(&out).unwrap();
    let record = plauth::format::SolutionRecord::<f64>::parse(&text).unwrap();
    assert!(record.d_star.abs() < 1e-10);
    assert!(record.config.iter().any(|(k, v)| k == "max_iter" && v == "200"));

    let m = manifest(&out);
    assert_eq!(m["command"], "solve");
    assert_eq!(m["config"]["scenario"]["source"], "file");
    assert_eq!(m["config"]["solver"]["rel_tol"], 1e-10);
    assert_eq!(m["summary"]["d_star"].as_f64().unwrap(), record.d_star);
}

#[test]
fn invalid_scenario_exits_1_naming_the_invariant() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.txt", &COPY_OF_X.replace("[Kzz] 1 1\n1", "[Kzz] 1 1\n0"));
    let out = plauth(&["solve", "--scenario", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Kzz is not positive definite"), "{err}");

    let garbled = write(&dir, "garbled.txt", "kind = explicit\n[Kxx] 1 1\n1 2\n");
    let out = plauth(&["solve", "--scenario", &garbled]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(plauth(&["solve", "--n", "2"]).status.code(), Some(1));
    assert_eq!(plauth(&["sweep", "--n", "two"]).status.code(), Some(1));
    assert_eq!(plauth(&["solve", "--n", "2", "--rho", "0.3", "--relaxation", "2"]).status.code(), Some(1));
}

#[test]
fn region_at_zero_divergence_is_the_diagonal() {
    let (header, rows) = csv(&ok(&["region", "--d-star", "0", "--alpha-points", "9"]));
    assert_eq!(header, ["alpha", "beta_low"]);
    assert_eq!(rows.len(), 9);
    for r in rows {
        assert!((num(&r[1]) - (1.0 - num(&r[0]))).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn region_at_ln2_hits_zero_at_one_half() {
    let d = std::f64::consts::LN_2.to_string();
    let (_, rows) = csv(&ok(&["region", "--d-star", &d, "--alpha", "0.25,0.5"]));
    assert_eq!(rows[1][0], "0.5");
    assert!(num(&rows[1][1]).abs() < 1e-9);
    assert!(num(&rows[0][1]) > 0.0);
}

#[test]
fn region_boundaries_are_ordered_by_rho() {
    let curves: Vec<Vec<f64>> = ["0.1", "0.3", "0.5", "0.7"]
        .iter()
        .map(|rho| {
            let (_, rows) = csv(&ok(&["region", "--n", "1", "--rho", rho, "--alpha-points", "19"]));
            rows.iter().map(|r| num(&r[1])).collect()
        })
        .collect();
    for w in curves.windows(2) {
        // weaker side information leaves a larger divergence and a lower boundary
        assert!(w[0].iter().zip(&w[1]).all(|(lo, hi)| lo <= hi));
        assert!(w[0].iter().zip(&w[1]).any(|(lo, hi)| lo < hi));
    }
}

#[test]
fn sweep_doubles_with_n_and_falls_with_rho() {
    let (header, rows) = csv(&ok(&["sweep", "--n", "1,2,4,8", "--rho", "0.1,0.3,0.5"]));
    assert_eq!(header.join(","), "n,rho,J_cf,J_iter,D_iter,eta,projected,iters");
    assert_eq!(rows.len(), 12);
    let d = |n: &str, rho: &str| num(&rows.iter().find(|r| r[0] == n && r[1] == rho).unwrap()[4]);
    for rho in ["0.1", "0.3", "0.5"] {
        for (a, b) in [("1", "2"), ("2", "4"), ("4", "8")] {
            assert!((d(b, rho) - 2.0 * d(a, rho)).abs() <= 1e-8 * d(b, rho));
        }
    }
    assert!(d("4", "0.1") > d("4", "0.3") && d("4", "0.3") > d("4", "0.5"));
    assert!(rows.iter().all(|r| num(&r[5]) >= 0.0));
}

#[test]
fn wishart_is_byte_identical_for_a_seed_and_thread_count_independent() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, seed: &str, jobs: &str| {
        let out = path(&dir, name);
        ok(&["wishart", "--n", "2,4", "--trials", "12", "--seed", seed, "--jobs", jobs, "--out", out.to_str().unwrap()]);
        (std::fs::read(&out).unwrap(), manifest(&out))
    };
    let (a, ma) = run("a.csv", "9", "1");
    let (b, mb) = run("b.csv", "9", "4");
    let (c, _) = run("c.csv", "10", "4");
    assert_eq!(a, b);
    assert_eq!(ma, mb);
    assert_ne!(a, c);

    let text = String::from_utf8(a).unwrap();
    let (header, rows) = csv(&text);
    assert_eq!(header.join(","), "n,trial,feasible_cf,J_cf,J_iter,D_iter,eta,iters");
    assert_eq!(rows.len(), 24);
    assert_eq!(ma["config"]["seed"], 9);
    let cdf = ma["summary"][0]["d_star_cdf"].as_array().unwrap();
    assert_eq!(cdf.len(), 12);
    assert!(cdf.windows(2).all(|w| w[0].as_f64() <= w[1].as_f64()));
}

#[test]
fn wishart_n8_is_never_feasible() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "w8.csv");
    ok(&["wishart", "--n", "8", "--trials", "100", "--max-iter", "20", "--out", out.to_str().unwrap()]);
    let m = manifest(&out);
    assert_eq!(m["summary"][0]["feasible"], 0);
    assert_eq!(m["summary"][0]["feasible_pct"], 0.0);
    let (_, rows) = csv(&std::fs::read_to_string(&out).unwrap());
    assert!(rows.iter().all(|r| r[2] == "false" && num(&r[6]) >= 0.0));
}

fn saved_solution(dir: &TempDir, name: &str, extra: &[&str]) -> String {
    let scenario = write(dir, "w4.txt", "kind = wishart\nn = 4\nseed = 17\n");
    let out = path(dir, name);
    let mut args = vec!["solve", "--scenario", &scenario, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args);
    out.to_str().unwrap().to_string()
}

fn perturb_report(solution: &str, extra: &[&str]) -> Value {
    let mut args = vec!["perturb", "--solution", solution];
    args.extend_from_slice(extra);
    serde_json::from_str(&ok(&args)).unwrap()
}

#[test]
fn perturbing_a_converged_solution_finds_no_improvement() {
    let dir = TempDir::new().unwrap();
    let sol = saved_solution(&dir, "conv.txt", &["--max-iter", "50000", "--relaxation", "0.7"]);
    let record = plauth::format::SolutionRecord::<f64>::parse(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    assert!(record.converged);
    let r = perturb_report(&sol, &["--trials", "1000"]);
    assert_eq!(r["improved"], false);
    assert_eq!(r["deltas"].as_array().unwrap().len(), 1000);

    let zero = perturb_report(&sol, &["--trials", "10", "--scale", "0"]);
    assert!(zero["deltas"].as_array().unwrap().iter().all(|d| d.as_f64() == Some(0.0)));
}

#[test]
fn perturbing_a_truncated_solution_improves_it() {
    let dir = TempDir::new().unwrap();
    let sol = saved_solution(&dir, "trunc.txt", &["--max-iter", "2"]);
    let r = perturb_report(&sol, &["--trials", "1000", "--seed", "3"]);
    assert_eq!(r["improved"], true);
    assert!(r["max_improvement"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sweep.toml", "n = [1, 2]\nrho = [0.2]\nsigma = 0.8\nmax_iter = 300\n");
    let out = path(&dir, "s.csv");
    ok(&["sweep", "--config", &cfg, "--n", "4", "--out", out.to_str().unwrap()]);
    let m = manifest(&out);
    assert_eq!(m["config"]["n"], serde_json::json!([4]));
    assert_eq!(m["config"]["rho"], serde_json::json!([0.2]));
    assert_eq!(m["config"]["sigma"], 0.8);
    assert_eq!(m["config"]["solver"]["max_iter"], 300);

    let typo = write(&dir, "typo.toml", "sigmaa = 0.8\n");
    let out = plauth(&["sweep", "--config", &typo]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigmaa"));
}

#[test]
fn manifest_goes_to_stderr_without_out() {
    let out = plauth(&["region", "--d-star", "0.5", "--alpha-points", "3"]);
    assert!(out.status.success());
    let m: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(m["command"], "region");
    assert_eq!(m["config"]["alpha"].as_array().unwrap().len(), 3);
}
