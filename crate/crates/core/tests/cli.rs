use std::path::Path;
use std::process::{Command, Output};

use spectral_lab::cli::parse_args;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectral-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["tail", "--grid", "5:1:1"],
        vec!["tail", "--stat", "smin", "--n", "4", "--grid", "5:1:1", "--trials", "10", "--seed", "1"],
        vec!["tail", "--stat", "smin", "--n", "4", "--grid", "1:2:1", "--trials", "10"],
        vec!["frobnicate"],
        vec!["dist", "--n", "4", "--ell", "2", "--trials", "10", "--seed", "1", "--mode", "sideways"],
    ] {
        let out = lab(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let out = lab(&["tail", "--stat", "smin", "--n", "4", "--grid", "1:2:1", "--trials", "10"]);
    assert!(text(&out.stderr).contains("--seed"));
}

#[test]
fn help_exits_zero() {
    let out = lab(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("tail"));
}

#[test]
fn verify_reports_success() {
    let out = lab(&["verify", "--ensemble", "rademacher", "--n", "6", "--trials", "100", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("all identities passed"));
    let body = text(&out.stdout);
    assert_eq!(body.lines().filter(|l| !l.starts_with('#')).count(), 101);
}

#[test]
fn rii_on_zero_matrix_is_undefined() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("zero.txt");
    std::fs::write(&m, "3\n0,0,0\n0,0,0\n0,0,0\n").unwrap();
    let out_file = dir.path().join("out.csv");
    let out = lab(&["rii", "--matrix", path_str(&m), "--out", path_str(&out_file)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("undefined ratio"));
    assert!(!out_file.exists());
}

#[test]
fn rii_on_identity() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("eye.txt");
    std::fs::write(&m, "4\n1,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n").unwrap();
    let out = lab(&["rii", "--matrix", path_str(&m), "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let body = text(&out.stdout);
    let lines: Vec<&str> = body.lines().collect();
    assert!(lines[0].starts_with("# spectral-lab rii --matrix "));
    assert_eq!(lines[1], "eps,ell,required_size,required_bound,achieved,J");
    assert_eq!(lines[2], "0.5,1,1,5e-1,1e0,0");
}

#[test]
fn tail_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let tail = dir.path().join("tail.csv");
    let out = lab(&[
        "tail", "--stat", "smin", "--n", "8", "--grid", "0.5:2:0.5", "--trials", "4000", "--seed", "3", "--out",
        path_str(&tail),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&tail).unwrap();
    let mut lines = written.lines();
    let header = lines.next().unwrap();
    assert!(lines.next().unwrap().starts_with("# provenance ensemble=gaussian n=8 seed=3"));
    assert_eq!(lines.next().unwrap(), "param,trials,successes,p_hat,ci_lo,ci_hi");
    assert_eq!(lines.count(), 4);

    // The header reproduces the configuration.
    let echoed: Vec<&str> = header.strip_prefix("# spectral-lab ").unwrap().split(' ').collect();
    let config = parse_args(echoed.iter().copied()).unwrap();
    assert_eq!(config.header_line(), header);

    let fit = dir.path().join("fit.csv");
    let out = lab(&["fit", "--in", path_str(&tail), "--out", path_str(&fit)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let fitted = std::fs::read_to_string(&fit).unwrap();
    let rows: Vec<&str> = fitted.lines().collect();
    assert_eq!(rows[1], "c_hat,intercept,r_squared,points_used");
    let c_hat: f64 = rows[2].split(',').next().unwrap().parse().unwrap();
    assert!(c_hat > 0.0);
}

#[test]
fn fit_with_too_few_points_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    std::fs::write(&input, "param,trials,successes,p_hat,ci_lo,ci_hi\n1,10,5,0.5,0,1\n2,10,0,0,0,0.3\n").unwrap();
    let out_file = dir.path().join("fit.csv");
    let out = lab(&["fit", "--in", path_str(&input), "--out", path_str(&out_file)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("insufficient data"));
    assert!(!out_file.exists());
}

#[test]
fn missing_input_is_an_io_error() {
    let out = lab(&["fit", "--in", "/nonexistent/tail.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_tail_runs_are_byte_identical() {
    let args = [
        "tail", "--stat", "cond", "--ensemble", "uniform", "--n", "10", "--grid", "1:5:1", "--trials", "3000", "--seed",
        "77",
    ];
    let a = lab(&args);
    let b = lab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn other_subcommands_run() {
    let out = lab(&["trace", "--n", "20", "--k", "4", "--trials", "20", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let body = text(&out.stdout);
    assert!(body.contains("seed,trial,n,k,ell,triggered,BHS,Mnorm,sellZJ,PBMHS,num_small_dist,v1,v2,v3,v4"));
    assert_eq!(body.lines().count(), 22);

    let out = lab(&["trace", "--n", "20", "--k", "1", "--trials", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("degenerate trace"));

    let out = lab(&["dist", "--n", "30", "--ell", "4", "--mode", "random", "--trials", "200", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).lines().nth(2).unwrap().starts_with("30,4,random,200,"));

    let out = lab(&["opnorm", "--ensemble", "rademacher", "--n", "30", "--multiple", "0", "--trials", "50", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(text(&out.stdout).lines().nth(2).unwrap(), "rademacher,30,0,50,0");
}
