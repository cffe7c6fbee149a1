use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use noncausal::timeseries::load_series;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noncausal"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const MODEL: &str = "r = 1\ns = 1\nlag_coeffs = 0.5\nlead_coeffs = 0.7\ndof = 5\nscale = 1\n";

fn bounds_csv(lo: &str, hi: &str) -> String {
    let mut s = String::from("date,lower,upper\n");
    for i in 0..600 {
        s.push_str(&format!("{}-{:02},{lo},{hi}\n", 2000 + i / 12, i % 12 + 1));
    }
    s
}

fn simulated(dir: &Path) {
    write(dir, "model.txt", MODEL);
    let out = run(dir, &["simulate", "--model", "model.txt", "--n", "300", "--seed", "3", "--out", "sim"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn csv_cell(path: &Path, column: &str) -> String {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    row[header.iter().position(|h| *h == column).unwrap()].to_string()
}

#[test]
fn help_and_bad_usage() {
    assert_eq!(code(&bin().arg("--help").output().unwrap()), 0);
    assert_eq!(code(&bin().arg("frobnicate").output().unwrap()), 2);
    assert_eq!(code(&bin().args(["fit"]).output().unwrap()), 2);
}

#[test]
fn missing_input_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["fit", "--data", "nope.csv"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn transform_thirteen_months_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("date,price\n");
    for i in 0..13 {
        text.push_str(&format!("{}-{:02},{}\n", 2000 + i / 12, i % 12 + 1, 100 + i));
    }
    write(dir.path(), "prices.csv", &text);
    let out = run(dir.path(), &["transform", "--input", "prices.csv", "--out", "t"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let y = load_series(dir.path().join("t/transformed.csv"), "y").unwrap();
    assert_eq!(y.values().len(), 1);
    assert!((y.values()[0] - 100.0 * (112.0f64 / 100.0).ln()).abs() < 1e-9);

    write(dir.path(), "short.csv", "date,price\n2000-01,1\n2000-02,2\n");
    assert_eq!(code(&run(dir.path(), &["transform", "--input", "short.csv", "--out", "t2"])), 2);
}

#[test]
fn simulate_is_deterministic_and_iid_when_both_polynomials_vanish() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "iid.txt", "r = 0\ns = 0\nlag_coeffs =\nlead_coeffs =\ndof = 4\nscale = 1\n");
    for out in ["a", "b"] {
        let o = run(dir.path(), &["simulate", "--model", "iid.txt", "--n", "100000", "--seed", "9", "--start", "0001-01", "--out", out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let too_long = run(dir.path(), &["simulate", "--model", "iid.txt", "--n", "100000", "--seed", "9", "--out", "c"]);
    assert_eq!(code(&too_long), 2);
    let a = fs::read(dir.path().join("a/series.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/series.csv")).unwrap());

    let y = load_series(dir.path().join("a/series.csv"), "y").unwrap();
    let mut v = y.values().to_vec();
    v.sort_by(f64::total_cmp);
    let t = StudentsT::new(0.0, 1.0, 4.0).unwrap();
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = t.cdf(*x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.628 / n.sqrt(), "KS distance {d}");
}

#[test]
fn forecast_manifest_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    simulated(p);
    write(p, "bounds.csv", &bounds_csv("-1", "1"));
    let out = run(
        p,
        &["forecast", "--data", "sim/series.csv", "--model", "model.txt", "--bounds", "bounds.csv", "--seed", "5", "--n", "20000", "--out", "f1"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(p.join("f1/run_manifest.txt")).unwrap();
    assert!(manifest.contains("command = forecast"));
    assert!(manifest.contains("seed = 5"));
    assert!(manifest.contains("sha256.forecast.csv = "));

    let out = run(p, &["forecast", "--config", "f1/run_manifest.txt", "--out", "f2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(p.join("f1/forecast.csv")).unwrap(), fs::read(p.join("f2/forecast.csv")).unwrap());

    let out = run(p, &["forecast", "--config", "f1/run_manifest.txt", "--seed", "6", "--out", "f3"]);
    assert_eq!(code(&out), 0);
    assert_ne!(fs::read(p.join("f1/forecast.csv")).unwrap(), fs::read(p.join("f3/forecast.csv")).unwrap());

    write(p, "bad.txt", "command = forecast\nnot-a-flag = 1\n");
    assert_eq!(code(&run(p, &["forecast", "--config", "bad.txt"])), 2);
}

#[test]
fn infinite_bounds_give_certainty() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    simulated(p);
    write(p, "bounds.csv", &bounds_csv("-inf", "inf"));
    for method in ["LLS", "GJ", "SIR"] {
        let out = run(
            p,
            &[
                "forecast", "--data", "sim/series.csv", "--model", "model.txt", "--bounds", "bounds.csv", "--seed", "1", "--method",
                method, "--n", "5000", "--k", "2000", "--s-resample", "500", "--out", method,
            ],
        );
        assert_eq!(code(&out), 0, "{method}: {}", String::from_utf8_lossy(&out.stderr));
        let prob: f64 = csv_cell(&p.join(method).join("forecast.csv"), "p_in_bounds").parse().unwrap();
        assert!((prob - 1.0).abs() < 1e-9, "{method}: {prob}");
    }
}

#[test]
fn lls_horizon_beyond_truncation_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    simulated(p);
    write(p, "bounds.csv", &bounds_csv("-1", "1"));
    let out = run(
        p,
        &["forecast", "--data", "sim/series.csv", "--model", "model.txt", "--bounds", "bounds.csv", "--seed", "1", "--horizon", "30"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn fit_writes_model_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    simulated(p);
    let out = run(p, &["fit", "--data", "sim/series.csv", "--r", "1", "--s", "1", "--out", "fit"]);
    assert!(matches!(code(&out), 0 | 3), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["model.txt", "residuals.csv", "diagnostics.csv", "fit_report.txt", "run_manifest.txt"] {
        assert!(p.join("fit").join(f).exists(), "{f}");
    }
    let m = noncausal::process::AnyModel::load(p.join("fit/model.txt")).unwrap();
    assert_eq!((m.base().r(), m.base().s()), (1, 1));
}

#[test]
fn credibility_single_class_is_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write(p, "idx.csv", "date,value\n2010-01,0.9\n2010-02,0.2\n2010-03,0.5\n");
    write(p, "all_in.csv", "date,outcome\n2010-01,in\n2010-02,in\n2010-03,in\n");
    write(p, "mixed.csv", "date,outcome\n2010-01,in\n2010-02,out\n2010-03,in\n");
    assert_eq!(code(&run(p, &["credibility", "--index", "idx.csv", "--outcomes", "all_in.csv"])), 5);

    let out = run(p, &["credibility", "--index", "idx.csv", "--outcomes", "mixed.csv", "--out", "c"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let auc = fs::read_to_string(p.join("c/auc_report.csv")).unwrap();
    assert!(auc.contains("idx,1,3,0"), "{auc}");
    let roc = fs::read_to_string(p.join("c/roc.csv")).unwrap();
    assert!(roc.lines().nth(1).unwrap().ends_with(",1,1"));
    assert!(roc.lines().last().unwrap().ends_with(",0,0"));
}

#[test]
fn backtest_writes_indices() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    simulated(p);
    write(p, "bounds.csv", &bounds_csv("-1", "1"));
    let out = run(
        p,
        &[
            "backtest", "--data", "sim/series.csv", "--bounds", "bounds.csv", "--from", "2023-01", "--to", "2023-04", "--horizons", "1,3",
            "--methods", "LLS,SIR", "--seed", "2", "--n", "5000", "--k", "2000", "--s-resample", "500", "--n-starts", "2", "--out", "bt",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["backtest.csv", "failures.csv", "index_LLS_h1.csv", "index_LLS_h3.csv", "index_SIR_h1.csv", "index_SIR_h3.csv"] {
        assert!(p.join("bt").join(f).exists(), "{f}");
    }
    let rows = fs::read_to_string(p.join("bt/backtest.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 4 * 4);
}
