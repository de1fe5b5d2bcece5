use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use amp_select::cli::write_data;
use amp_select::prior::presets;
use amp_select::sim::{generate, ExperimentConfig};
use amp_select::state_evolution::SeModel;

fn ampsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ampsel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_instance(dir: &Path, p: usize, header: bool) -> (String, String, Vec<f64>) {
    let cfg = ExperimentConfig::new("cli", presets::gaussian_signal(), 1.0, 1.0, p);
    let d = generate(&cfg, 0);
    let data = dir.join("data.csv");
    write_data(&data, &d.problem).unwrap();
    if !header {
        let text = fs::read_to_string(&data).unwrap();
        let body: Vec<&str> = text.lines().skip(1).collect();
        fs::write(&data, body.join("\n")).unwrap();
    }
    let truth = dir.join("truth.csv");
    let body: String = d.beta.iter().map(|b| format!("{b}\n")).collect();
    fs::write(&truth, format!("beta\n{body}")).unwrap();
    (data.to_string_lossy().into(), truth.to_string_lossy().into(), d.beta)
}

#[test]
fn se_solve_is_self_consistent() {
    let o = ampsel(&["se", "solve", "--prior", "gaussian", "--sigma", "1", "--delta", "2", "--lambda", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let (alpha, tau) = (v["alpha"].as_f64().unwrap(), v["tau"].as_f64().unwrap());
    assert!(v["residuals"]["tau"].as_f64().unwrap() < 1e-8);
    assert!(v["residuals"]["lambda"].as_f64().unwrap() < 1e-8);

    let model = SeModel::new(presets::gaussian_signal(), 1.0, 2.0).unwrap();
    assert!((model.tau_map(alpha, tau) - tau * tau).abs() < 1e-8);
    assert!((model.lambda_at(alpha, tau) - 1.0).abs() < 1e-8);
}

#[test]
fn prior_from_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("prior.json");
    fs::write(&p, r#"{"epsilon":0.1,"components":[{"w":1.0,"gaussian":{"mean":3.5,"var":1.0}}]}"#).unwrap();
    let a = ampsel(&["se", "solve", "--prior", p.to_str().unwrap(), "--delta", "2", "--lambda", "1"]);
    let b = ampsel(&["se", "solve", "--prior", "gaussian", "--delta", "2", "--lambda", "1"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn missing_prior_exits_with_usage() {
    let o = ampsel(&["se", "solve", "--delta", "2", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("Usage") && err.contains("--prior"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(ampsel(&["se", "solve", "--bogus"]).status.code(), Some(2));
    assert_eq!(ampsel(&["lasso", "fit", "--data", "/nonexistent.csv", "--lambda", "1"]).status.code(), Some(2));
    assert_eq!(ampsel(&["se", "solve", "--prior", "/nonexistent.json", "--delta", "1", "--lambda", "1"]).status.code(), Some(2));
    assert_eq!(ampsel(&["--threads", "0", "se", "solve", "--prior", "gaussian", "--delta", "1", "--lambda", "1"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_one() {
    let o = ampsel(&["se", "solve", "--prior", "gaussian", "--delta", "2", "--lambda", "1e7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn eb_curve_has_200_rows() {
    let o = ampsel(&["theory", "curve", "--method", "eb", "--prior", "gaussian", "--delta", "2", "--lambda", "1", "--grid", "200"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "threshold,tpp,fdp");
    assert_eq!(lines.len(), 201);
    let tpp: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(tpp.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn lasso_and_tlasso_curves() {
    for method in ["lasso", "tlasso"] {
        let o = ampsel(&["theory", "curve", "--method", method, "--prior", "point", "--delta", "1", "--lambda", "1", "--grid", "20"]);
        assert!(o.status.success(), "{method}");
        assert_eq!(stdout(&o).lines().count(), 21);
    }
}

#[test]
fn theory_lfdr_columns() {
    let o = ampsel(&["theory", "lfdr", "--prior", "bimodal-gaussian", "--delta", "1", "--lambda", "1", "--x-grid", "-3:3:7"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,lfdr,lfdr_hat_limit"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert!(r[2] >= r[1] && r[1] >= 0.0 && r[1] <= 1.0);
    }
}

#[test]
fn optimal_lambda_kfold() {
    let o = ampsel(&["se", "optimal-lambda", "--prior", "gaussian", "--delta", "1", "--kfold", "10"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["effective_delta"].as_f64().unwrap() - 0.9).abs() < 1e-12);
    let narrow = ampsel(&["se", "optimal-lambda", "--prior", "gaussian", "--delta", "1", "--lambda-lo", "0.1", "--lambda-hi", "0.5"]);
    assert_eq!(narrow.status.code(), Some(1));
}

#[test]
fn lasso_fit_with_and_without_header() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _, _) = write_instance(dir.path(), 80, true);
    let a = ampsel(&["lasso", "fit", "--data", &data, "--lambda", "0.5"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let (data, _, _) = write_instance(dir.path(), 80, false);
    let b = ampsel(&["lasso", "fit", "--data", &data, "--lambda", "0.5"]);
    assert_eq!(stdout(&a), stdout(&b));
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["beta"].as_array().unwrap().len(), 80);
    assert!(v["duality_gap"].as_f64().unwrap() <= 1e-8 * (1.0 + v["objective"].as_f64().unwrap()));
}

#[test]
fn eb_select_emits_path_in_selection_order() {
    let dir = tempfile::tempdir().unwrap();
    let (data, truth, beta) = write_instance(dir.path(), 200, true);
    let emit = dir.path().join("path.csv");
    let o = ampsel(&["eb", "select", "--data", &data, "--lambda", "1", "--truth", &truth, "--emit", emit.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["estimates"]["tau_hat"].as_f64().unwrap() > 0.0);

    let text = fs::read_to_string(&emit).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,beta_hat,statistic,is_null"));
    let mut last = f64::NEG_INFINITY;
    let mut rows = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        let i: usize = f[0].parse().unwrap();
        let b: f64 = f[1].parse().unwrap();
        let s: f64 = f[2].parse().unwrap();
        assert_ne!(b, 0.0);
        assert!(s >= last);
        last = s;
        assert_eq!(f[3].parse::<bool>().unwrap(), beta[i] == 0.0);
        rows += 1;
    }
    assert_eq!(rows as u64, summary["selected"].as_u64().unwrap());
}

#[test]
fn eb_select_cv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (data, _, _) = write_instance(dir.path(), 100, true);
    let run = |seed: &str| {
        let o = ampsel(&["--seed", seed, "eb", "select", "--data", &data, "--lambda", "cv", "--kfold", "5", "--emit", "-"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    let a = run("3");
    assert_eq!(a, run("3"));
    assert!(a.starts_with("index,beta_hat,statistic,is_null\n"));
}

#[test]
fn lfdr_subcommand_with_truth() {
    let dir = tempfile::tempdir().unwrap();
    let (data, truth, _) = write_instance(dir.path(), 200, true);
    let o = ampsel(&["lfdr", "--data", &data, "--lambda", "1", "--truth", &truth, "--x-grid", "1,2,3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("x,q_hat,lfdr_hat,windowed_fdp\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn tol_config_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tol.json");
    fs::write(&cfg, r#"{"se": {"lambda_search": [0.1, 0.5]}}"#).unwrap();
    let o = ampsel(&["--tol-config", cfg.to_str().unwrap(), "se", "optimal-lambda", "--prior", "gaussian", "--delta", "1"]);
    assert_eq!(o.status.code(), Some(1));
    fs::write(&cfg, "{not json").unwrap();
    let o = ampsel(&["--tol-config", cfg.to_str().unwrap(), "se", "solve", "--prior", "gaussian", "--delta", "1", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sim_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new("cli-run", presets::point_signal(), 1.0, 1.0, 100);
    cfg.replications = 2;
    let path = dir.path().join("config.json");
    fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("runs");
    let o = ampsel(&["--seed", "5", "--threads", "1", "sim", "run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["replications"].as_u64(), Some(2));
    let run = out.join("cli-run");
    for f in ["rep0_eb.csv", "rep1_oracle.csv", "rep1_thresholded_lasso.csv", "summary.json", "curves.svg"] {
        assert!(run.join(f).exists(), "{f}");
    }
}
