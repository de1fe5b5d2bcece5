//! Drives the command-line interface in-process: writes a data file, fits
//! the Lasso, runs EB selection and prints a theory curve.
//!
//! cargo run --release --example command_line

use amp_select::cli;
use amp_select::prior::presets;
use amp_select::sim::{generate, ExperimentConfig};

pub fn run_example() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("amp-select-cli");
    std::fs::create_dir_all(&dir)?;
    let cfg = ExperimentConfig::new("cli", presets::gaussian_signal(), 1.0, 1.0, 200);
    let data = generate(&cfg, 0);
    let data_csv = dir.join("data.csv");
    let truth_csv = dir.join("truth.csv");
    cli::write_data(&data_csv, &data.problem).map_err(|e| anyhow::anyhow!("{e}"))?;
    let truth: String = data.beta.iter().map(|b| format!("{b}\n")).collect();
    std::fs::write(&truth_csv, format!("beta\n{truth}"))?;
    let path_csv = dir.join("path.csv");

    let s = |p: &std::path::Path| p.to_string_lossy().into_owned();
    let commands: Vec<Vec<String>> = vec![
        vec!["se", "solve", "--prior", "gaussian", "--delta", "1", "--lambda", "1"].into_iter().map(String::from).collect(),
        vec!["se".into(), "optimal-lambda".into(), "--prior".into(), "gaussian".into(), "--delta".into(), "1".into(), "--kfold".into(), "10".into()],
        vec!["eb".into(), "select".into(), "--data".into(), s(&data_csv), "--lambda".into(), "1".into(), "--truth".into(), s(&truth_csv), "--emit".into(), s(&path_csv)],
        vec!["theory".into(), "curve".into(), "--prior".into(), "gaussian".into(), "--delta".into(), "1".into(), "--lambda".into(), "1".into(), "--method".into(), "tlasso".into(), "--grid".into(), "5".into()],
    ];
    for args in commands {
        println!("$ ampsel {}", args.join(" "));
        let code = cli::dispatch(std::iter::once("ampsel".to_string()).chain(args));
        anyhow::ensure!(code == 0, "exit code {code}");
    }
    let head: Vec<String> = std::fs::read_to_string(&path_csv)?.lines().take(4).map(String::from).collect();
    println!("{}", head.join("\n"));
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
