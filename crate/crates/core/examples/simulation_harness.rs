//! A small Monte Carlo experiment: several replications, every selection
//! rule, per-replication CSV curves, a JSON summary and an SVG overlay.
//!
//! cargo run --release --example simulation_harness [output-dir]

use amp_select::eb::PathKind;
use amp_select::prior::presets;
use amp_select::sim::{self, ExperimentConfig};

pub fn run_example() -> anyhow::Result<()> {
    run_in(&std::env::temp_dir().join("amp-select-runs"))
}

fn run_in(root: &std::path::Path) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::new("demo", presets::gaussian_signal(), 1.0, 0.5, 600);
    cfg.replications = 3;
    cfg.methods = vec![PathKind::Oracle, PathKind::Eb, PathKind::ThresholdedLasso, PathKind::LassoMax];
    let out = sim::run(&cfg)?;

    for m in &out.report.methods {
        println!(
            "{:<18} mean |empirical - theory| = {}",
            m.method.name(),
            m.mad_vs_theory.map_or("-".into(), |v| format!("{v:.4}"))
        );
    }
    if let Some(sup) = out.report.eb_oracle_sup {
        println!("sup |eb - oracle| of mean curves = {sup:.4}");
    }
    let dir = sim::write_outputs(root, &out)?;
    std::fs::write(dir.join("curves.svg"), sim::render_svg(&dir, &out.report)?)?;
    println!("outputs in {}", dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    match std::env::args().nth(1) {
        Some(dir) => run_in(std::path::Path::new(&dir)),
        None => run_example(),
    }
}
