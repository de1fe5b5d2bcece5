//! Oracle FDP at a fixed asymptotic TPP as a function of the penalty. The
//! minimum sits at the tau-minimizing penalty.
//!
//! cargo run --release --example lambda_optimality

use amp_select::prior::presets;
use amp_select::state_evolution::{SeModel, SeTolerances};
use amp_select::theory::{fdp_vs_lambda, LevelSetOptions};

pub fn run_example() -> anyhow::Result<()> {
    let tol = SeTolerances::default();
    let model = SeModel::new(presets::bimodal_gaussian_signal(), 1.0, 1.0)?;
    let grid: Vec<f64> = (0..20).map(|i| 0.1 + 2.9 * i as f64 / 19.0).collect();
    let rows = fdp_vs_lambda(&model, 0.7, &grid, &tol, &LevelSetOptions::default())?;

    println!("{:>8} {:>10} {:>10}", "lambda", "threshold", "fdp");
    for r in &rows {
        match (r.threshold, r.fdp) {
            (Some(t), Some(f)) => println!("{:>8.3} {t:>10.5} {f:>10.6}", r.lambda),
            _ => println!("{:>8.3} {:>10} {:>10}  ({})", r.lambda, "-", "-", r.error.as_deref().unwrap_or("")),
        }
    }
    let best = rows
        .iter()
        .filter_map(|r| r.fdp.map(|f| (r.lambda, f)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("some penalty reaches tpp 0.7");
    let star = model.optimal_lambda(model.delta, &tol)?;
    println!("\ngrid minimum at lambda = {:.3}; lambda* = {:.5}", best.0, star.lambda);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
