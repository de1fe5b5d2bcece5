//! K-fold cross-validation of the Lasso penalty on synthetic data, next to
//! its large-system limit.
//!
//! cargo run --release --example cross_validation

use amp_select::lasso::{self, LassoOptions};
use amp_select::prior::presets;
use amp_select::sim::{generate, ExperimentConfig};
use amp_select::state_evolution::{SeModel, SeTolerances};

pub fn run_example() -> anyhow::Result<()> {
    let cfg = ExperimentConfig::new("cv", presets::bimodal_gaussian_signal(), 1.0, 1.0, 200);
    let model = SeModel::new(cfg.prior.clone(), cfg.sigma, cfg.delta)?;
    let k = 10;
    let limit = model.optimal_lambda((k as f64 - 1.0) / k as f64 * cfg.delta, &SeTolerances::default())?;

    let grid = lasso::default_cv_grid();
    let mut picks = Vec::new();
    for rep in 0..2 {
        let data = generate(&cfg, rep);
        let cv = lasso::cross_validate(&data.problem, k, &grid, rep as u64, &LassoOptions::default())?;
        let best = cv.errors.iter().copied().fold(f64::INFINITY, f64::min);
        println!("replication {rep}: lambda_cv = {:.4}, cv error {:.4}", cv.lambda_cv, best);
        picks.push(cv.lambda_cv);
    }
    let mean = picks.iter().sum::<f64>() / picks.len() as f64;
    println!("mean {mean:.4}; limit for K = {k}: {:.4}", limit.lambda);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
