//! Estimated local false discovery rate and windowed FDP on a grid of
//! Lasso-estimate values, against their large-system limits.
//!
//! cargo run --release --example lfdr_estimation

use amp_select::eb::{self, Kde};
use amp_select::lasso::{self, LassoOptions};
use amp_select::prior::presets;
use amp_select::sim::{generate, windowed_fdp, ExperimentConfig};
use amp_select::state_evolution::{SeModel, SeTolerances};
use amp_select::theory::DensityPair;

pub fn run_example() -> anyhow::Result<()> {
    let cfg = ExperimentConfig::new("lfdr", presets::bimodal_gaussian_signal(), 1.0, 1.0, 2000);
    let data = generate(&cfg, 7);
    let fit = lasso::fit(&data.problem, 1.0, None, &LassoOptions::default())?;
    let est = eb::estimate(&data.problem, &fit, &cfg.eb)?;
    let kde = Kde::new(&fit.beta, est.bandwidth)?;

    let model = SeModel::new(cfg.prior.clone(), cfg.sigma, cfg.delta)?;
    let density = DensityPair::from_solution(&cfg.prior, &model.solve(1.0, &SeTolerances::default())?);

    let width = 0.4;
    println!("{:>6} {:>9} {:>9} {:>9} {:>9}", "x", "lfdr_hat", "limit", "win_fdp", "limit");
    for x in [-5.0, -4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0, 5.0] {
        let l = eb::lfdr_hat(&est, &kde, x, &cfg.eb)?;
        let w = windowed_fdp(&fit.beta, &data.beta, x, width)?;
        let wl = density.interval_fdp_limit(x - width, x + width)?;
        println!("{x:>6.1} {l:>9.4} {:>9.4} {w:>9.4} {wl:>9.4}", density.lfdr_hat_limit(x)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
