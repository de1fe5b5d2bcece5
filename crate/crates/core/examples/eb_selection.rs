//! Empirical-Bayes selection on one synthetic dataset: fit the Lasso, plug
//! in the estimated noise level, threshold and null fraction, and compare
//! the realized path with the oracle path and the asymptotic curve.
//!
//! cargo run --release --example eb_selection

use amp_select::eb::{self, build_path, empirical_tradeoff, Kde, PathInputs};
use amp_select::lasso::{self, LassoOptions};
use amp_select::prior::presets;
use amp_select::sim::{fdp_at_tpp, generate, ExperimentConfig};
use amp_select::state_evolution::SeTolerances;
use amp_select::theory::{DensityPair, LevelSetOptions, OracleTheory};

pub fn run_example() -> anyhow::Result<()> {
    let cfg = ExperimentConfig::new("eb", presets::gaussian_signal(), 1.0, 1.0, 2000);
    let data = generate(&cfg, 0);
    let fit = lasso::fit(&data.problem, 1.0, None, &LassoOptions::default())?;
    let est = eb::estimate(&data.problem, &fit, &cfg.eb)?;
    let kde = Kde::new(&fit.beta, est.bandwidth)?;

    let model = amp_select::state_evolution::SeModel::new(cfg.prior.clone(), cfg.sigma, cfg.delta)?;
    let sol = model.solve(1.0, &SeTolerances::default())?;
    println!("tau: estimate {:.4}, theory {:.4}", est.tau_hat, sol.tau);
    println!("alpha*tau: estimate {:.4}, theory {:.4}", est.alpha_tau_hat, sol.alpha * sol.tau);
    println!("eps: estimate {:.4}, truth {}", est.eps_hat, cfg.prior.epsilon());
    println!("bandwidth {:.4}, support {}", est.bandwidth, fit.support_size);

    let density = DensityPair::from_solution(&cfg.prior, &sol);
    let eb_path = build_path(&fit.beta, &data.beta, PathInputs::Eb { estimates: &est, kde: &kde })?;
    let oracle_path = build_path(&fit.beta, &data.beta, PathInputs::Oracle { density: &density })?;
    let eb_curve = empirical_tradeoff(&eb_path);
    let oracle_curve = empirical_tradeoff(&oracle_path);
    let theory = OracleTheory::new(&cfg.prior, &sol, &LevelSetOptions::default());

    println!("\n{:>6} {:>8} {:>8} {:>8}", "tpp", "eb", "oracle", "theory");
    for tpp in [0.3, 0.5, 0.7, 0.9] {
        let show = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.4}"));
        println!(
            "{tpp:>6.1} {:>8} {:>8} {:>8}",
            show(fdp_at_tpp(&eb_curve, tpp)),
            show(fdp_at_tpp(&oracle_curve, tpp)),
            show(theory.fdp_at_tpp(tpp))
        );
    }
    let first: Vec<usize> = eb_path.order().iter().take(5).copied().collect();
    println!("\nfirst EB selections: {first:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
