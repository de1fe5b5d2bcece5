//! Asymptotic FDP/TPP curves for the Lasso path, thresholded Lasso and the
//! oracle lfdr rule, compared at a few TPP levels.
//!
//! cargo run --example tradeoff_curves

use amp_select::prior::presets;
use amp_select::state_evolution::{SeModel, SeTolerances};
use amp_select::theory::{LassoTheory, LevelSetOptions, OracleTheory, ThresholdedLassoTheory};

pub fn run_example() -> anyhow::Result<()> {
    let tol = SeTolerances::default();
    let model = SeModel::new(presets::gaussian_signal(), 1.0, 2.0)?;
    let sol = model.solve(1.0, &tol)?;

    let oracle = OracleTheory::new(&model.prior, &sol, &LevelSetOptions::default());
    let thresholded = ThresholdedLassoTheory::new(&model.prior, &sol);
    let lasso = LassoTheory::new(&model, &tol);

    println!("lambda = 1: alpha = {:.4}, tau = {:.4}", sol.alpha, sol.tau);
    println!("max tpp: oracle {:.4}, thresholded {:.4}, lasso {:.4}", oracle.max_tpp(), thresholded.max_tpp(), lasso.max_tpp());
    println!("{:>6} {:>10} {:>12} {:>10}", "tpp", "oracle", "thresholded", "lasso");
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
    for tpp in [0.2, 0.4, 0.6, 0.8, 0.9] {
        println!(
            "{tpp:>6.2} {:>10} {:>12} {:>10}",
            fmt(oracle.fdp_at_tpp(tpp)),
            fmt(thresholded.fdp_at_tpp(tpp)),
            fmt(lasso.fdp_at_tpp(tpp))
        );
    }

    let curve = oracle.curve(200)?;
    let last = curve.points.last().expect("nonempty curve");
    println!("\noracle curve: {} points, ends at tpp {:.4}, fdp {:.4}", curve.points.len(), last.tpp, last.fdp);
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
