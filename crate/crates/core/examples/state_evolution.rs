//! Solve the state-evolution fixed point for a sparse Gaussian signal and
//! locate the MSE-optimal penalty and its cross-validation limit.
//!
//! cargo run --example state_evolution

use amp_select::prior::presets;
use amp_select::state_evolution::{SeModel, SeTolerances};

pub fn run_example() -> anyhow::Result<()> {
    let tol = SeTolerances::default();
    let model = SeModel::new(presets::gaussian_signal(), 1.0, 2.0)?;

    println!("alpha_min(delta = 2) = {}", model.alpha_min(&tol));
    println!("{:>8} {:>10} {:>10} {:>10} {:>12}", "lambda", "alpha", "tau", "mse", "residual");
    for lambda in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let s = model.solve(lambda, &tol)?;
        let mse = model.asymptotic_mse(s.alpha, s.tau, &tol)?;
        println!(
            "{lambda:>8.2} {:>10.5} {:>10.5} {mse:>10.5} {:>12.1e}",
            s.alpha,
            s.tau,
            s.residual_tau.max(s.residual_lambda)
        );
    }

    let best = model.optimal_lambda(model.delta, &tol)?;
    println!("\nlambda* = {:.5} (alpha = {:.5}, tau = {:.5})", best.lambda, best.alpha, best.tau);
    for k in [5usize, 10] {
        let eff = (k as f64 - 1.0) * model.delta / k as f64;
        let cv = model.optimal_lambda(eff, &tol)?;
        println!("lambda*_cv with K = {k:>2}: {:.5}", cv.lambda);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
