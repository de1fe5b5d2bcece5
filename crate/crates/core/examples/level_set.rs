//! Level sets {x : q0(x)/q(x) <= t} of the two-groups ratio for an
//! asymmetric prior; the selected region is a union of one-sided tails.
//!
//! cargo run --example level_set

use amp_select::prior::presets;
use amp_select::state_evolution::{SeModel, SeTolerances};
use amp_select::theory::{DensityPair, LevelSetOptions};

pub fn run_example() -> anyhow::Result<()> {
    let tol = SeTolerances::default();
    let opts = LevelSetOptions::default();
    let model = SeModel::new(presets::bimodal_gaussian_signal(), 1.0, 1.0)?;

    for lambda in [0.5, 1.0, 1.5] {
        let sol = model.solve(lambda, &tol)?;
        let density = DensityPair::from_solution(&model.prior, &sol);
        let set = density.level_set(0.6, &opts)?;
        let pieces: Vec<String> = set.intervals.iter().map(|(a, b)| format!("[{a:.4}, {b:.4}]")).collect();
        println!("lambda = {lambda}: q0/q <= 0.6 on {}", pieces.join(" u "));
        for x in [-2.0, 1.0, 2.0] {
            println!("    lfdr({x:+.1}) = {:.4}", density.lfdr(x)?);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
