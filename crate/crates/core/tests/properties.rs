use amp_select::eb::{empirical_tradeoff, Direction, PathKind, SelectionPath};
use amp_select::lasso::{self, DesignProblem, LassoOptions};
use amp_select::normal::soft_threshold;
use amp_select::prior::{presets, sample_prior, Component, PriorSpec};
use amp_select::sim::{generate, windowed_fdp, ExperimentConfig};
use amp_select::state_evolution::{SeModel, SeTolerances};
use amp_select::theory::{DensityPair, LevelSetOptions};
use proptest::prelude::*;

fn prior_strategy() -> impl Strategy<Value = PriorSpec> {
    (0.02f64..0.5, -5.0f64..5.0, 0.0f64..2.0, prop::bool::ANY).prop_filter_map("valid prior", |(eps, m, v, point)| {
        let c = if point || v == 0.0 { Component::point(1.0, m) } else { Component::gaussian(1.0, m, v) };
        PriorSpec::new(eps, vec![c]).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_threshold_shrinks(x in -50.0f64..50.0, t in 0.0f64..10.0) {
        let y = soft_threshold(x, t);
        prop_assert!(y.abs() <= x.abs());
        prop_assert!(y == 0.0 || y.signum() == x.signum());
        prop_assert!(((x - y).abs() - t.min(x.abs())).abs() < 1e-12);
    }

    #[test]
    fn empirical_curve_invariants(
        stats in prop::collection::vec(0.0f64..10.0, 1..60),
        nulls in prop::collection::vec(prop::bool::ANY, 60),
        zeros in prop::collection::vec(prop::bool::weighted(0.2), 60),
    ) {
        let p = stats.len();
        let truth: Vec<f64> = nulls[..p].iter().map(|n| if *n { 0.0 } else { 1.0 }).collect();
        let path = SelectionPath::new(PathKind::ThresholdedLasso, stats, Direction::Descending, &truth, zeros[..p].to_vec()).unwrap();
        for &i in path.order() {
            prop_assert!(!path.zero_mask[i]);
        }
        let curve = empirical_tradeoff(&path);
        prop_assert_eq!(curve.len(), path.order().len() + 1);
        prop_assert_eq!((curve[0].fdp, curve[0].tpp), (0.0, 0.0));
        for w in curve.windows(2) {
            prop_assert!(w[1].tpp >= w[0].tpp);
        }
        for pt in &curve {
            prop_assert!((0.0..=1.0).contains(&pt.fdp) && (0.0..=1.0).contains(&pt.tpp));
        }
    }

    #[test]
    fn windowed_fdp_all_null(
        beta_hat in prop::collection::vec(-5.0f64..5.0, 1..80),
        center in 0.5f64..4.0,
        half in 0.05f64..0.45,
    ) {
        let truth = vec![0.0; beta_hat.len()];
        let inside = beta_hat.iter().any(|b| (b - center).abs() <= half);
        let f = windowed_fdp(&beta_hat, &truth, center, half).unwrap();
        prop_assert_eq!(f, if inside { 1.0 } else { 0.0 });
        prop_assert!(windowed_fdp(&beta_hat, &truth, center, center + 0.1).is_err());
    }

    #[test]
    fn level_set_membership(prior in prior_strategy(), t in 0.05f64..1.5, x in 0.01f64..8.0, neg in prop::bool::ANY) {
        let d = DensityPair::new(&prior, 1.2, 1.1);
        let set = d.level_set(t, &LevelSetOptions::default()).unwrap();
        let x = if neg { -x } else { x };
        let r = d.ratio(x).unwrap();
        // away from the boundary membership matches the ratio
        if (r - t).abs() > 1e-6 * t.max(1.0) && x.abs() > 2e-3 {
            prop_assert_eq!(set.contains(x), r <= t, "x = {}, ratio = {}, t = {}", x, r, t);
        }
    }

    #[test]
    fn lfdr_is_a_probability(prior in prior_strategy(), x in -8.0f64..8.0) {
        prop_assume!(x.abs() > 1e-6);
        let d = DensityPair::new(&prior, 0.9, 1.3);
        let l = d.lfdr(x).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&l));
        prop_assert!(d.lfdr_hat_limit(x).unwrap() >= l);
    }

    #[test]
    fn sampling_is_deterministic(prior in prior_strategy(), seed in any::<u64>()) {
        let a = sample_prior(&prior, 50, seed).unwrap();
        prop_assert_eq!(a, sample_prior(&prior, 50, seed).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn se_round_trip(prior in prior_strategy(), delta in 0.3f64..2.5, lambda in 0.2f64..3.0) {
        let tol = SeTolerances::default();
        let model = SeModel::new(prior, 1.0, delta).unwrap();
        let s = model.solve(lambda, &tol).unwrap();
        prop_assert!(s.residual_tau <= 1e-8 && s.residual_lambda <= 1e-8);
        let (l, tau) = model.lambda_of_alpha(s.alpha, &tol).unwrap();
        prop_assert!((l - lambda).abs() <= 1e-8 * lambda.max(1.0));
        prop_assert!((tau - s.tau).abs() <= 1e-8 * s.tau);
    }

    #[test]
    fn lasso_kkt(seed in any::<u64>(), lambda in 0.05f64..2.0, n in 20usize..60, p in 10usize..80) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n * p).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal) / (n as f64).sqrt()).collect();
        let y: Vec<f64> = (0..n).map(|_| 2.0 * rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let prob = DesignProblem::new(n, p, x, y).unwrap();
        let fit = lasso::fit(&prob, lambda, None, &LassoOptions::default()).unwrap();
        let g = prob.xt(&prob.residual(&fit.beta));
        for (gj, bj) in g.iter().zip(&fit.beta) {
            if *bj == 0.0 {
                prop_assert!(gj.abs() <= lambda + 1e-6);
            } else {
                prop_assert!((gj - lambda * bj.signum()).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn replications_regenerate_independently() {
    let cfg = ExperimentConfig::new("prop", presets::two_point_signal(), 0.5, 0.8, 120);
    let forward: Vec<_> = (0..4).map(|r| generate(&cfg, r)).collect();
    for r in (0..4).rev() {
        let again = generate(&cfg, r);
        assert_eq!(again.beta, forward[r].beta);
        assert_eq!(again.problem, forward[r].problem);
    }
}

#[test]
fn runs_are_bit_identical() {
    let mut cfg = ExperimentConfig::new("prop", presets::gaussian_signal(), 1.0, 1.0, 150);
    cfg.replications = 3;
    let a = amp_select::sim::run(&cfg).unwrap();
    let b = amp_select::sim::run(&cfg).unwrap();
    let key = |o: &amp_select::sim::SimOutput| {
        o.records
            .iter()
            .map(|r| serde_json::to_string(&(&r.curves, &r.estimates, r.lambda)).unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(key(&a), key(&b));
}
