//! The AMP state-evolution fixed point for the Lasso.
//!
//! For a prior `Pi`, noise level `sigma`, sampling ratio `delta = n / p` and
//! penalty `lambda`, the pair `(alpha, tau)` solves
//!
//! ```text
//! tau^2  = sigma^2 + (1/delta) E[(eta_{alpha tau}(Pi + tau Z) - Pi)^2]
//! lambda = alpha tau (1 - (1/delta) P(|Pi + tau Z| > alpha tau))
//! ```
//!
//! The solver nests a fixed-point iteration for `tau` at fixed `alpha` inside
//! a bracketed bisection on `alpha -> lambda(alpha)`.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal;
use crate::prior::{ExpectOptions, PriorError, PriorSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeError {
    #[error("sigma must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("delta must be positive and finite, got {0}")]
    Delta(f64),
    #[error("lambda must be positive and finite, got {0}")]
    Lambda(f64),
    #[error("alpha = {alpha} is not above alpha_min = {alpha_min}")]
    AlphaBelowMin { alpha: f64, alpha_min: f64 },
    #[error(
        "tau fixed point did not converge after {iterations} iterations \
         (last tau^2 = {last_tau2:e}, residual = {residual:e})"
    )]
    TauNotConverged {
        iterations: usize,
        last_tau2: f64,
        residual: f64,
    },
    #[error(
        "no alpha in [{alpha_lo}, {alpha_hi}] gives lambda = {lambda}; \
         lambda(alpha) ranges over [{lambda_lo}, {lambda_hi}] on the scanned grid"
    )]
    NoBracket {
        lambda: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        lambda_lo: f64,
        lambda_hi: f64,
    },
    #[error("bisection stalled at alpha = {alpha} with |lambda(alpha) - lambda| = {residual:e}")]
    BisectionStalled { alpha: f64, residual: f64 },
    #[error(
        "minimizer of tau(lambda) sits at the edge of [{lo}, {hi}] (lambda = {at}); \
         widen the search bracket"
    )]
    BoundaryMinimizer { lo: f64, hi: f64, at: f64 },
    #[error("invalid search bracket [{lo}, {hi}]")]
    SearchBracket { lo: f64, hi: f64 },
    #[error(transparent)]
    Prior(#[from] PriorError),
}

/// Numerical settings for every state-evolution routine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeTolerances {
    /// Bisection width for `alpha_min`.
    pub alpha_min_tol: f64,
    /// Stop the `tau` iteration once `|d tau^2| < tau_rel_tol * tau^2`.
    pub tau_rel_tol: f64,
    pub tau_max_iter: usize,
    /// Required bound on both equation residuals.
    pub residual_tol: f64,
    /// Target accuracy `|lambda(alpha) - lambda|` of the outer bisection.
    pub lambda_tol: f64,
    /// Number of points in the geometric alpha scan.
    pub bracket_points: usize,
    /// Scan starts at `alpha_min + alpha_offset`.
    pub alpha_offset: f64,
    pub alpha_upper: f64,
    /// Search interval for the minimizer of `tau(lambda)`.
    pub lambda_search: [f64; 2],
    pub golden_tol: f64,
    /// Required bound on the MSE stationarity residual at the optimum.
    pub stationarity_tol: f64,
    pub quadrature: ExpectOptions,
}

impl Default for SeTolerances {
    fn default() -> Self {
        Self {
            alpha_min_tol: 1e-12,
            tau_rel_tol: 1e-12,
            tau_max_iter: 10_000,
            residual_tol: 1e-8,
            lambda_tol: 1e-9,
            bracket_points: 100,
            alpha_offset: 1e-6,
            alpha_upper: 50.0,
            lambda_search: [1e-3, 20.0],
            golden_tol: 1e-6,
            stationarity_tol: 1e-6,
            quadrature: ExpectOptions::default(),
        }
    }
}

/// `(alpha^2 + 1) Phi(-alpha) - alpha phi(alpha)`; equals `E[eta_alpha(Z)^2] / 2`.
fn half_null_risk(alpha: f64) -> f64 {
    (alpha * alpha + 1.0) * normal::cdf(-alpha) - alpha * normal::pdf(alpha)
}

/// Smallest admissible `alpha` for sampling ratio `delta`: the root of
/// `(a^2 + 1) Phi(-a) - a phi(a) = delta / 2` when `delta < 1`, otherwise 0.
pub fn alpha_min(delta: f64) -> f64 {
    alpha_min_with(delta, SeTolerances::default().alpha_min_tol)
}

pub fn alpha_min_with(delta: f64, tol: f64) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    if delta >= 1.0 {
        return 0.0;
    }
    let target = 0.5 * delta;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while half_null_risk(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if half_null_risk(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Prior, noise level and sampling ratio: everything but the penalty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeModel {
    pub prior: PriorSpec,
    pub sigma: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeProblem {
    #[serde(flatten)]
    pub model: SeModel,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeSolution {
    pub alpha: f64,
    pub tau: f64,
    pub lambda: f64,
    pub residual_tau: f64,
    pub residual_lambda: f64,
}

/// Output of [`SeModel::optimal_lambda`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalLambda {
    pub lambda: f64,
    pub alpha: f64,
    pub tau: f64,
    pub effective_delta: f64,
    /// `E(Z + alpha; X < -alpha tau) - E(Z - alpha; X > alpha tau)` at the optimum.
    pub stationarity: f64,
}

impl SeModel {
    pub fn new(prior: PriorSpec, sigma: f64, delta: f64) -> Result<Self, SeError> {
        let m = Self {
            prior,
            sigma,
            delta,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), SeError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(SeError::Sigma(self.sigma));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(SeError::Delta(self.delta));
        }
        Ok(())
    }

    /// Same prior and noise, different sampling ratio.
    pub fn with_delta(&self, delta: f64) -> Self {
        Self {
            delta,
            ..self.clone()
        }
    }

    pub fn alpha_min(&self, tol: &SeTolerances) -> f64 {
        alpha_min_with(self.delta, tol.alpha_min_tol)
    }

    /// Right-hand side of the `tau` equation.
    pub fn tau_map(&self, alpha: f64, tau: f64) -> f64 {
        self.sigma * self.sigma + self.prior.soft_threshold_mse(alpha * tau, tau) / self.delta
    }

    /// Solves the `tau` equation at fixed `alpha` by direct iteration.
    pub fn tau_fixed_point(&self, alpha: f64, tol: &SeTolerances) -> Result<f64, SeError> {
        self.validate()?;
        let amin = self.alpha_min(tol);
        if !(alpha > amin) || !alpha.is_finite() {
            return Err(SeError::AlphaBelowMin {
                alpha,
                alpha_min: amin,
            });
        }
        let mut tau2 = 100.0 * self.sigma * self.sigma * (1.0 + 1.0 / self.delta);
        for _ in 0..tol.tau_max_iter {
            let next = self.tau_map(alpha, tau2.sqrt());
            let step = (next - tau2).abs();
            tau2 = next;
            if step < tol.tau_rel_tol * tau2 {
                return Ok(tau2.sqrt());
            }
            if !tau2.is_finite() {
                break;
            }
        }
        let residual = (self.tau_map(alpha, tau2.sqrt()) - tau2).abs();
        Err(SeError::TauNotConverged {
            iterations: tol.tau_max_iter,
            last_tau2: tau2,
            residual,
        })
    }

    /// Right-hand side of the `lambda` equation at a given pair.
    pub fn lambda_at(&self, alpha: f64, tau: f64) -> f64 {
        let theta = alpha * tau;
        theta * (1.0 - self.prior.prob_exceeds(theta, tau) / self.delta)
    }

    /// `lambda(alpha)` together with the `tau` it was computed from.
    pub fn lambda_of_alpha(&self, alpha: f64, tol: &SeTolerances) -> Result<(f64, f64), SeError> {
        let tau = self.tau_fixed_point(alpha, tol)?;
        Ok((self.lambda_at(alpha, tau), tau))
    }

    /// `E[(eta_{alpha tau}(Pi + tau Z) - Pi)^2]` by quadrature.
    pub fn asymptotic_mse(&self, alpha: f64, tau: f64, tol: &SeTolerances) -> Result<f64, SeError> {
        Ok(self
            .prior
            .expect_psi(alpha, tau, |x, y| (x - y) * (x - y), &tol.quadrature)?)
    }

    /// Residual of the MSE stationarity condition in `alpha` at fixed `tau`.
    pub fn stationarity(&self, alpha: f64, tau: f64) -> f64 {
        self.prior.mse_stationarity(alpha, tau)
    }

    fn solution(&self, alpha: f64, tau: f64, lambda: f64) -> SeSolution {
        SeSolution {
            alpha,
            tau,
            lambda,
            residual_tau: (self.tau_map(alpha, tau) - tau * tau).abs(),
            residual_lambda: (self.lambda_at(alpha, tau) - lambda).abs(),
        }
    }

    /// Tabulates `lambda(alpha)` on the geometric scan grid. Points where the
    /// inner iteration fails are left out.
    pub fn lambda_map(&self, tol: &SeTolerances) -> Result<LambdaMap, SeError> {
        self.validate()?;
        let lo = self.alpha_min(tol) + tol.alpha_offset;
        let hi = tol.alpha_upper;
        let n = tol.bracket_points.max(2);
        let ratio = (hi / lo).ln() / (n - 1) as f64;
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let alpha = if i == n - 1 {
                hi
            } else {
                lo * (ratio * i as f64).exp()
            };
            if let Ok((lambda, tau)) = self.lambda_of_alpha(alpha, tol) {
                points.push(MapPoint { alpha, tau, lambda });
            }
        }
        Ok(LambdaMap {
            model: self.clone(),
            alpha_range: (lo, hi),
            points,
        })
    }

    pub fn solve(&self, lambda: f64, tol: &SeTolerances) -> Result<SeSolution, SeError> {
        self.lambda_map(tol)?.solve(lambda, tol)
    }

    /// Bisection on `alpha` inside a caller-supplied bracket.
    pub fn solve_with_bracket(
        &self,
        lambda: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        tol: &SeTolerances,
    ) -> Result<SeSolution, SeError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(SeError::Lambda(lambda));
        }
        let (l_lo, _) = self.lambda_of_alpha(alpha_lo, tol)?;
        let (l_hi, _) = self.lambda_of_alpha(alpha_hi, tol)?;
        if (l_lo - lambda).signum() == (l_hi - lambda).signum() {
            return Err(SeError::NoBracket {
                lambda,
                alpha_lo,
                alpha_hi,
                lambda_lo: l_lo.min(l_hi),
                lambda_hi: l_lo.max(l_hi),
            });
        }
        self.bisect(lambda, alpha_lo, l_lo, alpha_hi, tol)
    }

    fn bisect(
        &self,
        lambda: f64,
        mut a: f64,
        l_a: f64,
        mut b: f64,
        tol: &SeTolerances,
    ) -> Result<SeSolution, SeError> {
        let below_at_a = l_a < lambda;
        let mut best: Option<(f64, f64, f64)> = None;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let (l, tau) = self.lambda_of_alpha(mid, tol)?;
            let r = (l - lambda).abs();
            if best.map_or(true, |(_, _, rb)| r < rb) {
                best = Some((mid, tau, r));
            }
            if r <= tol.lambda_tol {
                break;
            }
            if (l < lambda) == below_at_a {
                a = mid;
            } else {
                b = mid;
            }
            if (b - a).abs() <= f64::EPSILON * mid.abs() {
                break;
            }
        }
        let (alpha, tau, r) = best.expect("at least one bisection step");
        if r > tol.lambda_tol.max(tol.residual_tol) {
            return Err(SeError::BisectionStalled { alpha, residual: r });
        }
        Ok(self.solution(alpha, tau, lambda))
    }

    /// `lambda* = argmin_lambda tau(lambda)` at sampling ratio
    /// `effective_delta`. Pass `delta` for the MSE-optimal penalty and
    /// `(K - 1) delta / K` for the K-fold cross-validation limit.
    ///
    /// Golden-section search on `tau(lambda)` followed by bisection on the
    /// stationarity residual, which is better conditioned than `tau` itself
    /// near its flat minimum.
    pub fn optimal_lambda(
        &self,
        effective_delta: f64,
        tol: &SeTolerances,
    ) -> Result<OptimalLambda, SeError> {
        let model = self.with_delta(effective_delta);
        model.validate()?;
        let [lo, hi] = tol.lambda_search;
        if !(lo > 0.0 && hi > lo) {
            return Err(SeError::SearchBracket { lo, hi });
        }
        let map = model.lambda_map(tol)?;
        let tau_at = |l: f64| map.solve(l, tol).map(|s| s.tau);

        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (tau_at(c)?, tau_at(d)?);
        while b - a > tol.golden_tol {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = tau_at(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = tau_at(d)?;
            }
        }
        let golden = 0.5 * (a + b);
        let edge = 10.0 * tol.golden_tol;
        if golden - lo < edge || hi - golden < edge {
            return Err(SeError::BoundaryMinimizer { lo, hi, at: golden });
        }

        let sol = map.solve(golden, tol)?;
        let polished = model.polish_stationary(&map, golden, tol);
        let (alpha, tau) = match polished {
            Some(p) => p,
            None => {
                warn!("stationarity polish failed near lambda = {golden}; keeping golden-section result");
                (sol.alpha, sol.tau)
            }
        };
        Ok(OptimalLambda {
            lambda: model.lambda_at(alpha, tau),
            alpha,
            tau,
            effective_delta,
            stationarity: model.stationarity(alpha, tau),
        })
    }

    fn polish_stationary(&self, map: &LambdaMap, center: f64, tol: &SeTolerances) -> Option<(f64, f64)> {
        for width in [1e-3, 1e-2, 1e-1] {
            let (Ok(s_lo), Ok(s_hi)) = (
                map.solve(center * (1.0 - width), tol),
                map.solve(center * (1.0 + width), tol),
            ) else {
                continue;
            };
            let (mut a, mut b) = (s_lo.alpha.min(s_hi.alpha), s_lo.alpha.max(s_hi.alpha));
            let g = |alpha: f64| -> Option<(f64, f64)> {
                let tau = self.tau_fixed_point(alpha, tol).ok()?;
                Some((self.stationarity(alpha, tau), tau))
            };
            let (ga, _) = g(a)?;
            let (gb, _) = g(b)?;
            if ga.signum() == gb.signum() {
                continue;
            }
            let mut out = None;
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                let (gm, tau) = g(mid)?;
                out = Some((mid, tau));
                if gm == 0.0 || b - a < 1e-14 * mid {
                    break;
                }
                if gm.signum() == ga.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return out;
        }
        None
    }
}

impl SeProblem {
    pub fn new(prior: PriorSpec, sigma: f64, delta: f64, lambda: f64) -> Result<Self, SeError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(SeError::Lambda(lambda));
        }
        Ok(Self {
            model: SeModel::new(prior, sigma, delta)?,
            lambda,
        })
    }

    pub fn solve(&self, tol: &SeTolerances) -> Result<SeSolution, SeError> {
        self.model.solve(self.lambda, tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapPoint {
    pub alpha: f64,
    pub tau: f64,
    pub lambda: f64,
}

/// `lambda(alpha)` tabulated on the scan grid. Reusing one map across many
/// penalties avoids rescanning.
#[derive(Clone, Debug)]
pub struct LambdaMap {
    model: SeModel,
    alpha_range: (f64, f64),
    points: Vec<MapPoint>,
}

impl LambdaMap {
    pub fn model(&self) -> &SeModel {
        &self.model
    }

    pub fn points(&self) -> &[MapPoint] {
        &self.points
    }

    pub fn solve(&self, lambda: f64, tol: &SeTolerances) -> Result<SeSolution, SeError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(SeError::Lambda(lambda));
        }
        let mut found: Vec<SeSolution> = Vec::new();
        let mut last_err = None;
        for w in self.points.windows(2) {
            let (p, q) = (w[0], w[1]);
            let crosses = (p.lambda - lambda) * (q.lambda - lambda) <= 0.0;
            if !crosses {
                continue;
            }
            match self.model.bisect(lambda, p.alpha, p.lambda, q.alpha, tol) {
                Ok(s) => found.push(s),
                Err(e) => last_err = Some(e),
            }
        }
        if found.len() > 1 {
            warn!(
                "lambda(alpha) crosses lambda = {lambda} {} times; keeping the smallest residual",
                found.len()
            );
        }
        let best = found.into_iter().min_by(|a, b| {
            (a.residual_tau + a.residual_lambda).total_cmp(&(b.residual_tau + b.residual_lambda))
        });
        match (best, last_err) {
            (Some(s), _) => Ok(s),
            (None, Some(e)) => Err(e),
            (None, None) => {
                let lo = self.points.iter().map(|p| p.lambda).fold(f64::INFINITY, f64::min);
                let hi = self.points.iter().map(|p| p.lambda).fold(f64::NEG_INFINITY, f64::max);
                Err(SeError::NoBracket {
                    lambda,
                    alpha_lo: self.alpha_range.0,
                    alpha_hi: self.alpha_range.1,
                    lambda_lo: lo,
                    lambda_hi: hi,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{presets, Component};

    fn tol() -> SeTolerances {
        SeTolerances::default()
    }

    fn null_prior() -> PriorSpec {
        presets::gaussian_signal().with_epsilon(0.0).unwrap()
    }

    /// `E[eta_alpha(Z)^2]` by midpoint rule, independent of the closed forms.
    fn null_risk_numeric(alpha: f64) -> f64 {
        let n = 200_000;
        let h = (12.0 - alpha) / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let z = alpha + (i as f64 + 0.5) * h;
            s += (z - alpha).powi(2) * normal::pdf(z) * h;
        }
        2.0 * s
    }

    #[test]
    fn alpha_min_cases() {
        assert_eq!(alpha_min(1.0), 0.0);
        assert_eq!(alpha_min(3.0), 0.0);
        for &d in &[0.5, 0.1] {
            let a = alpha_min(d);
            assert!((half_null_risk(a) - d / 2.0).abs() < 1e-10, "delta {d}");
            assert!((null_risk_numeric(a) - d).abs() < 1e-7);
        }
    }

    #[test]
    fn tau_decreases_to_sigma_with_delta() {
        let mut last = f64::INFINITY;
        for &d in &[1.0, 10.0, 100.0] {
            let m = SeModel::new(null_prior(), 1.0, d).unwrap();
            let t = m.tau_fixed_point(1.5, &tol()).unwrap();
            assert!(t < last && t >= 1.0);
            last = t;
        }
        assert!(last < 1.001);
    }

    #[test]
    fn null_tau_closed_form() {
        let m = SeModel::new(null_prior(), 1.3, 1.0).unwrap();
        let tau = m.tau_fixed_point(2.0, &tol()).unwrap();
        let expect = (1.69 / (1.0 - null_risk_numeric(2.0))).sqrt();
        assert!((tau * tau - expect * expect).abs() < 1e-8);
    }

    #[test]
    fn alpha_below_min_rejected() {
        let m = SeModel::new(null_prior(), 1.0, 0.5).unwrap();
        let a = alpha_min(0.5);
        assert!(matches!(
            m.tau_fixed_point(0.9 * a, &tol()),
            Err(SeError::AlphaBelowMin { .. })
        ));
    }

    #[test]
    fn lambda_grows_with_alpha() {
        let m = SeModel::new(presets::gaussian_signal(), 1.0, 2.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in 1..40 {
            let (l, _) = m.lambda_of_alpha(0.25 * k as f64, &tol()).unwrap();
            assert!(l > prev);
            prev = l;
        }
        assert!(prev > 8.0);
    }

    #[test]
    fn lambda_near_alpha_min_is_small() {
        let m = SeModel::new(presets::gaussian_signal(), 1.0, 0.5).unwrap();
        let a = alpha_min(0.5) + 1e-3;
        if let Ok((l, _)) = m.lambda_of_alpha(a, &tol()) {
            assert!(l < 0.05, "{l}");
        }
    }

    #[test]
    fn solve_gaussian_signal() {
        let p = SeProblem::new(presets::gaussian_signal(), 1.0, 2.0, 1.0).unwrap();
        let s = p.solve(&tol()).unwrap();
        assert!(s.residual_tau < 1e-8 && s.residual_lambda < 1e-8, "{s:?}");
        assert!(s.tau >= 1.0);
        let tau_again = p.model.tau_fixed_point(s.alpha, &tol()).unwrap();
        assert!((p.model.tau_map(s.alpha, tau_again) - tau_again * tau_again).abs() < 1e-8);
    }

    #[test]
    fn solve_round_trip_bimodal() {
        let m = SeModel::new(presets::bimodal_gaussian_signal(), 1.0, 1.0).unwrap();
        let s = m.solve(1.0, &tol()).unwrap();
        let (l, _) = m.lambda_of_alpha(s.alpha, &tol()).unwrap();
        assert!((l - 1.0).abs() < 1e-6);
    }

    #[test]
    fn null_prior_solve_matches_reduced_equation() {
        let m = SeModel::new(null_prior(), 1.0, 1.0).unwrap();
        let s = m.solve(1.0, &tol()).unwrap();
        // reduced scalar equation: alpha (1 - 2 Phi(-alpha)) / sqrt(1 - E eta_alpha(Z)^2) = 1
        let f = |a: f64| a * (1.0 - 2.0 * normal::cdf(-a)) / (1.0 - null_risk_numeric(a)).sqrt() - 1.0;
        let (mut lo, mut hi) = (0.1, 5.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let alpha = 0.5 * (lo + hi);
        let tau = (1.0 / (1.0 - null_risk_numeric(alpha))).sqrt();
        assert!((s.alpha - alpha).abs() < 1e-6, "{} vs {alpha}", s.alpha);
        assert!((s.tau - tau).abs() < 1e-6);
    }

    #[test]
    fn mse_relation_at_solution() {
        let m = SeModel::new(presets::two_point_signal(), 1.0, 1.8).unwrap();
        let s = m.solve(0.7, &tol()).unwrap();
        let mse = m.asymptotic_mse(s.alpha, s.tau, &tol()).unwrap();
        assert!((m.delta * (s.tau * s.tau - 1.0) - mse).abs() < 1e-8);
    }

    #[test]
    fn stationarity_is_scaled_mse_derivative() {
        let p = presets::bimodal_gaussian_signal();
        let (alpha, tau, h) = (1.3, 1.4, 1e-5);
        let d = (p.soft_threshold_mse((alpha + h) * tau, tau) - p.soft_threshold_mse((alpha - h) * tau, tau))
            / (2.0 * h);
        let s = p.mse_stationarity(alpha, tau);
        assert!((d - 2.0 * tau * tau * s).abs() < 1e-6, "{d} vs {}", 2.0 * tau * tau * s);
    }

    #[test]
    fn no_bracket_reports_range() {
        let m = SeModel::new(presets::point_signal(), 1.0, 1.0).unwrap();
        let t = SeTolerances {
            alpha_upper: 2.0,
            ..tol()
        };
        match m.solve(500.0, &t) {
            Err(SeError::NoBracket { alpha_hi, .. }) => assert_eq!(alpha_hi, 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn optimal_lambda_minimizes_tau() {
        let m = SeModel::new(presets::bimodal_gaussian_signal(), 1.0, 1.0).unwrap();
        let opt = m.optimal_lambda(1.0, &tol()).unwrap();
        assert!(opt.stationarity.abs() < 1e-6);
        let map = m.lambda_map(&tol()).unwrap();
        for k in 0..50 {
            let l = 0.05 + 0.1 * k as f64;
            let s = map.solve(l, &tol()).unwrap();
            assert!(opt.tau <= s.tau + 1e-12, "lambda {l}");
        }
    }

    #[test]
    fn boundary_minimizer_is_an_error() {
        let m = SeModel::new(
            PriorSpec::new(0.5, vec![Component::point(1.0, 8.0)]).unwrap(),
            1.0,
            2.0,
        )
        .unwrap();
        let t = SeTolerances {
            lambda_search: [2.0, 3.0],
            ..tol()
        };
        assert!(matches!(
            m.optimal_lambda(2.0, &t),
            Err(SeError::BoundaryMinimizer { .. })
        ));
    }
}
