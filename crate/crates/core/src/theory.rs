//! Asymptotic selection quantities under the two-groups view of the Lasso.
//!
//! At a solved pair `(alpha, tau)` the Lasso estimate of a null coefficient
//! behaves like `eta_{alpha tau}(tau Z)` and that of a nonnull one like
//! `eta_{alpha tau}(Pi_1 + tau Z)`. Off zero these have densities `q0` and
//! `q1`; `q = (1 - eps) q0 + eps q1`. Everything here is computed from those
//! densities in closed form or by Gaussian CDF differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal::{self, mass_between};
use crate::prior::{Atom, PriorSpec};
use crate::state_evolution::{SeError, SeModel, SeSolution, SeTolerances};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("density ratio is undefined at x = 0")]
    ZeroArgument,
    #[error("interval [{lo}, {hi}] must lie strictly on one side of zero")]
    StraddlesZero { lo: f64, hi: f64 },
    #[error("target tpp {target} is not attainable (maximum {max})")]
    Unreachable { target: f64, max: f64 },
    #[error("threshold must be positive, got {0}")]
    Threshold(f64),
    #[error(transparent)]
    StateEvolution(#[from] SeError),
}

/// Settings for level-set discovery.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelSetOptions {
    /// Zero-exclusion radius as a multiple of `tau`.
    pub zero_radius: f64,
    /// Grid points per unit `tau` in the ratio scan.
    pub points_per_tau: f64,
    /// Half-width of the scan beyond the furthest component, in sds.
    pub tail_sds: f64,
    pub endpoint_tol: f64,
    /// Bisection accuracy of [`OracleTheory::calibrate`].
    pub tpp_tol: f64,
}

impl Default for LevelSetOptions {
    fn default() -> Self {
        Self {
            zero_radius: 1e-3,
            points_per_tau: 200.0,
            tail_sds: 10.0,
            endpoint_tol: 1e-10,
            tpp_tol: 1e-8,
        }
    }
}

/// `P(eta_theta(X) in (lo, hi))` for `X ~ N(mean, sd^2)` and an interval on
/// one side of zero.
fn eta_mass(mean: f64, sd: f64, theta: f64, lo: f64, hi: f64) -> f64 {
    let shift = if lo >= 0.0 { theta } else { -theta };
    mass_between((lo + shift - mean) / sd, (hi + shift - mean) / sd)
}

/// The off-zero densities `q0`, `q1` and `q` at a state-evolution pair.
#[derive(Clone, Debug)]
pub struct DensityPair {
    epsilon: f64,
    alpha: f64,
    tau: f64,
    atoms: Vec<Atom>,
    sds: Vec<f64>,
}

impl DensityPair {
    pub fn new(prior: &PriorSpec, alpha: f64, tau: f64) -> Self {
        assert!(tau > 0.0 && alpha >= 0.0, "need tau > 0 and alpha >= 0");
        let atoms: Vec<Atom> = prior.nonnull_atoms().collect();
        let sds = atoms.iter().map(|a| (a.var + tau * tau).sqrt()).collect();
        Self {
            epsilon: prior.epsilon(),
            alpha,
            tau,
            atoms,
            sds,
        }
    }

    pub fn from_solution(prior: &PriorSpec, sol: &SeSolution) -> Self {
        Self::new(prior, sol.alpha, sol.tau)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    fn theta(&self) -> f64 {
        self.alpha * self.tau
    }

    /// Pre-image of `x != 0` under the soft threshold.
    fn preimage(&self, x: f64) -> f64 {
        x + self.theta() * x.signum()
    }

    pub fn q0(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        normal::pdf(self.preimage(x) / self.tau) / self.tau
    }

    pub fn q1(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let u = self.preimage(x);
        self.atoms
            .iter()
            .zip(&self.sds)
            .map(|(a, &s)| a.weight * normal::pdf((u - a.mean) / s) / s)
            .sum()
    }

    pub fn q(&self, x: f64) -> f64 {
        (1.0 - self.epsilon) * self.q0(x) + self.epsilon * self.q1(x)
    }

    /// Mass of `eta(tau Z)` away from zero, `2 Phi(-alpha)`.
    pub fn w0(&self) -> f64 {
        2.0 * normal::cdf(-self.alpha)
    }

    /// Mass of `eta(Pi_1 + tau Z)` away from zero.
    pub fn w1(&self) -> f64 {
        let theta = self.theta();
        self.atoms
            .iter()
            .zip(&self.sds)
            .map(|(a, &s)| a.weight * (normal::cdf((-theta - a.mean) / s) + normal::cdf((a.mean - theta) / s)))
            .sum()
    }

    pub fn w(&self) -> f64 {
        (1.0 - self.epsilon) * self.w0() + self.epsilon * self.w1()
    }

    /// `q0(x) / q(x)`, evaluated through `q1 / q0` so that it stays accurate
    /// where both densities underflow.
    pub fn ratio(&self, x: f64) -> Result<f64, TheoryError> {
        if x == 0.0 {
            return Err(TheoryError::ZeroArgument);
        }
        Ok(self.ratio_unchecked(x))
    }

    fn ratio_unchecked(&self, x: f64) -> f64 {
        let u = self.preimage(x);
        let t2 = self.tau * self.tau;
        let odds: f64 = self
            .atoms
            .iter()
            .zip(&self.sds)
            .map(|(a, &s)| {
                let d = u - a.mean;
                a.weight * (self.tau / s) * (u * u / (2.0 * t2) - d * d / (2.0 * s * s)).exp()
            })
            .sum();
        1.0 / ((1.0 - self.epsilon) + self.epsilon * odds)
    }

    /// Local false discovery rate `(1 - eps) q0(x) / q(x)`.
    pub fn lfdr(&self, x: f64) -> Result<f64, TheoryError> {
        Ok((1.0 - self.epsilon) * self.ratio(x)?)
    }

    /// Large-sample limit of the plug-in lfdr estimate, which overstates
    /// `1 - eps` by the share of nonnulls estimated as exactly zero.
    pub fn lfdr_hat_limit(&self, x: f64) -> Result<f64, TheoryError> {
        let r = self.ratio(x)?;
        let extra = self.epsilon * (1.0 - self.w1()) / (1.0 - self.w0());
        Ok((1.0 - self.epsilon) * r + extra * r)
    }

    /// Null fraction among estimates in `[s, t]`, in the limit.
    pub fn interval_fdp_limit(&self, s: f64, t: f64) -> Result<f64, TheoryError> {
        let (lo, hi) = (s.min(t), s.max(t));
        if !(lo > 0.0 || hi < 0.0) {
            return Err(TheoryError::StraddlesZero { lo, hi });
        }
        let p0 = self.null_mass(lo, hi);
        let p1 = self.nonnull_mass(lo, hi);
        Ok(fdp_ratio((1.0 - self.epsilon) * p0, self.epsilon * p1))
    }

    fn null_mass(&self, lo: f64, hi: f64) -> f64 {
        eta_mass(0.0, self.tau, self.theta(), lo, hi)
    }

    fn nonnull_mass(&self, lo: f64, hi: f64) -> f64 {
        let theta = self.theta();
        self.atoms
            .iter()
            .zip(&self.sds)
            .map(|(a, &s)| a.weight * eta_mass(a.mean, s, theta, lo, hi))
            .sum()
    }

    /// Tabulates the ratio for repeated level-set queries.
    pub fn profile(&self, opts: &LevelSetOptions) -> RatioProfile {
        let tau = self.tau;
        let spread = self
            .atoms
            .iter()
            .zip(&self.sds)
            .map(|(a, &s)| a.mean.abs() + opts.tail_sds * s)
            .fold(opts.tail_sds * tau, f64::max);
        let inner = opts.zero_radius * tau;
        let n = ((spread - inner) / tau * opts.points_per_tau).ceil().max(2.0) as usize;
        let h = (spread - inner) / n as f64;
        let grid: Vec<f64> = (0..=n).map(|i| inner + h * i as f64).collect();
        let pos = grid.iter().map(|&x| self.ratio_unchecked(x)).collect();
        let neg = grid.iter().map(|&x| self.ratio_unchecked(-x)).collect();
        RatioProfile {
            density: self.clone(),
            grid,
            pos,
            neg,
            endpoint_tol: opts.endpoint_tol,
        }
    }

    pub fn level_set(&self, t: f64, opts: &LevelSetOptions) -> Result<LevelSet, TheoryError> {
        self.profile(opts).level_set(t)
    }
}

/// `a / (a + b)` with `0/0 = 0`.
fn fdp_ratio(false_mass: f64, true_mass: f64) -> f64 {
    let total = false_mass + true_mass;
    if total > 0.0 {
        false_mass / total
    } else {
        0.0
    }
}

/// `{x : q0(x)/q(x) <= t}` as disjoint intervals away from zero. Infinite
/// endpoints mark unbounded tails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub threshold: f64,
    pub intervals: Vec<(f64, f64)>,
}

impl LevelSet {
    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }
}

/// The ratio `q0/q` sampled on a symmetric grid `+-[Delta, L]`.
#[derive(Clone, Debug)]
pub struct RatioProfile {
    density: DensityPair,
    grid: Vec<f64>,
    pos: Vec<f64>,
    neg: Vec<f64>,
    endpoint_tol: f64,
}

impl RatioProfile {
    pub fn density(&self) -> &DensityPair {
        &self.density
    }

    /// Largest ratio on the grid; any `t` above it selects everything.
    pub fn max_ratio(&self) -> f64 {
        self.pos.iter().chain(&self.neg).copied().fold(0.0, f64::max)
    }

    pub fn min_ratio(&self) -> f64 {
        self.pos.iter().chain(&self.neg).copied().fold(f64::INFINITY, f64::min)
    }

    fn crossing(&self, sign: f64, mut a: f64, mut b: f64, t: f64) -> f64 {
        let inside_a = self.density.ratio_unchecked(sign * a) <= t;
        while (b - a).abs() > self.endpoint_tol {
            let m = 0.5 * (a + b);
            if (self.density.ratio_unchecked(sign * m) <= t) == inside_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Intervals in `|x|` on one side, as (start, end) magnitudes.
    fn side(&self, sign: f64, values: &[f64], t: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start = if values[0] <= t { Some(self.grid[0]) } else { None };
        for i in 1..values.len() {
            let (was, is) = (values[i - 1] <= t, values[i] <= t);
            if was == is {
                continue;
            }
            let x = self.crossing(sign, self.grid[i - 1], self.grid[i], t);
            if is {
                start = Some(x);
            } else if let Some(s) = start.take() {
                out.push((s, x));
            }
        }
        if let Some(s) = start {
            out.push((s, f64::INFINITY));
        }
        out
    }

    pub fn level_set(&self, t: f64) -> Result<LevelSet, TheoryError> {
        if !(t > 0.0) {
            return Err(TheoryError::Threshold(t));
        }
        let mut intervals: Vec<(f64, f64)> = self
            .side(-1.0, &self.neg, t)
            .into_iter()
            .rev()
            .map(|(a, b)| (-b, -a))
            .collect();
        intervals.extend(self.side(1.0, &self.pos, t));
        Ok(LevelSet {
            threshold: t,
            intervals,
        })
    }

    /// `(fdp*, tpp*)` of the oracle rule `q0/q <= t`.
    pub fn oracle_point(&self, t: f64) -> Result<(f64, f64), TheoryError> {
        let set = self.level_set(t)?;
        Ok(self.masses_to_point(&set))
    }

    fn masses_to_point(&self, set: &LevelSet) -> (f64, f64) {
        let d = &self.density;
        let (mut p0, mut p1) = (0.0, 0.0);
        for &(a, b) in &set.intervals {
            p0 += d.null_mass(a, b);
            p1 += d.nonnull_mass(a, b);
        }
        let eps = d.epsilon;
        (fdp_ratio((1.0 - eps) * p0, eps * p1), p1)
    }
}

/// Which selection rule a theoretical curve describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Variables enter as the penalty decreases; threshold column is `lambda`.
    Lasso,
    /// `|beta_hat| > t` at fixed `lambda`.
    ThresholdedLasso,
    /// `q0/q <= t`; also the limit of the empirical-Bayes rule.
    OracleLfdr,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub tpp: f64,
    pub fdp: f64,
}

/// Points ordered by increasing tpp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub method: Method,
    pub lambda: f64,
    pub points: Vec<CurvePoint>,
}

/// `(fdp^L, tpp^L)` at a solved pair.
pub fn lasso_tradeoff(prior: &PriorSpec, sol: &SeSolution) -> (f64, f64) {
    thresholded_lasso_tradeoff(prior, sol, 0.0)
}

/// `(fdp^TL, tpp^TL)` for the rule `|beta_hat| > t` at a solved pair.
pub fn thresholded_lasso_tradeoff(prior: &PriorSpec, sol: &SeSolution, t: f64) -> (f64, f64) {
    tl_point(prior, sol.alpha, sol.tau, t)
}

fn tl_point(prior: &PriorSpec, alpha: f64, tau: f64, t: f64) -> (f64, f64) {
    let eps = prior.epsilon();
    let tpp = prior.tail_prob_nonnull(alpha, tau, t);
    let nulls = 2.0 * (1.0 - eps) * normal::cdf(-alpha - t / tau);
    (fdp_ratio(nulls, eps * tpp), tpp)
}

fn bisect_monotone<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, target: f64, tol: f64) -> f64 {
    // f is monotone on [lo, hi] with target between f(lo) and f(hi)
    let increasing = f(hi) >= f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v - target).abs() <= tol || (hi - lo).abs() <= 1e-15 * mid.abs().max(1e-300) {
            return mid;
        }
        if (v < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The oracle lfdr rule at one penalty.
#[derive(Clone, Debug)]
pub struct OracleTheory {
    pub lambda: f64,
    profile: RatioProfile,
    opts: LevelSetOptions,
}

impl OracleTheory {
    pub fn new(prior: &PriorSpec, sol: &SeSolution, opts: &LevelSetOptions) -> Self {
        Self {
            lambda: sol.lambda,
            profile: DensityPair::from_solution(prior, sol).profile(opts),
            opts: *opts,
        }
    }

    pub fn from_density(density: &DensityPair, lambda: f64, opts: &LevelSetOptions) -> Self {
        Self {
            lambda,
            profile: density.profile(opts),
            opts: *opts,
        }
    }

    pub fn profile(&self) -> &RatioProfile {
        &self.profile
    }

    pub fn density(&self) -> &DensityPair {
        &self.profile.density
    }

    /// `(fdp*, tpp*)` at threshold `t`.
    pub fn point(&self, t: f64) -> Result<(f64, f64), TheoryError> {
        self.profile.oracle_point(t)
    }

    /// A threshold at or above which every nonzero estimate is selected.
    pub fn full_threshold(&self) -> f64 {
        self.profile.max_ratio() * (1.0 + 1e-9)
    }

    pub fn max_tpp(&self) -> f64 {
        self.density().w1()
    }

    /// The `t` with `tpp*(t) = target`.
    pub fn calibrate(&self, target: f64) -> Result<f64, TheoryError> {
        let max = self.point(self.full_threshold())?.1;
        if !(target > 0.0 && target <= max) {
            return Err(TheoryError::Unreachable { target, max });
        }
        let lo = self.profile.min_ratio() * (1.0 - 1e-9);
        let hi = self.full_threshold();
        let tpp = |t: f64| self.profile.oracle_point(t).map(|p| p.1).unwrap_or(0.0);
        Ok(bisect_monotone(tpp, lo.max(f64::MIN_POSITIVE), hi, target, self.opts.tpp_tol))
    }

    pub fn fdp_at_tpp(&self, tpp: f64) -> Option<f64> {
        let t = self.calibrate(tpp).ok()?;
        Some(self.point(t).ok()?.0)
    }

    /// Curve with `n` points equally spaced in tpp over `(0, max]`.
    pub fn curve(&self, n: usize) -> Result<TradeoffCurve, TheoryError> {
        let max = self.point(self.full_threshold())?.1;
        let points = (1..=n)
            .into_par_iter()
            .map(|j| {
                let target = max * j as f64 / n as f64;
                let t = if j == n { self.full_threshold() } else { self.calibrate(target)? };
                let (fdp, tpp) = self.point(t)?;
                Ok(CurvePoint { threshold: t, tpp, fdp })
            })
            .collect::<Result<Vec<_>, TheoryError>>()?;
        Ok(TradeoffCurve {
            method: Method::OracleLfdr,
            lambda: self.lambda,
            points,
        })
    }
}

/// Thresholded Lasso at one penalty.
#[derive(Clone, Debug)]
pub struct ThresholdedLassoTheory {
    prior: PriorSpec,
    sol: SeSolution,
}

impl ThresholdedLassoTheory {
    pub fn new(prior: &PriorSpec, sol: &SeSolution) -> Self {
        Self {
            prior: prior.clone(),
            sol: *sol,
        }
    }

    pub fn point(&self, t: f64) -> (f64, f64) {
        thresholded_lasso_tradeoff(&self.prior, &self.sol, t)
    }

    pub fn max_tpp(&self) -> f64 {
        self.point(0.0).1
    }

    /// The threshold with `tpp^TL(t) = target`.
    pub fn threshold_for(&self, target: f64) -> Option<f64> {
        let max = self.max_tpp();
        if !(target > 0.0 && target <= max) {
            return None;
        }
        let mut hi = self.sol.tau;
        while self.point(hi).1 > target {
            hi *= 2.0;
        }
        Some(bisect_monotone(|t| self.point(t).1, 0.0, hi, target, 1e-12))
    }

    pub fn fdp_at_tpp(&self, tpp: f64) -> Option<f64> {
        Some(self.point(self.threshold_for(tpp)?).0)
    }

    pub fn curve(&self, n: usize) -> TradeoffCurve {
        let max = self.max_tpp();
        let points = (1..=n)
            .map(|j| {
                let t = if j == n { 0.0 } else { self.threshold_for(max * j as f64 / n as f64).unwrap_or(0.0) };
                let (fdp, tpp) = self.point(t);
                CurvePoint { threshold: t, tpp, fdp }
            })
            .collect();
        TradeoffCurve {
            method: Method::ThresholdedLasso,
            lambda: self.sol.lambda,
            points,
        }
    }
}

/// The Lasso path as the penalty varies, parametrized by `alpha`.
#[derive(Clone, Debug)]
pub struct LassoTheory {
    model: SeModel,
    tol: SeTolerances,
    alpha_lo: f64,
}

impl LassoTheory {
    pub fn new(model: &SeModel, tol: &SeTolerances) -> Self {
        let mut alpha_lo = model.alpha_min(tol) + tol.alpha_offset;
        // step off alpha_min until the inner iteration converges
        while model.tau_fixed_point(alpha_lo, tol).is_err() && alpha_lo < tol.alpha_upper {
            alpha_lo = model.alpha_min(tol) + 2.0 * (alpha_lo - model.alpha_min(tol));
        }
        Self {
            model: model.clone(),
            tol: tol.clone(),
            alpha_lo,
        }
    }

    /// `(lambda, fdp^L, tpp^L)` at a given `alpha`.
    pub fn at_alpha(&self, alpha: f64) -> Result<(f64, f64, f64), TheoryError> {
        let tau = self.model.tau_fixed_point(alpha, &self.tol)?;
        let lambda = self.model.lambda_at(alpha, tau);
        let (fdp, tpp) = tl_point(&self.model.prior, alpha, tau, 0.0);
        Ok((lambda, fdp, tpp))
    }

    pub fn max_tpp(&self) -> f64 {
        self.at_alpha(self.alpha_lo).map(|p| p.2).unwrap_or(0.0)
    }

    fn alpha_for(&self, target: f64) -> Option<f64> {
        if !(target > 0.0 && target <= self.max_tpp()) {
            return None;
        }
        let tpp = |a: f64| self.at_alpha(a).map(|p| p.2).unwrap_or(0.0);
        Some(bisect_monotone(tpp, self.alpha_lo, self.tol.alpha_upper, target, 1e-12))
    }

    pub fn fdp_at_tpp(&self, tpp: f64) -> Option<f64> {
        Some(self.at_alpha(self.alpha_for(tpp)?).ok()?.1)
    }

    /// `n` points equally spaced in tpp; threshold column holds `lambda`.
    pub fn curve(&self, n: usize) -> Result<TradeoffCurve, TheoryError> {
        let max = self.max_tpp();
        let points = (1..=n)
            .into_par_iter()
            .filter_map(|j| {
                let alpha = if j == n { Some(self.alpha_lo) } else { self.alpha_for(max * j as f64 / n as f64) };
                alpha.map(|a| self.at_alpha(a))
            })
            .map(|r| r.map(|(lambda, fdp, tpp)| CurvePoint { threshold: lambda, tpp, fdp }))
            .collect::<Result<Vec<_>, TheoryError>>()?;
        Ok(TradeoffCurve {
            method: Method::Lasso,
            lambda: f64::NAN,
            points,
        })
    }
}

/// Standalone form of [`OracleTheory::point`].
pub fn oracle_tradeoff(density: &DensityPair, t: f64, opts: &LevelSetOptions) -> Result<(f64, f64), TheoryError> {
    density.profile(opts).oracle_point(t)
}

/// Standalone form of [`OracleTheory::calibrate`].
pub fn calibrate_threshold(density: &DensityPair, target_tpp: f64, opts: &LevelSetOptions) -> Result<f64, TheoryError> {
    OracleTheory::from_density(density, f64::NAN, opts).calibrate(target_tpp)
}

/// One entry of [`fdp_vs_lambda`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdpAtLambda {
    pub lambda: f64,
    pub threshold: Option<f64>,
    pub fdp: Option<f64>,
    pub error: Option<String>,
}

/// Oracle fdp at a fixed tpp, as a function of the penalty.
pub fn fdp_vs_lambda(
    model: &SeModel,
    target_tpp: f64,
    lambdas: &[f64],
    tol: &SeTolerances,
    opts: &LevelSetOptions,
) -> Result<Vec<FdpAtLambda>, TheoryError> {
    let map = model.lambda_map(tol)?;
    Ok(lambdas
        .par_iter()
        .map(|&lambda| {
            let res = map
                .solve(lambda, tol)
                .map_err(TheoryError::from)
                .and_then(|sol| {
                    let o = OracleTheory::new(&model.prior, &sol, opts);
                    let t = o.calibrate(target_tpp)?;
                    Ok((t, o.point(t)?.0))
                });
            match res {
                Ok((t, fdp)) => FdpAtLambda {
                    lambda,
                    threshold: Some(t),
                    fdp: Some(fdp),
                    error: None,
                },
                Err(e) => FdpAtLambda {
                    lambda,
                    threshold: None,
                    fdp: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{presets, Component};
    use crate::quad::{integrate, QuadOptions};

    fn solved(prior: &PriorSpec, delta: f64, lambda: f64) -> SeSolution {
        SeModel::new(prior.clone(), 1.0, delta)
            .unwrap()
            .solve(lambda, &SeTolerances::default())
            .unwrap()
    }

    fn integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let opts = QuadOptions { abs_tol: 1e-12, max_subdivisions: 4000 };
        integrate(|x| Ok(f(x)), a, b, &opts).unwrap()
    }

    #[test]
    fn densities_integrate_to_their_masses() {
        let p = presets::bimodal_gaussian_signal();
        let d = DensityPair::new(&p, 1.19, 1.21);
        let l = 40.0;
        let m0 = integral(|x| d.q0(x), -l, 0.0) + integral(|x| d.q0(x), 0.0, l);
        assert!((m0 - d.w0()).abs() < 1e-8);
        let m = integral(|x| d.q(x), -l, 0.0) + integral(|x| d.q(x), 0.0, l);
        assert!((m - d.w()).abs() < 1e-8);
        let mix = integral(|x| (1.0 - d.epsilon()) * d.q0(x) + d.epsilon() * d.q1(x), 0.0, l);
        assert!((mix - integral(|x| d.q(x), 0.0, l)).abs() < 1e-8);
    }

    #[test]
    fn ratio_matches_direct_quotient() {
        let d = DensityPair::new(&presets::two_point_signal(), 1.1, 1.3);
        for &x in &[-5.0, -1.0, 0.2, 2.5, 6.0] {
            let r = d.ratio(x).unwrap();
            assert!((r - d.q0(x) / d.q(x)).abs() < 1e-12);
        }
        assert_eq!(d.ratio(0.0), Err(TheoryError::ZeroArgument));
    }

    #[test]
    fn null_prior_lfdr_is_one() {
        let p = presets::gaussian_signal().with_epsilon(0.0).unwrap();
        let d = DensityPair::new(&p, 1.0, 1.0);
        for &x in &[-3.0, -0.1, 0.5, 4.0] {
            assert_eq!(d.lfdr(x).unwrap(), 1.0);
            assert_eq!(d.lfdr_hat_limit(x).unwrap(), 1.0);
            assert_eq!(d.interval_fdp_limit(x, x + 0.3 * x.signum()).unwrap(), 1.0);
        }
    }

    #[test]
    fn symmetric_prior_has_even_lfdr() {
        let p = PriorSpec::new(0.2, vec![Component::point(0.5, -3.0), Component::point(0.5, 3.0)]).unwrap();
        let d = DensityPair::new(&p, 1.2, 1.4);
        for &x in &[0.3, 1.0, 2.7, 5.0] {
            assert!((d.lfdr(x).unwrap() - d.lfdr(-x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn lfdr_hat_limit_dominates() {
        let p = presets::bimodal_gaussian_signal();
        let d = DensityPair::from_solution(&p, &solved(&p, 1.0, 1.0));
        for k in -30..=30 {
            let x = 0.2 * k as f64 + 0.01;
            assert!(d.lfdr_hat_limit(x).unwrap() >= d.lfdr(x).unwrap());
        }
    }

    #[test]
    fn shrinking_interval_approaches_lfdr() {
        let p = presets::bimodal_gaussian_signal();
        let d = DensityPair::new(&p, 1.19, 1.21);
        for &x in &[-3.0, 1.5, 4.0] {
            let a = d.interval_fdp_limit(x - 5e-5, x + 5e-5).unwrap();
            let b = d.interval_fdp_limit(x - 5e-7, x + 5e-7).unwrap();
            assert!((a - b).abs() < 1e-3);
            assert!((b - d.lfdr(x).unwrap()).abs() < 1e-4);
        }
        assert!(d.interval_fdp_limit(-0.5, 0.5).is_err());
    }

    #[test]
    fn level_set_endpoints_hit_threshold() {
        let p = presets::bimodal_gaussian_signal();
        let d = DensityPair::new(&p, 1.19, 1.21);
        let set = d.level_set(0.6, &LevelSetOptions::default()).unwrap();
        assert!(!set.intervals.is_empty());
        for &(a, b) in &set.intervals {
            for e in [a, b] {
                if e.is_finite() {
                    assert!((d.ratio(e).unwrap() - 0.6).abs() < 1e-8, "endpoint {e}");
                }
            }
            assert!(a >= 1e-3 * 1.21 || b <= -1e-3 * 1.21);
        }
    }

    #[test]
    fn tiny_threshold_gives_empty_set() {
        let p = presets::gaussian_signal();
        let d = DensityPair::new(&p, 1.2, 1.2);
        let set = d.level_set(1e-300, &LevelSetOptions::default()).unwrap();
        assert!(set.intervals.is_empty());
        assert_eq!(oracle_tradeoff(&d, 1e-300, &LevelSetOptions::default()).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn null_prior_oracle_selects_nulls_only() {
        let p = presets::gaussian_signal().with_epsilon(0.0).unwrap();
        let d = DensityPair::new(&p, 1.0, 1.0);
        let (fdp, _) = oracle_tradeoff(&d, 1.0, &LevelSetOptions::default()).unwrap();
        assert_eq!(fdp, 1.0);
    }

    #[test]
    fn oracle_tpp_nondecreasing() {
        let p = presets::two_point_signal();
        let o = OracleTheory::new(&p, &solved(&p, 1.0, 1.0), &LevelSetOptions::default());
        let mut last = 0.0;
        for k in 1..=60 {
            let (_, tpp) = o.point(0.02 * k as f64).unwrap();
            assert!(tpp + 1e-15 >= last);
            last = tpp;
        }
    }

    #[test]
    fn calibration_round_trip() {
        let p = presets::bimodal_gaussian_signal();
        let o = OracleTheory::new(&p, &solved(&p, 1.0, 1.0), &LevelSetOptions::default());
        let (_, tpp) = o.point(0.3).unwrap();
        let t = o.calibrate(tpp).unwrap();
        assert!((o.point(t).unwrap().1 - tpp).abs() < 1e-8);
        assert!(matches!(o.calibrate(0.9999), Err(TheoryError::Unreachable { .. })));
    }

    #[test]
    fn thresholded_lasso_limits() {
        let p = presets::gaussian_signal();
        let s = solved(&p, 2.0, 1.0);
        assert_eq!(thresholded_lasso_tradeoff(&p, &s, 0.0), lasso_tradeoff(&p, &s));
        assert_eq!(thresholded_lasso_tradeoff(&p, &s, f64::INFINITY), (0.0, 0.0));
        let c = ThresholdedLassoTheory::new(&p, &s).curve(200);
        assert!(c.points.windows(2).all(|w| w[1].tpp >= w[0].tpp && w[1].threshold <= w[0].threshold));
    }

    #[test]
    fn lasso_tradeoff_limits() {
        let dense = PriorSpec::new(1.0, vec![Component::point(1.0, 2.0)]).unwrap();
        let (fdp, _) = lasso_tradeoff(&dense, &solved(&dense, 2.0, 1.0));
        assert_eq!(fdp, 0.0);
        let far = PriorSpec::new(0.1, vec![Component::point(1.0, 1e3)]).unwrap();
        let sol = SeSolution { alpha: 1.0, tau: 1.0, lambda: 1.0, residual_tau: 0.0, residual_lambda: 0.0 };
        assert!((lasso_tradeoff(&far, &sol).1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn curves_are_ordered() {
        let p = presets::gaussian_signal();
        let model = SeModel::new(p.clone(), 1.0, 2.0).unwrap();
        let tol = SeTolerances::default();
        let lasso = LassoTheory::new(&model, &tol).curve(50).unwrap();
        assert!(lasso.points.windows(2).all(|w| w[1].tpp >= w[0].tpp - 1e-12));
        let oracle = OracleTheory::new(&p, &solved(&p, 2.0, 1.0), &LevelSetOptions::default())
            .curve(50)
            .unwrap();
        assert_eq!(oracle.points.len(), 50);
        for c in [&lasso, &oracle] {
            assert!(c.points.iter().all(|q| (0.0..=1.0).contains(&q.tpp) && (0.0..=1.0).contains(&q.fdp)));
        }
    }
}
