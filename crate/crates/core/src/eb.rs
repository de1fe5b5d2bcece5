//! Empirical-Bayes lfdr selection from a single Lasso fit, and empirical
//! FDP/TPP sweeps along any ranking of the variables.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lasso::{DesignProblem, LassoFit};
use crate::normal;
use crate::theory::DensityPair;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EbError {
    #[error("support size {support} is not below n = {n}")]
    SupportTooLarge { support: usize, n: usize },
    #[error("fit has {got} coefficients, problem has p = {p}")]
    Length { p: usize, got: usize },
    #[error("density estimate is undefined at x = 0")]
    ZeroArgument,
    #[error("density estimate vanishes at x = {0}")]
    EmptyDensity(f64),
    #[error("bandwidth must be positive, got {0}")]
    Bandwidth(f64),
    #[error("statistics, truth and mask lengths differ")]
    PathLengths,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EbOptions {
    /// Fixed kernel bandwidth; `None` uses the rule-of-thumb.
    pub bandwidth: Option<f64>,
    /// Multiplier on the rule-of-thumb bandwidth.
    pub bandwidth_scale: f64,
    /// lfdr estimates are clipped to `[0, 1 + lfdr_margin]`.
    pub lfdr_margin: f64,
}

impl Default for EbOptions {
    fn default() -> Self {
        Self {
            bandwidth: None,
            bandwidth_scale: 1.0,
            lfdr_margin: 0.1,
        }
    }
}

/// Plug-in estimates of the two-groups quantities from one Lasso fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EbEstimates {
    pub lambda: f64,
    pub p: usize,
    pub support_size: usize,
    pub w_hat: f64,
    pub tau_hat: f64,
    pub alpha_tau_hat: f64,
    pub alpha_hat: f64,
    pub w0_hat: f64,
    /// Clipped to `[0, 1]`.
    pub eps_hat: f64,
    pub eps_hat_raw: f64,
    pub bandwidth: f64,
}

impl EbEstimates {
    /// `(1/tau) phi((x + alpha tau sign(x)) / tau)` at the estimated values.
    pub fn q0_hat(&self, x: f64) -> Result<f64, EbError> {
        if x == 0.0 {
            return Err(EbError::ZeroArgument);
        }
        let u = x + self.alpha_tau_hat * x.signum();
        Ok(normal::pdf(u / self.tau_hat) / self.tau_hat)
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// `0.9 min(sd, IQR / 1.34) m^(-1/5)`; `None` when the spread is zero or
/// there are fewer than two values.
pub fn silverman_bandwidth(values: &[f64]) -> Option<f64> {
    let m = values.len();
    if m < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (spread > 0.0).then(|| 0.9 * spread * (m as f64).powf(-0.2))
}

/// Computes the plug-in estimates for `fit` on `problem`.
pub fn estimate(problem: &DesignProblem, fit: &LassoFit, opts: &EbOptions) -> Result<EbEstimates, EbError> {
    let (n, p) = (problem.n(), problem.p());
    if fit.beta.len() != p {
        return Err(EbError::Length { p, got: fit.beta.len() });
    }
    let support = fit.beta.iter().filter(|b| **b != 0.0).count();
    if support >= n {
        return Err(EbError::SupportTooLarge { support, n });
    }
    let shrink = 1.0 - support as f64 / n as f64;
    let r = problem.residual(&fit.beta);
    let rss: f64 = r.iter().map(|v| v * v).sum();
    let tau_hat = (rss / (n as f64 * shrink * shrink)).sqrt();
    let alpha_tau_hat = fit.lambda / shrink;
    let alpha_hat = alpha_tau_hat / tau_hat;
    let w0_hat = 2.0 * normal::cdf(-alpha_hat);
    let zeros = (p - support) as f64;
    let one_minus_eps = zeros / (p as f64 * (1.0 - w0_hat));
    let eps_hat_raw = 1.0 - one_minus_eps;
    let eps_hat = eps_hat_raw.clamp(0.0, 1.0);
    if eps_hat != eps_hat_raw {
        warn!("estimated epsilon {eps_hat_raw} clipped to {eps_hat}");
    }
    let nonzero: Vec<f64> = fit.beta.iter().copied().filter(|b| *b != 0.0).collect();
    let bandwidth = match opts.bandwidth {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(EbError::Bandwidth(h)),
        None => opts.bandwidth_scale * silverman_bandwidth(&nonzero).unwrap_or(tau_hat),
    };
    Ok(EbEstimates {
        lambda: fit.lambda,
        p,
        support_size: support,
        w_hat: support as f64 / p as f64,
        tau_hat,
        alpha_tau_hat,
        alpha_hat,
        w0_hat,
        eps_hat,
        eps_hat_raw,
        bandwidth,
    })
}

/// Gaussian-kernel estimate of `q` from the nonzero Lasso coefficients,
/// normalized by the full dimension `p`.
#[derive(Clone, Debug)]
pub struct Kde {
    sorted: Vec<f64>,
    h: f64,
    p: usize,
}

const KERNEL_REACH: f64 = 40.0;

impl Kde {
    pub fn new(beta_hat: &[f64], h: f64) -> Result<Self, EbError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(EbError::Bandwidth(h));
        }
        let mut sorted: Vec<f64> = beta_hat.iter().copied().filter(|b| *b != 0.0).collect();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            sorted,
            h,
            p: beta_hat.len(),
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.p == 0 {
            return 0.0;
        }
        let reach = KERNEL_REACH * self.h;
        let lo = self.sorted.partition_point(|v| *v < x - reach);
        let hi = self.sorted.partition_point(|v| *v <= x + reach);
        let s: f64 = self.sorted[lo..hi].iter().map(|b| normal::pdf((x - b) / self.h)).sum();
        s / (self.p as f64 * self.h)
    }
}

/// `q_hat(x)` for a single evaluation point.
pub fn kde_q(beta_hat: &[f64], h: f64, x: f64) -> Result<f64, EbError> {
    Ok(Kde::new(beta_hat, h)?.eval(x))
}

/// `(1 - eps_hat) q0_hat(x) / q_hat(x)`, clipped to `[0, 1 + margin]`.
pub fn lfdr_hat(est: &EbEstimates, kde: &Kde, x: f64, opts: &EbOptions) -> Result<f64, EbError> {
    let q = kde.eval(x);
    if q <= 0.0 {
        return Err(EbError::EmptyDensity(x));
    }
    let raw = (1.0 - est.eps_hat) * est.q0_hat(x)? / q;
    let cap = 1.0 + opts.lfdr_margin;
    if raw > cap {
        warn!("lfdr estimate {raw} at x = {x} clipped to {cap}");
    }
    Ok(raw.clamp(0.0, cap))
}

/// Whether small or large statistics are selected first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Ascending,
    Descending,
}

/// Which ranking a [`SelectionPath`] follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Eb,
    Oracle,
    ThresholdedLasso,
    LassoMax,
}

impl PathKind {
    pub fn name(self) -> &'static str {
        match self {
            PathKind::Eb => "eb",
            PathKind::Oracle => "oracle",
            PathKind::ThresholdedLasso => "thresholded_lasso",
            PathKind::LassoMax => "lasso_max",
        }
    }
}

/// Inputs that a given ranking needs beyond the coefficients.
pub enum PathInputs<'a> {
    Eb { estimates: &'a EbEstimates, kde: &'a Kde },
    Oracle { density: &'a DensityPair },
    ThresholdedLasso,
    /// Per-variable Lasso-max statistics.
    LassoMax { statistics: &'a [f64] },
}

/// Variables ranked by a statistic, with zero estimates excluded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionPath {
    pub kind: PathKind,
    pub statistics: Vec<f64>,
    pub direction: Direction,
    pub is_null: Vec<bool>,
    pub zero_mask: Vec<bool>,
    order: Vec<usize>,
}

/// Unmasked indices sorted by statistic in `direction`, ties by index.
pub fn selection_order(statistics: &[f64], direction: Direction, zero_mask: &[bool]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..statistics.len()).filter(|&i| !zero_mask[i]).collect();
    idx.sort_by(|&a, &b| {
        let c = statistics[a].total_cmp(&statistics[b]);
        let c = if direction == Direction::Descending { c.reverse() } else { c };
        c.then(a.cmp(&b))
    });
    idx
}

impl SelectionPath {
    pub fn new(
        kind: PathKind,
        statistics: Vec<f64>,
        direction: Direction,
        truth: &[f64],
        zero_mask: Vec<bool>,
    ) -> Result<Self, EbError> {
        if statistics.len() != truth.len() || zero_mask.len() != truth.len() {
            return Err(EbError::PathLengths);
        }
        let order = selection_order(&statistics, direction, &zero_mask);
        Ok(Self {
            kind,
            statistics,
            direction,
            is_null: truth.iter().map(|b| *b == 0.0).collect(),
            zero_mask,
            order,
        })
    }

    /// Indices in selection order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.statistics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statistics.is_empty()
    }
}

/// Ranks the variables for `inputs` against the true coefficients `truth`.
pub fn build_path(beta_hat: &[f64], truth: &[f64], inputs: PathInputs<'_>) -> Result<SelectionPath, EbError> {
    let mask: Vec<bool> = beta_hat.iter().map(|b| *b == 0.0).collect();
    let ratio_stat = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        beta_hat
            .iter()
            .map(|&b| if b == 0.0 { f64::INFINITY } else { f(b) })
            .collect()
    };
    match inputs {
        PathInputs::Eb { estimates, kde } => {
            let stats = ratio_stat(&|b| {
                let q = kde.eval(b);
                let q0 = estimates.q0_hat(b).unwrap_or(0.0);
                if q > 0.0 {
                    q0 / q
                } else {
                    f64::INFINITY
                }
            });
            SelectionPath::new(PathKind::Eb, stats, Direction::Ascending, truth, mask)
        }
        PathInputs::Oracle { density } => {
            let stats = ratio_stat(&|b| density.ratio(b).unwrap_or(f64::INFINITY));
            SelectionPath::new(PathKind::Oracle, stats, Direction::Ascending, truth, mask)
        }
        PathInputs::ThresholdedLasso => {
            let stats = beta_hat.iter().map(|b| b.abs()).collect();
            SelectionPath::new(PathKind::ThresholdedLasso, stats, Direction::Descending, truth, mask)
        }
        PathInputs::LassoMax { statistics } => {
            let mask = statistics.iter().map(|s| *s == 0.0).collect();
            SelectionPath::new(PathKind::LassoMax, statistics.to_vec(), Direction::Descending, truth, mask)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPoint {
    /// Number of variables selected.
    pub k: usize,
    /// Statistic of the last selected variable (`NaN` at `k = 0`).
    pub threshold: f64,
    pub fdp: f64,
    pub tpp: f64,
}

/// Realized `(fdp, tpp)` after each prefix of the path, starting at `k = 0`.
pub fn empirical_tradeoff(path: &SelectionPath) -> Vec<EmpiricalPoint> {
    let signals = path.is_null.iter().filter(|n| !**n).count();
    let mut out = Vec::with_capacity(path.order.len() + 1);
    out.push(EmpiricalPoint {
        k: 0,
        threshold: f64::NAN,
        fdp: 0.0,
        tpp: 0.0,
    });
    let (mut false_sel, mut true_sel) = (0usize, 0usize);
    for (k, &i) in path.order.iter().enumerate() {
        if path.is_null[i] {
            false_sel += 1;
        } else {
            true_sel += 1;
        }
        out.push(EmpiricalPoint {
            k: k + 1,
            threshold: path.statistics[i],
            fdp: false_sel as f64 / (k + 1) as f64,
            tpp: if signals > 0 { true_sel as f64 / signals as f64 } else { 0.0 },
        });
    }
    out
}

/// FDP and TPP of an arbitrary selected set.
pub fn fdp_tpp(selected: &[usize], truth: &[f64]) -> (f64, f64) {
    let signals = truth.iter().filter(|b| **b != 0.0).count();
    let false_sel = selected.iter().filter(|&&i| truth[i] == 0.0).count();
    let fdp = if selected.is_empty() { 0.0 } else { false_sel as f64 / selected.len() as f64 };
    let tpp = if signals == 0 { 0.0 } else { (selected.len() - false_sel) as f64 / signals as f64 };
    (fdp, tpp)
}
