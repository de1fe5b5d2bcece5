//! Sparse mixture priors `Pi = (1 - eps) delta_0 + eps Pi_1`, where `Pi_1` is a
//! finite mixture of Gaussians and nonzero point masses.
//!
//! Besides sampling, the prior knows how to evaluate expectations over the
//! scalar channel `(eta_{alpha tau}(Pi + tau Z), Pi)`: generically by adaptive
//! quadrature ([`PriorSpec::expect_psi`]) and, for the handful of moments the
//! state evolution needs, in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal::{self, thresholded_moments};
use crate::quad::{integrate_panels, QuadError, QuadOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorError {
    #[error("epsilon must lie in [0, 1], got {0}")]
    Epsilon(f64),
    #[error("nonnull component list is empty")]
    NoComponents,
    #[error("component weights must be nonnegative and sum to 1 (sum = {sum})")]
    Weights { sum: f64 },
    #[error("component {index}: {reason}")]
    Component { index: usize, reason: String },
    #[error("expectation needs tau > 0 and alpha >= 0 (alpha = {alpha}, tau = {tau})")]
    Channel { alpha: f64, tau: f64 },
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("psi is not finite at (denoised = {denoised}, truth = {truth})")]
    NonFinitePsi { denoised: f64, truth: f64 },
    #[error("quadrature failed: {0}")]
    Quadrature(QuadError),
}

/// Shape of one component of the nonnull distribution `Pi_1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Gaussian { mean: f64, var: f64 },
    Point(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    #[serde(rename = "w")]
    pub weight: f64,
    #[serde(flatten)]
    pub kind: ComponentKind,
}

impl Component {
    pub fn gaussian(weight: f64, mean: f64, var: f64) -> Self {
        Self {
            weight,
            kind: ComponentKind::Gaussian { mean, var },
        }
    }

    pub fn point(weight: f64, location: f64) -> Self {
        Self {
            weight,
            kind: ComponentKind::Point(location),
        }
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            ComponentKind::Gaussian { mean, .. } => mean,
            ComponentKind::Point(x) => x,
        }
    }

    pub fn var(&self) -> f64 {
        match self.kind {
            ComponentKind::Gaussian { var, .. } => var,
            ComponentKind::Point(_) => 0.0,
        }
    }
}

/// A Gaussian atom `w * N(mean, var)` of the full prior; `var == 0` is a point
/// mass. The null atom is `(1 - eps, 0, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Atom {
    pub weight: f64,
    pub mean: f64,
    pub var: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPrior {
    epsilon: f64,
    components: Vec<Component>,
}

/// The prior `Pi = (1 - eps) delta_0 + eps Pi_1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior", into = "RawPrior")]
pub struct PriorSpec {
    epsilon: f64,
    components: Vec<Component>,
}

impl TryFrom<RawPrior> for PriorSpec {
    type Error = PriorError;
    fn try_from(raw: RawPrior) -> Result<Self, Self::Error> {
        PriorSpec::new(raw.epsilon, raw.components)
    }
}

impl From<PriorSpec> for RawPrior {
    fn from(p: PriorSpec) -> Self {
        RawPrior {
            epsilon: p.epsilon,
            components: p.components,
        }
    }
}

const WEIGHT_TOL: f64 = 1e-12;

impl PriorSpec {
    pub fn new(epsilon: f64, components: Vec<Component>) -> Result<Self, PriorError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(PriorError::Epsilon(epsilon));
        }
        if components.is_empty() {
            return Err(PriorError::NoComponents);
        }
        let mut sum = 0.0;
        for (index, c) in components.iter().enumerate() {
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(PriorError::Weights { sum: f64::NAN });
            }
            sum += c.weight;
            let bad = |reason: &str| PriorError::Component {
                index,
                reason: reason.to_string(),
            };
            match c.kind {
                ComponentKind::Point(x) => {
                    if !x.is_finite() || x == 0.0 {
                        return Err(bad("point-mass location must be finite and nonzero"));
                    }
                }
                ComponentKind::Gaussian { mean, var } => {
                    if !(mean.is_finite() && var.is_finite() && var >= 0.0) {
                        return Err(bad("gaussian needs finite mean and variance >= 0"));
                    }
                    if var == 0.0 && mean == 0.0 {
                        return Err(bad("degenerate gaussian at zero puts nonnull mass at 0"));
                    }
                }
            }
        }
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(PriorError::Weights { sum });
        }
        Ok(Self {
            epsilon,
            components,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Same nonnull distribution with a different sparsity level.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self, PriorError> {
        Self::new(epsilon, self.components.clone())
    }

    pub(crate) fn nonnull_atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        self.components.iter().map(|c| Atom {
            weight: c.weight,
            mean: c.mean(),
            var: c.var(),
        })
    }

    /// All atoms of `Pi`, null first, weights summing to one.
    pub(crate) fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::with_capacity(self.components.len() + 1);
        out.push(Atom {
            weight: 1.0 - self.epsilon,
            mean: 0.0,
            var: 0.0,
        });
        out.extend(self.nonnull_atoms().map(|a| Atom {
            weight: self.epsilon * a.weight,
            ..a
        }));
        out
    }

    /// Largest `|mean|` over nonnull components.
    pub fn max_abs_mean(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.mean().abs())
            .fold(0.0, f64::max)
    }

    pub fn second_moment(&self) -> f64 {
        self.epsilon
            * self
                .nonnull_atoms()
                .map(|a| a.weight * (a.mean * a.mean + a.var))
                .sum::<f64>()
    }

    /// Whether `Pi` is invariant under negation.
    pub fn is_symmetric(&self) -> bool {
        let atoms: Vec<Atom> = self.nonnull_atoms().collect();
        atoms.iter().all(|a| {
            let mirrored: f64 = atoms
                .iter()
                .filter(|b| b.mean == -a.mean && b.var == a.var)
                .map(|b| b.weight)
                .sum();
            let same: f64 = atoms
                .iter()
                .filter(|b| b.mean == a.mean && b.var == a.var)
                .map(|b| b.weight)
                .sum();
            (mirrored - same).abs() < WEIGHT_TOL
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.gen::<f64>() >= self.epsilon {
            return 0.0;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let last = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc || i == last {
                return match c.kind {
                    ComponentKind::Point(x) => x,
                    ComponentKind::Gaussian { mean, var } => {
                        let z: f64 = rng.sample(StandardNormal);
                        mean + var.sqrt() * z
                    }
                };
            }
        }
        unreachable!("component list is nonempty")
    }

    /// `n` i.i.d. draws of `Pi` from an RNG stream the caller owns.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// `P(|Pi_1 + tau Z| >= alpha tau + extra)`, exact through Gaussian CDFs.
    pub fn tail_prob_nonnull(&self, alpha: f64, tau: f64, extra: f64) -> f64 {
        let cut = alpha * tau + extra;
        if cut.is_infinite() {
            return 0.0;
        }
        self.nonnull_atoms()
            .map(|a| {
                let s = (a.var + tau * tau).sqrt();
                a.weight * (normal::cdf((-cut - a.mean) / s) + normal::cdf((a.mean - cut) / s))
            })
            .sum()
    }

    /// `P(|Pi + tau Z| > theta)` over the full prior.
    pub fn prob_exceeds(&self, theta: f64, tau: f64) -> f64 {
        self.atoms()
            .iter()
            .map(|a| {
                let s = (a.var + tau * tau).sqrt();
                a.weight * (normal::cdf((-theta - a.mean) / s) + normal::cdf((a.mean - theta) / s))
            })
            .sum()
    }

    /// Closed-form `E[(eta_theta(Pi + tau Z) - Pi)^2]`.
    ///
    /// For a Gaussian atom `N(m, v)` the posterior mean `E[Pi | X]` is linear
    /// in `X = Pi + tau Z`, which reduces the cross term to first moments of
    /// `eta(X)` and, via Stein's identity, to `v P(|X| > theta)`.
    pub fn soft_threshold_mse(&self, theta: f64, tau: f64) -> f64 {
        self.atoms()
            .iter()
            .map(|a| {
                let s = (a.var + tau * tau).sqrt();
                let m = thresholded_moments(a.mean, s, theta);
                let cross = a.mean * m.first + a.var * m.exceed;
                a.weight * (m.second - 2.0 * cross + a.mean * a.mean + a.var)
            })
            .sum::<f64>()
            .max(0.0)
    }

    /// `E(Z + alpha; X < -alpha tau) - E(Z - alpha; X > alpha tau)` with
    /// `X = Pi + tau Z`. Vanishes where `alpha` minimizes the channel MSE at
    /// fixed `tau`.
    pub fn mse_stationarity(&self, alpha: f64, tau: f64) -> f64 {
        let theta = alpha * tau;
        self.atoms()
            .iter()
            .map(|at| {
                let s = (at.var + tau * tau).sqrt();
                let a = (theta - at.mean) / s;
                let b = (-theta - at.mean) / s;
                // E[Z | X] = (tau / s^2)(X - m)
                let r = tau / s;
                let lower = -r * normal::pdf(b) + alpha * normal::cdf(b);
                let upper = r * normal::pdf(a) - alpha * normal::cdf(-a);
                at.weight * (lower - upper)
            })
            .sum()
    }

    /// `E[psi(eta_{alpha tau}(Pi + tau Z), Pi)]` by adaptive quadrature.
    ///
    /// Point atoms need a single integral over `Z`. Gaussian atoms integrate
    /// over `X = Pi + tau Z ~ N(m, v + tau^2)` and, inside, over the
    /// conditional law of `Pi` given `X`. Outer panels are split at the
    /// soft-threshold kinks `+-alpha tau`.
    pub fn expect_psi<F>(
        &self,
        alpha: f64,
        tau: f64,
        psi: F,
        opts: &ExpectOptions,
    ) -> Result<f64, PriorError>
    where
        F: Fn(f64, f64) -> f64,
    {
        if !(tau > 0.0 && alpha >= 0.0 && tau.is_finite() && alpha.is_finite()) {
            return Err(PriorError::Channel { alpha, tau });
        }
        let theta = alpha * tau;
        let quad = QuadOptions {
            abs_tol: opts.abs_tol,
            max_subdivisions: opts.max_subdivisions,
        };
        let mut bad: Option<(f64, f64)> = None;
        let mut eval = |denoised: f64, truth: f64| -> Result<f64, QuadError> {
            let v = psi(denoised, truth);
            if v.is_finite() {
                Ok(v)
            } else {
                bad = Some((denoised, truth));
                Err(QuadError::NonFinite { x: denoised })
            }
        };

        let mut total = 0.0;
        let mut run = || -> Result<(), QuadError> {
            for atom in self.atoms() {
                if atom.weight == 0.0 {
                    continue;
                }
                let s = (atom.var + tau * tau).sqrt();
                let (lo, hi) = (atom.mean - opts.n_sd * s, atom.mean + opts.n_sd * s);
                let breaks = panel_breaks(lo, hi, theta);
                let value = if atom.var == 0.0 {
                    let mut f = |x: f64| {
                        let dens = normal::pdf((x - atom.mean) / s) / s;
                        Ok(dens * eval(normal::soft_threshold(x, theta), atom.mean)?)
                    };
                    integrate_panels(&mut f, &breaks, &quad)?
                } else {
                    let shrink = atom.var / (s * s);
                    let cond_sd = (atom.var * tau * tau).sqrt() / s;
                    let mut f = |x: f64| {
                        let dens = normal::pdf((x - atom.mean) / s) / s;
                        let denoised = normal::soft_threshold(x, theta);
                        let center = atom.mean + shrink * (x - atom.mean);
                        let mut g = |y: f64| {
                            let w = normal::pdf((y - center) / cond_sd) / cond_sd;
                            Ok(w * eval(denoised, y)?)
                        };
                        let inner = integrate_panels(
                            &mut g,
                            &[center - opts.n_sd * cond_sd, center + opts.n_sd * cond_sd],
                            &quad,
                        )?;
                        Ok(dens * inner)
                    };
                    integrate_panels(&mut f, &breaks, &quad)?
                };
                total += atom.weight * value;
            }
            Ok(())
        };
        match run() {
            Ok(()) => Ok(total),
            Err(QuadError::NonFinite { .. }) => {
                let (denoised, truth) = bad.unwrap_or((f64::NAN, f64::NAN));
                Err(PriorError::NonFinitePsi { denoised, truth })
            }
            Err(e) => Err(PriorError::Quadrature(e)),
        }
    }
}

fn panel_breaks(lo: f64, hi: f64, theta: f64) -> Vec<f64> {
    let mut b = vec![lo];
    for k in [-theta, theta] {
        if k > lo && k < hi && b.last() != Some(&k) {
            b.push(k);
        }
    }
    b.push(hi);
    b
}

/// Quadrature settings for [`PriorSpec::expect_psi`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpectOptions {
    pub abs_tol: f64,
    /// Truncation half-width in effective standard deviations.
    pub n_sd: f64,
    pub max_subdivisions: usize,
}

impl Default for ExpectOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            n_sd: 10.0,
            max_subdivisions: 4000,
        }
    }
}

/// `n` i.i.d. draws from `spec`, reproducible from `seed`.
pub fn sample_prior(spec: &PriorSpec, n: usize, seed: u64) -> Result<Vec<f64>, PriorError> {
    if n == 0 {
        return Err(PriorError::EmptySample);
    }
    // fields are private, but a deserialized spec went through validation too
    PriorSpec::new(spec.epsilon, spec.components.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(spec.sample_with(&mut rng, n))
}

/// The benchmark priors used throughout the examples and tests (all with
/// `eps = 0.1`).
pub mod presets {
    use super::{Component, PriorSpec};

    /// `Pi_1 = N(3.5, 1)`.
    pub fn gaussian_signal() -> PriorSpec {
        PriorSpec::new(0.1, vec![Component::gaussian(1.0, 3.5, 1.0)]).unwrap()
    }

    /// `Pi_1 = 0.2 N(-3.6, 1) + 0.8 N(4, 1)`.
    pub fn bimodal_gaussian_signal() -> PriorSpec {
        PriorSpec::new(
            0.1,
            vec![
                Component::gaussian(0.2, -3.6, 1.0),
                Component::gaussian(0.8, 4.0, 1.0),
            ],
        )
        .unwrap()
    }

    /// `Pi_1 = delta_{-4.3}`.
    pub fn point_signal() -> PriorSpec {
        PriorSpec::new(0.1, vec![Component::point(1.0, -4.3)]).unwrap()
    }

    /// `Pi_1 = 0.2 delta_{-2} + 0.8 delta_3`.
    pub fn two_point_signal() -> PriorSpec {
        PriorSpec::new(0.1, vec![Component::point(0.2, -2.0), Component::point(0.8, 3.0)]).unwrap()
    }

    /// The four signal distributions paired with their short names.
    pub fn benchmark() -> Vec<(&'static str, PriorSpec)> {
        vec![
            ("gaussian", gaussian_signal()),
            ("bimodal-gaussian", bimodal_gaussian_signal()),
            ("point", point_signal()),
            ("two-point", two_point_signal()),
        ]
    }
}
