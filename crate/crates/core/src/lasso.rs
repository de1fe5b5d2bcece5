//! Lasso `argmin_b 0.5 ||y - X b||^2 + lambda ||b||_1` by cyclic coordinate
//! descent, plus the Lasso-max statistic and K-fold cross-validation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal::soft_threshold;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LassoError {
    #[error("design has {got} entries, expected n * p = {n} * {p}")]
    Shape { n: usize, p: usize, got: usize },
    #[error("response has length {got}, expected {n}")]
    ResponseLength { n: usize, got: usize },
    #[error("design or response contains a non-finite value")]
    NonFinite,
    #[error("lambda must be positive and finite, got {0}")]
    Lambda(f64),
    #[error("warm start has length {got}, expected {p}")]
    WarmStart { p: usize, got: usize },
    #[error("no convergence at lambda = {lambda} after {sweeps} sweeps (duality gap {gap:e})")]
    NotConverged { lambda: f64, sweeps: usize, gap: f64 },
    #[error("lambda grid must be strictly decreasing and positive with at least {min} points")]
    Grid { min: usize },
    #[error("cross-validation needs 2 <= K <= n (K = {k}, n = {n})")]
    Folds { k: usize, n: usize },
}

/// `y = X beta + noise` with `X` stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignProblem {
    n: usize,
    p: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    col_sq: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = 4 * i;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `y += c * x`
#[inline]
fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

impl DesignProblem {
    pub fn new(n: usize, p: usize, x_col_major: Vec<f64>, y: Vec<f64>) -> Result<Self, LassoError> {
        if x_col_major.len() != n * p {
            return Err(LassoError::Shape {
                n,
                p,
                got: x_col_major.len(),
            });
        }
        if y.len() != n {
            return Err(LassoError::ResponseLength { n, got: y.len() });
        }
        if !x_col_major.iter().chain(&y).all(|v| v.is_finite()) {
            return Err(LassoError::NonFinite);
        }
        let col_sq = x_col_major.chunks_exact(n.max(1)).map(|c| dot(c, c)).collect();
        Ok(Self {
            n,
            p,
            x: x_col_major,
            y,
            col_sq,
        })
    }

    /// Builds from row-major data, one `Vec` per observation.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self, LassoError> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        let mut x = vec![0.0; n * p];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(LassoError::Shape { n, p, got: row.len() * n });
            }
            for (j, &v) in row.iter().enumerate() {
                x[j * n + i] = v;
            }
        }
        Self::new(n, p, x, y)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn column(&self, j: usize) -> &[f64] {
        &self.x[j * self.n..(j + 1) * self.n]
    }

    /// `X b`
    pub fn predict(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, &bj) in b.iter().enumerate() {
            if bj != 0.0 {
                axpy(bj, self.column(j), &mut out);
            }
        }
        out
    }

    pub fn residual(&self, b: &[f64]) -> Vec<f64> {
        let fit = self.predict(b);
        self.y.iter().zip(fit).map(|(y, f)| y - f).collect()
    }

    /// `X^T v`
    pub fn xt(&self, v: &[f64]) -> Vec<f64> {
        (0..self.p).map(|j| dot(self.column(j), v)).collect()
    }

    /// `||X^T y||_inf`, the smallest penalty with an all-zero solution.
    pub fn lambda_max(&self) -> f64 {
        self.xt(&self.y).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Subproblem on the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let n = rows.len();
        let mut x = Vec::with_capacity(n * self.p);
        for j in 0..self.p {
            let col = self.column(j);
            x.extend(rows.iter().map(|&i| col[i]));
        }
        let y = rows.iter().map(|&i| self.y[i]).collect();
        Self::new(n, self.p, x, y).expect("row subset of a valid problem")
    }

    pub fn objective(&self, b: &[f64], lambda: f64) -> f64 {
        let r = self.residual(b);
        0.5 * dot(&r, &r) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoOptions {
    /// Relative bound on the largest coefficient change in a sweep.
    pub change_tol: f64,
    /// Required `gap <= gap_tol * (1 + objective)`.
    pub gap_tol: f64,
    pub max_sweeps: usize,
    /// Magnitudes below this are set to exactly zero.
    pub zero_snap: f64,
    /// Record the objective after every sweep.
    pub trace: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            change_tol: 1e-10,
            gap_tol: 1e-8,
            max_sweeps: 100_000,
            zero_snap: 1e-12,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub support_size: usize,
    pub duality_gap: f64,
    pub objective: f64,
    pub sweeps: usize,
    /// Objective after each sweep when tracing is on.
    pub trace: Vec<f64>,
}

struct Solver<'a> {
    prob: &'a DesignProblem,
    lambda: f64,
    beta: Vec<f64>,
    resid: Vec<f64>,
    opts: &'a LassoOptions,
    gram: Option<&'a mut GramCache>,
}

impl Solver<'_> {
    /// One pass over `coords`; returns the largest coefficient change.
    fn sweep(&mut self, coords: impl Iterator<Item = usize>) -> f64 {
        let mut max_change: f64 = 0.0;
        for j in coords {
            let cs = self.prob.col_sq[j];
            if cs == 0.0 {
                continue;
            }
            let col = self.prob.column(j);
            let old = self.beta[j];
            let z = dot(col, &self.resid) + cs * old;
            let mut new = soft_threshold(z, self.lambda) / cs;
            if new.abs() < self.opts.zero_snap {
                new = 0.0;
            }
            if new != old {
                axpy(old - new, col, &mut self.resid);
                self.beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        max_change
    }

    fn l1(&self) -> f64 {
        self.beta.iter().map(|v| v.abs()).sum()
    }

    fn objective(&self) -> f64 {
        0.5 * dot(&self.resid, &self.resid) + self.lambda * self.l1()
    }

    /// Primal objective and duality gap from a freshly computed residual.
    fn gap(&mut self) -> (f64, f64) {
        self.resid = self.prob.residual(&self.beta);
        let corr = self.prob.xt(&self.resid).iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let scale = if corr > self.lambda { self.lambda / corr } else { 1.0 };
        let y = &self.prob.y;
        // dual point theta = scale * r
        let mut d = 0.0;
        for (yi, ri) in y.iter().zip(&self.resid) {
            let diff = yi - scale * ri;
            d += yi * yi - diff * diff;
        }
        let primal = self.objective();
        (primal, (primal - 0.5 * d).max(0.0))
    }

    fn max_abs(&self) -> f64 {
        self.beta.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    fn gram_entry(&mut self, j: usize, k: usize) -> f64 {
        match self.gram.as_deref_mut() {
            Some(cache) => cache.column(self.prob, j)[k],
            None => dot(self.prob.column(j), self.prob.column(k)),
        }
    }

    /// Moves toward the minimizer of the objective restricted to the sign
    /// pattern of `active`. Each time a coordinate would change sign it is
    /// set to zero and dropped, and the step restarts from there. Returns
    /// whether the minimizer was reached, or `None` if nothing moved.
    ///
    /// When the active Gram matrix is singular or too ill-conditioned the
    /// step falls back to a proximal one, `(G + mu I) b = X^T y - lambda s + mu b_old`,
    /// which slides along null directions until coordinates leave the support.
    fn newton_step(&mut self, active: &[usize]) -> Option<bool> {
        let m = active.len();
        if m == 0 {
            return None;
        }
        let mut g = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DVector::<f64>::zeros(m);
        for (a, &j) in active.iter().enumerate() {
            for (b, &k) in active.iter().enumerate().take(a + 1) {
                let v = self.gram_entry(j, k);
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
            rhs[a] = dot(self.prob.column(j), &self.prob.y) - self.lambda * self.beta[j].signum();
        }
        if m <= self.prob.n {
            if let Some(reached) = self.constrained_step(active, g.clone(), rhs.clone()) {
                return Some(reached);
            }
        }
        let mu = 1e-6 * g.trace() / m as f64;
        for (a, &j) in active.iter().enumerate() {
            g[(a, a)] += mu;
            rhs[a] += mu * self.beta[j];
        }
        self.constrained_step(active, g, rhs).map(|_| false)
    }

    fn constrained_step(&mut self, active: &[usize], g: DMatrix<f64>, mut rhs: DVector<f64>) -> Option<bool> {
        let mut chol = g.cholesky()?;
        let before = self.objective();
        let old = self.beta.clone();
        let mut idx = active.to_vec();
        let mut reached = false;
        while !idx.is_empty() {
            let target = chol.solve(&rhs);
            let mut t = 1.0;
            let mut hit = None;
            for (a, &j) in idx.iter().enumerate() {
                let (b, z) = (self.beta[j], target[a]);
                if z.signum() != b.signum() {
                    let ta = b / (b - z);
                    if ta < t {
                        t = ta;
                        hit = Some(a);
                    }
                }
            }
            for (a, &j) in idx.iter().enumerate() {
                let b = self.beta[j] + t * (target[a] - self.beta[j]);
                self.beta[j] = if Some(a) == hit || b.abs() < self.opts.zero_snap { 0.0 } else { b };
            }
            let Some(a) = hit else {
                reached = true;
                break;
            };
            idx.remove(a);
            chol = chol.remove_column(a);
            rhs = rhs.remove_row(a);
        }
        self.resid = self.prob.residual(&self.beta);
        if self.objective() > before {
            self.beta = old;
            self.resid = self.prob.residual(&self.beta);
            return None;
        }
        Some(reached)
    }
}

/// Columns of `X^T X`, computed on first use and kept for later fits on the
/// same design.
pub(crate) struct GramCache {
    cols: Vec<Option<Vec<f64>>>,
}

/// Largest `p` for which paths keep Gram columns.
const GRAM_CACHE_MAX_P: usize = 4096;

impl GramCache {
    fn for_problem(problem: &DesignProblem) -> Option<Self> {
        (problem.p <= GRAM_CACHE_MAX_P).then(|| Self { cols: vec![None; problem.p] })
    }

    fn column(&mut self, problem: &DesignProblem, j: usize) -> &[f64] {
        self.cols[j].get_or_insert_with(|| problem.xt(problem.column(j)))
    }
}

/// Fits the Lasso at `lambda`, optionally warm-started.
pub fn fit(
    problem: &DesignProblem,
    lambda: f64,
    warm_start: Option<&[f64]>,
    opts: &LassoOptions,
) -> Result<LassoFit, LassoError> {
    fit_cached(problem, lambda, warm_start, opts, None)
}

fn fit_cached(
    problem: &DesignProblem,
    lambda: f64,
    warm_start: Option<&[f64]>,
    opts: &LassoOptions,
    gram: Option<&mut GramCache>,
) -> Result<LassoFit, LassoError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(LassoError::Lambda(lambda));
    }
    let p = problem.p;
    let beta = match warm_start {
        Some(b) if b.len() != p => return Err(LassoError::WarmStart { p, got: b.len() }),
        Some(b) => b.to_vec(),
        None => vec![0.0; p],
    };
    let resid = problem.residual(&beta);
    let mut s = Solver {
        prob: problem,
        lambda,
        beta,
        resid,
        opts,
        gram,
    };
    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut gap = f64::INFINITY;
    let record = |s: &Solver, trace: &mut Vec<f64>| {
        if opts.trace {
            trace.push(s.objective());
        }
    };
    while sweeps < opts.max_sweeps {
        let change = s.sweep(0..p);
        sweeps += 1;
        record(&s, &mut trace);
        if change <= opts.change_tol * (1.0 + s.max_abs()) {
            let (primal, g) = s.gap();
            gap = g;
            if g <= opts.gap_tol * (1.0 + primal) {
                break;
            }
        }
        // iterate on the current support until it settles
        let mut active: Vec<usize> = (0..p).filter(|&j| s.beta[j] != 0.0).collect();
        // rough flop ratio of a Newton step to an active-set sweep
        let m = active.len() as f64;
        let n = problem.n as f64;
        let newton = m * m * m / 3.0 + if s.gram.is_some() { 0.0 } else { m * m * n };
        let patience = ((newton / (4.0 * m * n)) as usize).clamp(5, 1000);
        let mut since_newton = 0;
        while sweeps < opts.max_sweeps {
            let change = s.sweep(active.iter().copied());
            sweeps += 1;
            since_newton += 1;
            record(&s, &mut trace);
            if change <= opts.change_tol * (1.0 + s.max_abs()) {
                break;
            }
            if since_newton >= patience {
                since_newton = 0;
                for _ in 0..10 {
                    let Some(full) = s.newton_step(&active) else { break };
                    record(&s, &mut trace);
                    active.retain(|&j| s.beta[j] != 0.0);
                    if full {
                        break;
                    }
                }
            }
        }
    }
    let (objective, g) = s.gap();
    gap = gap.min(g);
    if g > opts.gap_tol * (1.0 + objective) {
        return Err(LassoError::NotConverged { lambda, sweeps, gap });
    }
    let support_size = s.beta.iter().filter(|v| **v != 0.0).count();
    Ok(LassoFit {
        lambda,
        beta: s.beta,
        support_size,
        duality_gap: g,
        objective,
        sweeps,
        trace,
    })
}

/// `n` log-spaced penalties from `hi` down to `lo`.
pub fn log_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    assert!(hi > 0.0 && lo > 0.0 && n >= 2);
    let step = (lo / hi).ln() / (n - 1) as f64;
    (0..n).map(|i| hi * (step * i as f64).exp()).collect()
}

/// Minimum grid length accepted by [`lasso_max_statistic`].
pub const MIN_PATH_POINTS: usize = 50;

/// Descending grid for the Lasso-max statistic, starting at `lambda_max`.
pub fn lasso_max_grid(problem: &DesignProblem, points: usize, min_ratio: f64) -> Vec<f64> {
    let hi = problem.lambda_max();
    log_grid(hi, hi * min_ratio, points.max(MIN_PATH_POINTS))
}

fn check_descending(grid: &[f64], min: usize) -> Result<(), LassoError> {
    let ok = grid.len() >= min
        && grid.iter().all(|l| *l > 0.0 && l.is_finite())
        && grid.windows(2).all(|w| w[1] < w[0]);
    if ok {
        Ok(())
    } else {
        Err(LassoError::Grid { min })
    }
}

/// For each variable, the largest grid penalty at which it is active on a
/// warm-started path (0 when it never enters).
pub fn lasso_max_statistic(
    problem: &DesignProblem,
    lambda_grid: &[f64],
    opts: &LassoOptions,
) -> Result<Vec<f64>, LassoError> {
    check_descending(lambda_grid, MIN_PATH_POINTS)?;
    let mut stat = vec![0.0; problem.p];
    let mut warm: Option<Vec<f64>> = None;
    let mut gram = GramCache::for_problem(problem);
    for &lambda in lambda_grid {
        let f = fit_cached(problem, lambda, warm.as_deref(), opts, gram.as_mut())?;
        for (s, b) in stat.iter_mut().zip(&f.beta) {
            if *s == 0.0 && *b != 0.0 {
                *s = lambda;
            }
        }
        warm = Some(f.beta);
    }
    Ok(stat)
}

/// Fits along a descending grid, reusing each solution as the next start.
pub fn fit_path(
    problem: &DesignProblem,
    lambda_grid: &[f64],
    opts: &LassoOptions,
) -> Result<Vec<LassoFit>, LassoError> {
    check_descending(lambda_grid, 1)?;
    let mut out: Vec<LassoFit> = Vec::with_capacity(lambda_grid.len());
    let mut gram = GramCache::for_problem(problem);
    for &lambda in lambda_grid {
        let f = fit_cached(problem, lambda, out.last().map(|f| f.beta.as_slice()), opts, gram.as_mut())?;
        out.push(f);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda_cv: f64,
    /// Descending grid actually used.
    pub lambdas: Vec<f64>,
    /// Mean held-out squared error per observation, aligned with `lambdas`.
    pub errors: Vec<f64>,
}

/// The default cross-validation grid: 50 log-spaced points on `[0.01, 4]`.
pub fn default_cv_grid() -> Vec<f64> {
    log_grid(4.0, 1e-2, 50)
}

/// K-fold cross-validation over `lambda_grid`. Rows are shuffled with
/// `seed` and cut into contiguous folds.
pub fn cross_validate(
    problem: &DesignProblem,
    k: usize,
    lambda_grid: &[f64],
    seed: u64,
    opts: &LassoOptions,
) -> Result<CvResult, LassoError> {
    let n = problem.n;
    if k < 2 || k > n {
        return Err(LassoError::Folds { k, n });
    }
    let mut grid = lambda_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    check_descending(&grid, 1)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut sse = vec![0.0; grid.len()];
    for f in 0..k {
        let (lo, hi) = (f * n / k, (f + 1) * n / k);
        let test: Vec<usize> = order[lo..hi].to_vec();
        let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let tr = problem.select_rows(&train);
        let te = problem.select_rows(&test);
        let path = fit_path(&tr, &grid, opts)?;
        for (acc, fit) in sse.iter_mut().zip(&path) {
            let r = te.residual(&fit.beta);
            *acc += dot(&r, &r);
        }
    }
    let errors: Vec<f64> = sse.iter().map(|s| s / n as f64).collect();
    let best = errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty grid");
    Ok(CvResult {
        lambda_cv: grid[best],
        lambdas: grid,
        errors,
    })
}
