//! Monte Carlo harness: synthetic Gaussian-design datasets, every selection
//! rule over many replications, aggregation against the asymptotic curves,
//! and on-disk outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eb::{self, build_path, empirical_tradeoff, EbEstimates, EbOptions, EmpiricalPoint, Kde, PathInputs, PathKind};
use crate::lasso::{self, DesignProblem, LassoOptions};
use crate::prior::PriorSpec;
use crate::state_evolution::{SeModel, SeSolution, SeTolerances};
use crate::theory::{DensityPair, LassoTheory, LevelSetOptions, OracleTheory, ThresholdedLassoTheory};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error("theory curves unavailable: {0}")]
    Theory(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LambdaPolicy {
    Fixed {
        value: f64,
    },
    /// K-fold cross-validation over `grid` (defaults to the standard grid).
    Cv {
        folds: usize,
        #[serde(default)]
        grid: Option<Vec<f64>>,
    },
}

fn default_methods() -> Vec<PathKind> {
    vec![PathKind::Oracle, PathKind::Eb, PathKind::ThresholdedLasso]
}

fn default_grid_points() -> usize {
    200
}

fn default_path_points() -> usize {
    100
}

fn default_path_ratio() -> f64 {
    1e-2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub prior: PriorSpec,
    pub sigma: f64,
    pub delta: f64,
    pub p: usize,
    pub lambda_policy: LambdaPolicy,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<PathKind>,
    /// Points on the common tpp grid used for aggregation.
    #[serde(default = "default_grid_points")]
    pub tpp_grid_points: usize,
    /// Length of the descending penalty grid for the Lasso-max statistic.
    #[serde(default = "default_path_points")]
    pub lasso_max_points: usize,
    /// Smallest penalty on that grid relative to `||X^T y||_inf`.
    #[serde(default = "default_path_ratio")]
    pub lasso_max_min_ratio: f64,
    #[serde(default)]
    pub eb: EbOptions,
    #[serde(default)]
    pub lasso: LassoOptions,
}

impl ExperimentConfig {
    /// Fixed `lambda = 1`, one replication, oracle/EB/thresholded paths.
    pub fn new(name: &str, prior: PriorSpec, sigma: f64, delta: f64, p: usize) -> Self {
        Self {
            name: name.to_string(),
            prior,
            sigma,
            delta,
            p,
            lambda_policy: LambdaPolicy::Fixed { value: 1.0 },
            replications: 1,
            seed: 20_240_917,
            methods: default_methods(),
            tpp_grid_points: default_grid_points(),
            lasso_max_points: default_path_points(),
            lasso_max_min_ratio: default_path_ratio(),
            eb: EbOptions::default(),
            lasso: LassoOptions::default(),
        }
    }

    pub fn n(&self) -> usize {
        (self.delta * self.p as f64).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.p < 50 {
            return bad(format!("p = {} is below 50", self.p));
        }
        if self.replications < 1 {
            return bad("replications must be at least 1".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma = {} must be finite and nonnegative", self.sigma));
        }
        if !(self.delta > 0.0) || self.n() < 2 {
            return bad(format!("n = round(delta p) = {} must be at least 2", self.n()));
        }
        match &self.lambda_policy {
            LambdaPolicy::Fixed { value } if !(*value > 0.0) => bad(format!("lambda = {value} must be positive")),
            LambdaPolicy::Cv { folds, .. } if *folds < 2 || *folds > self.n() => {
                bad(format!("{folds} folds do not fit n = {}", self.n()))
            }
            _ => Ok(()),
        }
    }

    fn rng(&self, replication: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replication as u64);
        rng
    }
}

/// One synthetic dataset with its true coefficients.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub problem: DesignProblem,
    pub beta: Vec<f64>,
}

/// Draws `beta ~ prior`, `X` with i.i.d. `N(0, 1/n)` entries and
/// `y = X beta + sigma * noise`. Each replication owns its own RNG stream.
pub fn generate(config: &ExperimentConfig, replication: usize) -> Dataset {
    let (n, p) = (config.n(), config.p);
    let mut rng = config.rng(replication);
    let beta = config.prior.sample_with(&mut rng, p);
    let sd = 1.0 / (n as f64).sqrt();
    let mut x = Vec::with_capacity(n * p);
    let mut y = vec![0.0; n];
    for &bj in &beta {
        let start = x.len();
        x.extend((0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)));
        if bj != 0.0 {
            for (yi, xi) in y.iter_mut().zip(&x[start..]) {
                *yi += bj * xi;
            }
        }
    }
    if config.sigma > 0.0 {
        for yi in &mut y {
            *yi += config.sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Dataset {
        problem: DesignProblem::new(n, p, x, y).expect("generated data is well formed"),
        beta,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub replication: usize,
    pub lambda: f64,
    pub lambda_cv: Option<f64>,
    /// State evolution at the penalty used.
    pub se: Option<SeSolution>,
    pub estimates: Option<EbEstimates>,
    pub support_size: usize,
    pub curves: BTreeMap<PathKind, Vec<EmpiricalPoint>>,
    pub seconds: f64,
}

/// Per-replication error, kept in the report instead of aborting the run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunFailure {
    pub replication: usize,
    pub error: String,
}

/// `fdp` at the first prefix whose tpp reaches `target`.
pub fn fdp_at_tpp(curve: &[EmpiricalPoint], target: f64) -> Option<f64> {
    // tpp is nondecreasing along a path
    let i = curve.partition_point(|p| p.tpp < target);
    curve.get(i).map(|p| p.fdp)
}

/// `j / n` for `j = 1..=n`.
pub fn tpp_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|j| j as f64 / n as f64).collect()
}

/// Pointwise mean over the curves that reach each grid value.
pub fn mean_curve(curves: &[&[EmpiricalPoint]], grid: &[f64]) -> Vec<Option<f64>> {
    grid.iter()
        .map(|&x| {
            let vals: Vec<f64> = curves.iter().filter_map(|c| fdp_at_tpp(c, x)).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

/// Mean and max of `|a - b|` over grid points where both are defined.
pub fn curve_distance(a: &[Option<f64>], b: &[Option<f64>]) -> Option<(f64, f64, usize)> {
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).abs()))
        .collect();
    if diffs.is_empty() {
        return None;
    }
    let mad = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let sup = diffs.iter().copied().fold(0.0, f64::max);
    Some((mad, sup, diffs.len()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: PathKind,
    pub tpp_grid: Vec<f64>,
    pub mean_fdp: Vec<Option<f64>>,
    pub theory_fdp: Vec<Option<f64>>,
    pub mad_vs_theory: Option<f64>,
    pub sup_vs_theory: Option<f64>,
    pub points_compared: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub n: usize,
    pub p: usize,
    /// Penalty the theory curves were evaluated at.
    pub theory_lambda: Option<f64>,
    pub theory_se: Option<SeSolution>,
    pub methods: Vec<MethodSummary>,
    /// Sup distance between the mean EB and mean oracle curves.
    pub eb_oracle_sup: Option<f64>,
    /// Largest per-replication sup distance between EB and oracle curves.
    pub eb_oracle_sup_max_rep: Option<f64>,
    pub lambda_cv_mean: Option<f64>,
    pub lambda_cv_se: Option<f64>,
    pub failures: Vec<RunFailure>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimOutput {
    pub records: Vec<RunRecord>,
    pub report: Report,
}

/// Settings shared by all replications of a run.
#[derive(Clone, Debug, Default)]
pub struct RunContext {
    pub se: SeTolerances,
    pub level_set: LevelSetOptions,
}

fn cv_grid(policy: &LambdaPolicy) -> Vec<f64> {
    match policy {
        LambdaPolicy::Cv { grid: Some(g), .. } => g.clone(),
        _ => lasso::default_cv_grid(),
    }
}

/// Runs one replication.
pub fn run_replication(
    config: &ExperimentConfig,
    replication: usize,
    ctx: &RunContext,
    map: Option<&crate::state_evolution::LambdaMap>,
) -> Result<RunRecord, String> {
    let start = Instant::now();
    let data = generate(config, replication);
    let (lambda, lambda_cv) = match &config.lambda_policy {
        LambdaPolicy::Fixed { value } => (*value, None),
        LambdaPolicy::Cv { folds, .. } => {
            let seed = config.seed ^ (replication as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let cv = lasso::cross_validate(&data.problem, *folds, &cv_grid(&config.lambda_policy), seed, &config.lasso)
                .map_err(|e| e.to_string())?;
            (cv.lambda_cv, Some(cv.lambda_cv))
        }
    };
    let fit = lasso::fit(&data.problem, lambda, None, &config.lasso).map_err(|e| e.to_string())?;
    let se = map.and_then(|m| m.solve(lambda, &ctx.se).ok());

    let needs_eb = config.methods.contains(&PathKind::Eb);
    let estimates = if needs_eb || config.methods.is_empty() {
        Some(eb::estimate(&data.problem, &fit, &config.eb).map_err(|e| e.to_string())?)
    } else {
        None
    };

    let mut curves = BTreeMap::new();
    for &method in &config.methods {
        let path = match method {
            PathKind::Eb => {
                let est = estimates.as_ref().expect("estimates computed for eb");
                let kde = Kde::new(&fit.beta, est.bandwidth).map_err(|e| e.to_string())?;
                build_path(&fit.beta, &data.beta, PathInputs::Eb { estimates: est, kde: &kde })
            }
            PathKind::Oracle => {
                let Some(sol) = se.as_ref() else {
                    return Err(format!("state evolution unavailable at lambda = {lambda}"));
                };
                let density = DensityPair::from_solution(&config.prior, sol);
                build_path(&fit.beta, &data.beta, PathInputs::Oracle { density: &density })
            }
            PathKind::ThresholdedLasso => build_path(&fit.beta, &data.beta, PathInputs::ThresholdedLasso),
            PathKind::LassoMax => {
                let grid = lasso::lasso_max_grid(&data.problem, config.lasso_max_points, config.lasso_max_min_ratio);
                let stats = lasso::lasso_max_statistic(&data.problem, &grid, &config.lasso).map_err(|e| e.to_string())?;
                build_path(&fit.beta, &data.beta, PathInputs::LassoMax { statistics: &stats })
            }
        }
        .map_err(|e| e.to_string())?;
        curves.insert(method, empirical_tradeoff(&path));
    }
    Ok(RunRecord {
        replication,
        lambda,
        lambda_cv,
        se,
        estimates,
        support_size: fit.support_size,
        curves,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn theory_fdp(
    config: &ExperimentConfig,
    method: PathKind,
    sol: &SeSolution,
    ctx: &RunContext,
    grid: &[f64],
) -> Vec<Option<f64>> {
    match method {
        PathKind::Eb | PathKind::Oracle => {
            let o = OracleTheory::new(&config.prior, sol, &ctx.level_set);
            grid.par_iter().map(|&x| o.fdp_at_tpp(x)).collect()
        }
        PathKind::ThresholdedLasso => {
            let t = ThresholdedLassoTheory::new(&config.prior, sol);
            grid.iter().map(|&x| t.fdp_at_tpp(x)).collect()
        }
        PathKind::LassoMax => match SeModel::new(config.prior.clone(), config.sigma, config.delta) {
            Ok(model) => {
                let l = LassoTheory::new(&model, &ctx.se);
                grid.par_iter().map(|&x| l.fdp_at_tpp(x)).collect()
            }
            Err(_) => vec![None; grid.len()],
        },
    }
}

/// Runs every replication and aggregates against theory.
pub fn run(config: &ExperimentConfig) -> Result<SimOutput, SimError> {
    run_with(config, &RunContext::default())
}

pub fn run_with(config: &ExperimentConfig, ctx: &RunContext) -> Result<SimOutput, SimError> {
    config.validate()?;
    let start = Instant::now();
    let model = (config.sigma > 0.0)
        .then(|| SeModel::new(config.prior.clone(), config.sigma, config.delta))
        .transpose()
        .map_err(|e| SimError::Theory(e.to_string()))?;
    let map = model
        .as_ref()
        .map(|m| m.lambda_map(&ctx.se))
        .transpose()
        .map_err(|e| SimError::Theory(e.to_string()))?;

    let results: Vec<(usize, Result<RunRecord, String>)> = (0..config.replications)
        .into_par_iter()
        .map(|r| (r, run_replication(config, r, ctx, map.as_ref())))
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (replication, res) in results {
        match res {
            Ok(rec) => records.push(rec),
            Err(error) => {
                warn!("replication {replication} failed: {error}");
                failures.push(RunFailure { replication, error });
            }
        }
    }
    info!("{}: {} replications done", config.name, records.len());

    let theory_lambda = match &config.lambda_policy {
        LambdaPolicy::Fixed { value } => Some(*value),
        LambdaPolicy::Cv { folds, .. } => model.as_ref().and_then(|m| {
            let k = *folds as f64;
            m.optimal_lambda((k - 1.0) * config.delta / k, &ctx.se).ok().map(|o| o.lambda)
        }),
    };
    let theory_se = match (&map, theory_lambda) {
        (Some(m), Some(l)) => m.solve(l, &ctx.se).ok(),
        _ => None,
    };

    let grid = tpp_grid(config.tpp_grid_points);
    let mut methods = Vec::new();
    for &method in &config.methods {
        let curves: Vec<&[EmpiricalPoint]> = records
            .iter()
            .filter_map(|r| r.curves.get(&method).map(|c| c.as_slice()))
            .collect();
        let mean_fdp = mean_curve(&curves, &grid);
        let theory = theory_se
            .as_ref()
            .map(|s| theory_fdp(config, method, s, ctx, &grid))
            .unwrap_or_else(|| vec![None; grid.len()]);
        let dist = curve_distance(&mean_fdp, &theory);
        methods.push(MethodSummary {
            method,
            tpp_grid: grid.clone(),
            mean_fdp,
            theory_fdp: theory,
            mad_vs_theory: dist.map(|d| d.0),
            sup_vs_theory: dist.map(|d| d.1),
            points_compared: dist.map_or(0, |d| d.2),
        });
    }

    let find = |k: PathKind| methods.iter().find(|m| m.method == k);
    let eb_oracle_sup = match (find(PathKind::Eb), find(PathKind::Oracle)) {
        (Some(a), Some(b)) => curve_distance(&a.mean_fdp, &b.mean_fdp).map(|d| d.1),
        _ => None,
    };
    let eb_oracle_sup_max_rep = records
        .iter()
        .filter_map(|r| {
            let a = mean_curve(&[r.curves.get(&PathKind::Eb)?.as_slice()], &grid);
            let b = mean_curve(&[r.curves.get(&PathKind::Oracle)?.as_slice()], &grid);
            curve_distance(&a, &b).map(|d| d.1)
        })
        .reduce(f64::max);

    let cvs: Vec<f64> = records.iter().filter_map(|r| r.lambda_cv).collect();
    let (lambda_cv_mean, lambda_cv_se) = mean_and_se(&cvs);

    Ok(SimOutput {
        records,
        report: Report {
            name: config.name.clone(),
            n: config.n(),
            p: config.p,
            theory_lambda,
            theory_se,
            methods,
            eb_oracle_sup,
            eb_oracle_sup_max_rep,
            lambda_cv_mean,
            lambda_cv_se,
            failures,
            seconds: start.elapsed().as_secs_f64(),
        },
    })
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let m = values.len();
    if m == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (Some(mean), Some((var / m as f64).sqrt()))
}

/// Share of true nulls among estimates in `[center - half_width, center +
/// half_width]`; zero when the window is empty.
pub fn windowed_fdp(beta_hat: &[f64], truth: &[f64], center: f64, half_width: f64) -> Result<f64, SimError> {
    let (lo, hi) = (center - half_width, center + half_width);
    if !(lo > 0.0 || hi < 0.0) {
        return Err(SimError::Config(format!("window [{lo}, {hi}] contains zero")));
    }
    let (mut inside, mut nulls) = (0usize, 0usize);
    for (b, t) in beta_hat.iter().zip(truth) {
        if *b >= lo && *b <= hi {
            inside += 1;
            if *t == 0.0 {
                nulls += 1;
            }
        }
    }
    Ok(if inside == 0 { 0.0 } else { nulls as f64 / inside as f64 })
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    threshold: f64,
    tpp: f64,
    fdp: f64,
}

/// Writes a curve as `threshold,tpp,fdp` CSV.
pub fn write_curve_csv<W: std::io::Write>(out: W, points: impl IntoIterator<Item = (f64, f64, f64)>) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for (threshold, tpp, fdp) in points {
        w.serialize(CurveRow { threshold, tpp, fdp })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `(tpp, fdp)` pairs back from a curve CSV.
pub fn read_curve_csv(path: &Path) -> Result<Vec<(f64, f64)>, SimError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: CurveRow = row?;
        out.push((row.tpp, row.fdp));
    }
    Ok(out)
}

/// Writes `runs/<name>/rep<k>_<method>.csv` and `summary.json` under
/// `root`; returns the run directory.
pub fn write_outputs(root: &Path, output: &SimOutput) -> Result<PathBuf, SimError> {
    let dir = root.join(&output.report.name);
    fs::create_dir_all(&dir)?;
    for rec in &output.records {
        for (method, curve) in &rec.curves {
            let file = fs::File::create(dir.join(format!("rep{}_{}.csv", rec.replication, method.name())))?;
            write_curve_csv(file, curve.iter().map(|p| (p.threshold, p.tpp, p.fdp)))?;
        }
    }
    let summary = serde_json::json!({
        "report": output.report,
        "replications": output.records.iter().map(|r| serde_json::json!({
            "replication": r.replication,
            "lambda": r.lambda,
            "lambda_cv": r.lambda_cv,
            "alpha": r.se.map(|s| s.alpha),
            "tau": r.se.map(|s| s.tau),
            "estimates": r.estimates,
            "support_size": r.support_size,
            "seconds": r.seconds,
        })).collect::<Vec<_>>(),
    });
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(dir)
}

/// SVG overlay of the CSV curves in `dir` (grey) and the theory curve of
/// each method summary (black).
pub fn render_svg(dir: &Path, report: &Report) -> Result<String, SimError> {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 48.0;
    let sx = |tpp: f64| M + tpp * (W - 2.0 * M);
    let sy = |fdp: f64| H - M - fdp * (H - 2.0 * M);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - 2.0 * M, H - 2.0 * M);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">TPP</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(svg, r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})">FDP</text>"#, H / 2.0, H / 2.0);
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    for f in files {
        let pts = read_curve_csv(&f)?;
        let colour = match f.file_stem().and_then(|s| s.to_str()) {
            Some(s) if s.ends_with("_eb") => "#4a6fd1",
            Some(s) if s.ends_with("_oracle") => "#d14a4a",
            _ => "#999999",
        };
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{colour}" stroke-width="0.6" points="{}"/>"#, polyline(pts.iter().map(|&(t, f)| (sx(t), sy(f)))));
    }
    for m in &report.methods {
        let pts: Vec<(f64, f64)> = m
            .tpp_grid
            .iter()
            .zip(&m.theory_fdp)
            .filter_map(|(t, f)| f.map(|f| (sx(*t), sy(f))))
            .collect();
        let dash = if m.method == PathKind::ThresholdedLasso { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="black" stroke-width="1.5"{dash} points="{}"/>"#, polyline(pts));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn polyline(points: impl IntoIterator<Item = (f64, f64)>) -> String {
    points
        .into_iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::presets;

    fn small(p: usize) -> ExperimentConfig {
        ExperimentConfig::new("unit", presets::gaussian_signal(), 1.0, 1.0, p)
    }

    #[test]
    fn noiseless_response_is_exact() {
        let mut cfg = small(60);
        cfg.sigma = 0.0;
        let d = generate(&cfg, 2);
        let fit = d.problem.predict(&d.beta);
        for (a, b) in fit.iter().zip(d.problem.y()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn column_norms_concentrate() {
        let cfg = small(400);
        let d = generate(&cfg, 0);
        let n = cfg.n() as f64;
        let mean: f64 = (0..cfg.p)
            .map(|j| d.problem.column(j).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / cfg.p as f64;
        assert!((mean - 1.0).abs() < 3.0 / n.sqrt());
    }

    #[test]
    fn zero_fraction_in_binomial_band() {
        let cfg = small(5000);
        let d = generate(&cfg, 1);
        let zeros = d.beta.iter().filter(|b| **b == 0.0).count() as f64 / 5000.0;
        assert!((zeros - 0.9).abs() < 3.0 * (0.09f64 / 5000.0).sqrt());
    }

    #[test]
    fn replications_are_independent_streams() {
        let cfg = small(80);
        let a = generate(&cfg, 3);
        let b = generate(&cfg, 3);
        assert_eq!(a.beta, b.beta);
        assert_eq!(a.problem, b.problem);
        assert_ne!(generate(&cfg, 4).problem.y(), a.problem.y());
    }

    #[test]
    fn config_validation() {
        assert!(small(10).validate().is_err());
        let mut c = small(100);
        c.replications = 0;
        assert!(c.validate().is_err());
        c.replications = 1;
        c.lambda_policy = LambdaPolicy::Cv { folds: 1, grid: None };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let mut c = small(100);
        c.lambda_policy = LambdaPolicy::Cv { folds: 10, grid: None };
        let s = serde_json::to_string(&c).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn single_replication_single_method() {
        let mut cfg = small(200);
        cfg.methods = vec![PathKind::Eb];
        let out = run(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].curves.len(), 1);
        assert!(out.report.failures.is_empty());
    }

    #[test]
    fn step_interpolation() {
        let c = vec![
            EmpiricalPoint { k: 0, threshold: f64::NAN, fdp: 0.0, tpp: 0.0 },
            EmpiricalPoint { k: 1, threshold: 1.0, fdp: 0.0, tpp: 0.5 },
            EmpiricalPoint { k: 2, threshold: 0.5, fdp: 0.5, tpp: 0.5 },
            EmpiricalPoint { k: 3, threshold: 0.2, fdp: 1.0 / 3.0, tpp: 1.0 },
        ];
        assert_eq!(fdp_at_tpp(&c, 0.3), Some(0.0));
        assert_eq!(fdp_at_tpp(&c, 0.5), Some(0.0));
        assert_eq!(fdp_at_tpp(&c, 0.7), Some(1.0 / 3.0));
        let short = &c[..2];
        assert_eq!(fdp_at_tpp(short, 0.7), None);
        let m = mean_curve(&[&c, short], &[0.5, 0.7]);
        assert_eq!(m, vec![Some(0.0), Some(1.0 / 3.0)]);
    }

    #[test]
    fn outputs_on_disk() {
        let mut cfg = small(100);
        cfg.replications = 2;
        let out = run(&cfg).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let dir = write_outputs(tmp.path(), &out).unwrap();
        assert!(dir.join("rep0_eb.csv").exists());
        assert!(dir.join("rep1_oracle.csv").exists());
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["replications"].as_array().unwrap().len(), 2);
        let header = fs::read_to_string(dir.join("rep0_thresholded_lasso.csv")).unwrap();
        assert!(header.starts_with("threshold,tpp,fdp\n"));
        let svg = render_svg(&dir, &out.report).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    }
}
