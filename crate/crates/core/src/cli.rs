//! Command-line front end. Every subcommand writes JSON or CSV to stdout
//! (or to the file it is told to emit) and logs to stderr.
//!
//! Exit codes: 0 on success, 2 for usage and input errors, 1 when a
//! numerical routine fails.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::eb::{self, build_path, EbOptions, Kde, PathInputs};
use crate::lasso::{self, DesignProblem, LassoOptions};
use crate::prior::{presets, PriorSpec};
use crate::sim::{self, ExperimentConfig, RunContext};
use crate::state_evolution::{SeModel, SeTolerances};
use crate::theory::{DensityPair, LassoTheory, LevelSetOptions, OracleTheory, ThresholdedLassoTheory, TradeoffCurve};

/// Numerical settings loadable with `--tol-config`. Missing keys keep
/// their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    pub se: SeTolerances,
    pub level_set: LevelSetOptions,
    pub lasso: LassoOptions,
    pub eb: EbOptions,
}

#[derive(Debug, Parser)]
#[command(name = "ampsel", version, allow_negative_numbers = true, about = "State evolution, FDP/TPP tradeoffs and empirical-Bayes selection for the Lasso")]
pub struct Cli {
    /// Seed for fold shuffling and simulation (overrides config files).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file with numerical tolerances.
    #[arg(long, global = true, value_name = "FILE")]
    pub tol_config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// State-evolution fixed point and optimal penalty.
    #[command(subcommand)]
    Se(SeCommand),
    /// Asymptotic tradeoff curves and local false discovery rates.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Lasso fits on a data file.
    #[command(subcommand)]
    Lasso(LassoCommand),
    /// Empirical-Bayes selection on a data file.
    #[command(subcommand)]
    Eb(EbCommand),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Estimated lfdr (and windowed FDP when the truth is known) on a data file.
    Lfdr(LfdrArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Prior JSON file, or one of gaussian, bimodal-gaussian, point, two-point.
    #[arg(long)]
    pub prior: String,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub delta: f64,
}

#[derive(Debug, Subcommand)]
pub enum SeCommand {
    /// Solve for (alpha, tau) at a penalty.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        lambda: f64,
    },
    /// Penalty minimizing tau; with --kfold, its cross-validation limit.
    OptimalLambda {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        kfold: Option<usize>,
        #[arg(long)]
        lambda_lo: Option<f64>,
        #[arg(long)]
        lambda_hi: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CurveMethod {
    Lasso,
    Tlasso,
    /// Oracle curve, which the EB selector attains in the limit.
    Eb,
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// CSV `threshold,tpp,fdp`, equally spaced in tpp.
    Curve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        method: CurveMethod,
        /// Penalty (not used by the lasso curve, which sweeps it).
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// CSV `x,lfdr,lfdr_hat_limit`.
    Lfdr {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        lambda: f64,
        /// `lo:hi:n` or a comma-separated list; zero is skipped.
        #[arg(long, default_value = "-8:8:161", allow_hyphen_values = true)]
        x_grid: XGrid,
    },
}

#[derive(Debug, Subcommand)]
pub enum LassoCommand {
    /// JSON fit summary with coefficients.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        lambda: f64,
    },
}

/// A penalty, or `cv` for K-fold cross-validation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaArg {
    Value(f64),
    Cv,
}

impl FromStr for LambdaArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("cv") {
            return Ok(LambdaArg::Cv);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(LambdaArg::Value(v)),
            _ => Err(format!("expected a positive number or `cv`, got `{s}`")),
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectionArgs {
    /// CSV with the response in the first column.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub lambda: LambdaArg,
    #[arg(long, default_value_t = 10)]
    pub kfold: usize,
    /// One-column CSV of true coefficients.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Fixed kernel bandwidth.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub bandwidth_scale: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum EbCommand {
    /// Writes `index,beta_hat,statistic,is_null` in selection order and
    /// prints the estimates as JSON.
    Select {
        #[command(flatten)]
        selection: SelectionArgs,
        /// Output CSV (`-` for stdout).
        #[arg(long)]
        emit: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Runs an experiment and writes `<out>/<name>/`.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Also write `curves.svg`.
        #[arg(long)]
        svg: bool,
    },
}

#[derive(Debug, Args)]
pub struct LfdrArgs {
    #[command(flatten)]
    pub selection: SelectionArgs,
    #[arg(long, default_value = "-8:8:161", allow_hyphen_values = true)]
    pub x_grid: XGrid,
    /// Half-width of the windows for windowed FDP.
    #[arg(long, default_value_t = 0.4)]
    pub half_width: f64,
}

/// Evaluation points for x-indexed outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct XGrid(pub Vec<f64>);

impl FromStr for XGrid {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number `{t}` in grid"));
        let parts: Vec<&str> = s.split(':').collect();
        let pts = if parts.len() == 3 {
            let (lo, hi) = (num(parts[0])?, num(parts[1])?);
            let n: usize = parts[2].trim().parse().map_err(|_| format!("bad count `{}`", parts[2]))?;
            if n < 2 || !(hi > lo) {
                return Err(format!("grid `{s}` needs lo < hi and n >= 2"));
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        let pts: Vec<f64> = pts.into_iter().filter(|x| *x != 0.0).collect();
        if pts.is_empty() {
            return Err("grid has no nonzero points".into());
        }
        Ok(XGrid(pts))
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable inputs.
    Usage(String),
    /// A numerical routine failed.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    dispatch_to(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`dispatch`] with explicit output streams.
pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render().ansi());
                    2
                }
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let tol = match &cli.tol_config {
        Some(p) => serde_json::from_str::<ToleranceConfig>(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => ToleranceConfig::default(),
    };
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.threads {
            if t == 0 {
                return Err(usage("--threads must be at least 1"));
            }
            b = b.num_threads(t);
        }
        b.build().map_err(numerical)?
    };
    let mut buf: Vec<u8> = Vec::new();
    pool.install(|| {
        let sink = &mut buf;
        match &cli.command {
            Command::Se(c) => se(c, &tol, sink),
            Command::Theory(c) => theory(c, &tol, sink),
            Command::Lasso(LassoCommand::Fit { data, lambda }) => lasso_fit(data, *lambda, &tol, sink),
            Command::Eb(EbCommand::Select { selection, emit }) => eb_select(selection, emit, cli.seed, &tol, sink),
            Command::Sim(SimCommand::Run { config, out: dir, svg }) => sim_run(config, dir, *svg, cli.seed, sink),
            Command::Lfdr(args) => lfdr(args, cli.seed, &tol, sink),
        }
    })?;
    out.write_all(&buf).map_err(numerical)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Loads a prior from a JSON file, falling back to the named presets.
pub fn load_prior(arg: &str) -> Result<PriorSpec, CliError> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some((_, p)) = presets::benchmark().into_iter().find(|(n, _)| *n == arg) {
            return Ok(p);
        }
    }
    serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{arg}: {e}")))
}

fn model(args: &ModelArgs) -> Result<SeModel, CliError> {
    SeModel::new(load_prior(&args.prior)?, args.sigma, args.delta).map_err(usage)
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), CliError> {
    writeln!(out, "{}", serde_json::to_string_pretty(value).map_err(numerical)?).map_err(numerical)
}

fn se(cmd: &SeCommand, tol: &ToleranceConfig, out: &mut Vec<u8>) -> Result<(), CliError> {
    match cmd {
        SeCommand::Solve { model: m, lambda } => {
            let s = model(m)?.solve(*lambda, &tol.se).map_err(numerical)?;
            write_json(
                out,
                &json!({
                    "alpha": s.alpha,
                    "tau": s.tau,
                    "lambda": s.lambda,
                    "residuals": { "tau": s.residual_tau, "lambda": s.residual_lambda },
                }),
            )
        }
        SeCommand::OptimalLambda { model: m, kfold, lambda_lo, lambda_hi } => {
            let model = model(m)?;
            let mut se_tol = tol.se.clone();
            if let Some(lo) = lambda_lo {
                se_tol.lambda_search[0] = *lo;
            }
            if let Some(hi) = lambda_hi {
                se_tol.lambda_search[1] = *hi;
            }
            let effective = match kfold {
                Some(k) if *k < 2 => return Err(usage("--kfold must be at least 2")),
                Some(k) => (*k as f64 - 1.0) * model.delta / *k as f64,
                None => model.delta,
            };
            let o = model.optimal_lambda(effective, &se_tol).map_err(numerical)?;
            write_json(
                out,
                &json!({
                    "lambda": o.lambda,
                    "alpha": o.alpha,
                    "tau": o.tau,
                    "effective_delta": o.effective_delta,
                    "kfold": kfold,
                    "stationarity": o.stationarity,
                }),
            )
        }
    }
}

/// The asymptotic curve for `method`, built with `n` points.
pub fn theory_curve(
    model: &SeModel,
    method: CurveMethod,
    lambda: Option<f64>,
    n: usize,
    tol: &ToleranceConfig,
) -> Result<TradeoffCurve, CliError> {
    if n < 2 {
        return Err(usage("--grid must be at least 2"));
    }
    if method == CurveMethod::Lasso {
        return LassoTheory::new(model, &tol.se).curve(n).map_err(numerical);
    }
    let lambda = lambda.ok_or_else(|| usage("--lambda is required for this method"))?;
    let sol = model.solve(lambda, &tol.se).map_err(numerical)?;
    match method {
        CurveMethod::Tlasso => Ok(ThresholdedLassoTheory::new(&model.prior, &sol).curve(n)),
        _ => OracleTheory::new(&model.prior, &sol, &tol.level_set).curve(n).map_err(numerical),
    }
}

fn theory(cmd: &TheoryCommand, tol: &ToleranceConfig, out: &mut Vec<u8>) -> Result<(), CliError> {
    match cmd {
        TheoryCommand::Curve { model: m, method, lambda, grid } => {
            let curve = theory_curve(&model(m)?, *method, *lambda, *grid, tol)?;
            sim::write_curve_csv(out, curve.points.iter().map(|p| (p.threshold, p.tpp, p.fdp))).map_err(numerical)
        }
        TheoryCommand::Lfdr { model: m, lambda, x_grid } => {
            let model = model(m)?;
            let sol = model.solve(*lambda, &tol.se).map_err(numerical)?;
            let d = DensityPair::from_solution(&model.prior, &sol);
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["x", "lfdr", "lfdr_hat_limit"]).map_err(numerical)?;
            for &x in &x_grid.0 {
                let l = d.lfdr(x).map_err(numerical)?;
                let h = d.lfdr_hat_limit(x).map_err(numerical)?;
                w.write_record([x.to_string(), l.to_string(), h.to_string()]).map_err(numerical)?;
            }
            w.flush().map_err(numerical)
        }
    }
}

fn parse_row(record: &csv::StringRecord) -> Option<Vec<f64>> {
    record.iter().map(|f| f.trim().parse::<f64>().ok()).collect()
}

/// Reads a CSV with the response in the first column and the design in
/// the rest. A non-numeric first row is treated as a header.
pub fn read_data(path: &Path) -> Result<DesignProblem, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| usage(format!("{}: {e}", path.display())))?;
        match parse_row(&rec) {
            Some(v) if v.len() >= 2 => {
                y.push(v[0]);
                rows.push(v[1..].to_vec());
            }
            None if i == 0 => continue,
            _ => return Err(usage(format!("{}: row {} is not numeric with at least two columns", path.display(), i + 1))),
        }
    }
    DesignProblem::from_rows(&rows, y).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Writes `problem` in the layout [`read_data`] expects, with header
/// `y,x1,...,xp`.
pub fn write_data(path: &Path, problem: &DesignProblem) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(usage)?;
    let mut header = vec!["y".to_string()];
    header.extend((1..=problem.p()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(numerical)?;
    for i in 0..problem.n() {
        let mut row = vec![problem.y()[i].to_string()];
        row.extend((0..problem.p()).map(|j| problem.column(j)[i].to_string()));
        w.write_record(&row).map_err(numerical)?;
    }
    w.flush().map_err(numerical)
}

/// Reads one coefficient per line; a non-numeric first line is a header.
pub fn read_truth(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.split(',').next().unwrap_or("").trim().parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(usage(format!("{}: line {} is not a number", path.display(), i + 1))),
        }
    }
    Ok(out)
}

fn lasso_fit(data: &Path, lambda: f64, tol: &ToleranceConfig, out: &mut Vec<u8>) -> Result<(), CliError> {
    let problem = read_data(data)?;
    let fit = lasso::fit(&problem, lambda, None, &tol.lasso).map_err(numerical)?;
    write_json(
        out,
        &json!({
            "lambda": fit.lambda,
            "n": problem.n(),
            "p": problem.p(),
            "support_size": fit.support_size,
            "objective": fit.objective,
            "duality_gap": fit.duality_gap,
            "sweeps": fit.sweeps,
            "beta": fit.beta,
        }),
    )
}

struct Selection {
    problem: DesignProblem,
    lambda: f64,
    lambda_cv: Option<f64>,
    fit: lasso::LassoFit,
    estimates: eb::EbEstimates,
    kde: Kde,
    truth: Option<Vec<f64>>,
    options: EbOptions,
}

fn select(args: &SelectionArgs, seed: Option<u64>, tol: &ToleranceConfig) -> Result<Selection, CliError> {
    let problem = read_data(&args.data)?;
    let truth = args.truth.as_deref().map(read_truth).transpose()?;
    if let Some(t) = &truth {
        if t.len() != problem.p() {
            return Err(usage(format!("truth has {} entries but the design has {} columns", t.len(), problem.p())));
        }
    }
    let (lambda, lambda_cv) = match args.lambda {
        LambdaArg::Value(v) => (v, None),
        LambdaArg::Cv => {
            let cv = lasso::cross_validate(&problem, args.kfold, &lasso::default_cv_grid(), seed.unwrap_or(0), &tol.lasso)
                .map_err(usage)?;
            info!("cross-validation chose lambda = {}", cv.lambda_cv);
            (cv.lambda_cv, Some(cv.lambda_cv))
        }
    };
    let fit = lasso::fit(&problem, lambda, None, &tol.lasso).map_err(numerical)?;
    let mut options = tol.eb;
    if args.bandwidth.is_some() {
        options.bandwidth = args.bandwidth;
    }
    if let Some(s) = args.bandwidth_scale {
        options.bandwidth_scale = s;
    }
    let estimates = eb::estimate(&problem, &fit, &options).map_err(numerical)?;
    if estimates.eps_hat != estimates.eps_hat_raw {
        warn!("eps estimate {} clipped to {}", estimates.eps_hat_raw, estimates.eps_hat);
    }
    let kde = Kde::new(&fit.beta, estimates.bandwidth).map_err(numerical)?;
    Ok(Selection { problem, lambda, lambda_cv, fit, estimates, kde, truth, options })
}

fn eb_select(args: &SelectionArgs, emit: &Path, seed: Option<u64>, tol: &ToleranceConfig, out: &mut Vec<u8>) -> Result<(), CliError> {
    let s = select(args, seed, tol)?;
    let placeholder;
    let truth = match &s.truth {
        Some(t) => t.as_slice(),
        None => {
            placeholder = vec![0.0; s.problem.p()];
            &placeholder
        }
    };
    let path = build_path(&s.fit.beta, truth, PathInputs::Eb { estimates: &s.estimates, kde: &s.kde }).map_err(numerical)?;

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["index", "beta_hat", "statistic", "is_null"]).map_err(numerical)?;
        for &i in path.order() {
            let is_null = if s.truth.is_some() { path.is_null[i].to_string() } else { String::new() };
            w.write_record([i.to_string(), s.fit.beta[i].to_string(), path.statistics[i].to_string(), is_null])
                .map_err(numerical)?;
        }
        w.flush().map_err(numerical)?;
    }
    if emit.as_os_str() == "-" {
        out.write_all(&buf).map_err(numerical)?;
        return Ok(());
    }
    fs::write(emit, &buf).map_err(|e| usage(format!("{}: {e}", emit.display())))?;
    write_json(
        out,
        &json!({
            "lambda": s.lambda,
            "lambda_cv": s.lambda_cv,
            "selected": path.order().len(),
            "estimates": s.estimates,
            "path": emit,
        }),
    )
}

fn lfdr(args: &LfdrArgs, seed: Option<u64>, tol: &ToleranceConfig, out: &mut Vec<u8>) -> Result<(), CliError> {
    let s = select(&args.selection, seed, tol)?;
    if !(args.half_width > 0.0) {
        return Err(usage("--half-width must be positive"));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x", "q_hat", "lfdr_hat"];
    if s.truth.is_some() {
        header.push("windowed_fdp");
    }
    w.write_record(&header).map_err(numerical)?;
    for &x in &args.x_grid.0 {
        let q = s.kde.eval(x);
        let l = match eb::lfdr_hat(&s.estimates, &s.kde, x, &s.options) {
            Ok(v) => v.to_string(),
            Err(_) => String::new(),
        };
        let mut row = vec![x.to_string(), q.to_string(), l];
        if let Some(t) = &s.truth {
            row.push(match sim::windowed_fdp(&s.fit.beta, t, x, args.half_width) {
                Ok(v) => v.to_string(),
                Err(_) => String::new(),
            });
        }
        w.write_record(&row).map_err(numerical)?;
    }
    w.flush().map_err(numerical)
}

fn sim_run(config: &Path, dir: &Path, svg: bool, seed: Option<u64>, out: &mut Vec<u8>) -> Result<(), CliError> {
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&read(config)?).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(usage)?;
    let output = sim::run_with(&cfg, &RunContext::default()).map_err(numerical)?;
    let run_dir = sim::write_outputs(dir, &output).map_err(usage)?;
    if svg {
        let doc = sim::render_svg(&run_dir, &output.report).map_err(numerical)?;
        fs::write(run_dir.join("curves.svg"), doc).map_err(usage)?;
    }
    let r = &output.report;
    write_json(
        out,
        &json!({
            "name": r.name,
            "dir": run_dir,
            "n": r.n,
            "p": r.p,
            "replications": output.records.len(),
            "failures": r.failures,
            "theory_lambda": r.theory_lambda,
            "methods": r.methods.iter().map(|m| json!({
                "method": m.method,
                "mad_vs_theory": m.mad_vs_theory,
                "sup_vs_theory": m.sup_vs_theory,
            })).collect::<Vec<_>>(),
            "eb_oracle_sup": r.eb_oracle_sup,
            "lambda_cv_mean": r.lambda_cv_mean,
            "lambda_cv_se": r.lambda_cv_se,
            "seconds": r.seconds,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = dispatch_to(std::iter::once("ampsel").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn lambda_arg_parsing() {
        assert_eq!("cv".parse::<LambdaArg>().unwrap(), LambdaArg::Cv);
        assert_eq!("0.5".parse::<LambdaArg>().unwrap(), LambdaArg::Value(0.5));
        assert!("-1".parse::<LambdaArg>().is_err());
        assert!("abc".parse::<LambdaArg>().is_err());
    }

    #[test]
    fn x_grid_parsing() {
        let g: XGrid = "-1:1:5".parse().unwrap();
        assert_eq!(g.0, vec![-1.0, -0.5, 0.5, 1.0]);
        let g: XGrid = "1, 2.5".parse().unwrap();
        assert_eq!(g.0, vec![1.0, 2.5]);
        assert!("0".parse::<XGrid>().is_err());
        assert!("1:0:3".parse::<XGrid>().is_err());
    }

    #[test]
    fn missing_prior_is_a_usage_error() {
        let (code, out, err) = run(&["se", "solve", "--delta", "2", "--lambda", "1"]);
        assert_eq!(code, 2);
        assert!(out.is_empty());
        assert!(err.contains("--prior") && err.contains("Usage"), "{err}");
    }

    #[test]
    fn malformed_prior_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("prior.json");
        fs::write(&p, "{\"epsilon\": 0.1").unwrap();
        let (code, _, err) = run(&["se", "solve", "--prior", p.to_str().unwrap(), "--delta", "2", "--lambda", "1"]);
        assert_eq!(code, 2, "{err}");
    }

    #[test]
    fn se_solve_emits_json() {
        let (code, out, err) = run(&["se", "solve", "--prior", "gaussian", "--delta", "2", "--lambda", "1"]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["residuals"]["tau"].as_f64().unwrap() < 1e-8);
        assert!(v["alpha"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn unreachable_lambda_is_numerical() {
        let (code, _, _) = run(&["se", "solve", "--prior", "gaussian", "--delta", "2", "--lambda", "1e6"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn tlasso_curve_needs_lambda() {
        let (code, _, err) = run(&["theory", "curve", "--prior", "gaussian", "--delta", "2", "--method", "tlasso"]);
        assert_eq!(code, 2, "{err}");
    }
}
