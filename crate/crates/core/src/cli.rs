//! The `mixreg` command-line front-end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::FitConfig;
use crate::error::{Error, Result};
use crate::fit::{fit, FitSpec};
use crate::io::{self, ModelFile};
use crate::kernel::{KernelKind, KernelSpec};
use crate::params::ModelKind;
use crate::selection::search_kh;
use crate::simbench::{generate, run_experiment, ExperimentConfig, ScenarioKind, ScenarioSpec};

#[derive(Debug, Parser)]
#[command(name = "mixreg", version, about = "Robust mixtures of regressions with contaminated Gaussian errors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model; write a JSON model file and a classification CSV.
    Fit(FitArgs),
    /// Append identical (x, y) rows to a data file.
    InjectOutliers(InjectArgs),
    /// Search over (K, h) and tabulate AIC, BIC and ICL.
    Select(SelectArgs),
    /// Run a simulation study and write AVG/SD tables.
    Bench(BenchArgs),
    /// Evaluate a saved model on a dense grid (long-format CSV).
    Curves(CurvesArgs),
    /// Draw one sample from a simulation scenario.
    Simulate(SimulateArgs),
}

/// Options shared by every fitting command.
#[derive(Debug, Clone, Args)]
pub struct TuningArgs {
    #[arg(long, default_value = "gaussian")]
    pub kernel: KernelKind,
    /// Number of local points (default: min(n, 100)).
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    pub alpha_min: f64,
    /// Random starts of the linear initializer.
    #[arg(long, default_value_t = 10)]
    pub starts: usize,
}

impl TuningArgs {
    fn config(&self) -> FitConfig {
        FitConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            alpha_min: self.alpha_min,
            n_starts: self.starts,
            ..FitConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with an `x,y` header.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Bandwidth (required by every kernel-smoothed model).
    #[arg(long)]
    pub h: Option<f64>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Output model file (JSON).
    #[arg(long, default_value = "model.json")]
    pub out_model: PathBuf,
    /// Output classification CSV.
    #[arg(long, default_value = "classification.csv")]
    pub out_class: PathBuf,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Pair to append, as `X,Y`.
    #[arg(long, allow_hyphen_values = true)]
    pub pair: String,
    #[arg(long)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: ModelKind,
    /// Comma-separated component counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k_set: Vec<usize>,
    /// Comma-separated bandwidths (ignored for the linear model).
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    pub h_set: Vec<f64>,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, short, default_value = "selection.csv")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub scenario: ScenarioKind,
    #[arg(long, value_delimiter = ',', default_value = "250")]
    pub n_set: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "spgmr,spcgmr")]
    pub models: Vec<ModelKind>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.07)]
    pub h: f64,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, short, default_value = "bench.csv")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    pub model_file: PathBuf,
    #[arg(long, default_value_t = 400)]
    pub points: usize,
    #[arg(long, short, default_value = "curves.csv")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: ScenarioKind,
    #[arg(long, default_value_t = 250)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: PathBuf,
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let bad = || Error::Input(format!("--pair expects X,Y with finite numbers, got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(bad());
    }
    Ok((a, b))
}

fn kernel_for(model: ModelKind, kind: KernelKind, h: Option<f64>) -> Result<Option<KernelSpec>> {
    match (model.is_smooth(), h) {
        (false, _) => Ok(None),
        (true, Some(h)) => KernelSpec::new(kind, h).map(Some).map_err(|e| Error::Input(e.to_string())),
        (true, None) => Err(Error::Input(format!("--h is required for model {model}"))),
    }
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let (data, warnings) = io::read_xy_file(&a.input)?;
    warnings.iter().for_each(|w| eprintln!("warning: {w}"));
    let kern = kernel_for(a.model, a.tuning.kernel, a.h)?;
    let spec = FitSpec {
        k: a.k,
        // placeholder bandwidth for the linear model, which never reads it
        kernel: kern.unwrap_or(KernelSpec { kind: a.tuning.kernel, h: 1.0 }),
        grid_size: a.tuning.grid_size,
        config: a.tuning.config(),
    };
    let out = fit(&data, a.model, &spec)?;
    out.report.warnings.iter().for_each(|w| eprintln!("warning: {w}"));
    if !out.report.converged {
        eprintln!("warning: no convergence after {} iterations", out.report.iterations);
    }
    let file = ModelFile::from_fit(&out, &data, kern);
    io::write_atomic(&a.out_model, file.to_json()?.as_bytes())?;
    io::write_atomic(&a.out_class, &to_bytes(|b| io::write_classification(&data, &out, b))?)?;
    let c = out.report.criteria;
    println!(
        "{} K={} loglik={} df={} aic={} bic={} icl={} iterations={}",
        a.model, a.k, out.report.loglik, out.report.df, c.aic, c.bic, c.icl, out.report.iterations
    );
    Ok(())
}

fn cmd_inject(a: &InjectArgs) -> Result<()> {
    let (x, y) = parse_pair(&a.pair)?;
    let (data, warnings) = io::read_xy_file(&a.input)?;
    warnings.iter().for_each(|w| eprintln!("warning: {w}"));
    let out = data.with_appended(x, y, a.count)?;
    io::write_atomic(&a.output, &to_bytes(|b| io::write_xy(&out, b))?)
}

fn cmd_select(a: &SelectArgs) -> Result<()> {
    let (data, warnings) = io::read_xy_file(&a.input)?;
    warnings.iter().for_each(|w| eprintln!("warning: {w}"));
    if a.k_set.is_empty() || a.h_set.is_empty() {
        return Err(Error::Input("--k-set and --h-set must be non-empty".into()));
    }
    let h0 = a.h_set[0];
    let kernel = KernelSpec::new(a.tuning.kernel, h0).map_err(|e| Error::Input(e.to_string()))?;
    let base = FitSpec { k: a.k_set[0], kernel, grid_size: a.tuning.grid_size, config: a.tuning.config() };
    let res = search_kh(&data, a.model, &a.k_set, &a.h_set, &base)?;
    io::write_atomic(&a.output, &to_bytes(|b| res.write_csv(b))?)?;
    for (name, idx) in [("aic", res.best_aic), ("bic", res.best_bic), ("icl", res.best_icl)] {
        let (k, h) = res.chosen(idx);
        if a.model.is_smooth() {
            println!("{name}: K={k} h={h}");
        } else {
            println!("{name}: K={k}");
        }
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let kernel = KernelSpec::new(a.tuning.kernel, a.h).map_err(|e| Error::Input(e.to_string()))?;
    let cfg = ExperimentConfig {
        scenario: a.scenario,
        n_set: a.n_set.clone(),
        models: a.models.clone(),
        reps: a.reps,
        base_seed: a.tuning.seed,
        kernel,
        grid_size: a.tuning.grid_size,
        fit: a.tuning.config(),
    };
    let res = run_experiment(&cfg)?;
    for c in res.cells.iter().filter(|c| c.unreliable) {
        eprintln!("warning: {} at n={} failed {} of {} replicates", c.model, c.n, c.failures, a.reps);
    }
    io::write_atomic(&a.output, &to_bytes(|b| res.write_csv(b))?)
}

fn cmd_curves(a: &CurvesArgs) -> Result<()> {
    let model = ModelFile::load(&a.model_file)?;
    let rows = io::curve_points(&model, a.points)?;
    io::write_atomic(&a.output, &to_bytes(|b| io::write_curves(&rows, b))?)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let spec = ScenarioSpec::new(a.scenario, a.n, a.seed).map_err(|e| Error::Input(e.to_string()))?;
    let (data, _) = generate(&spec)?;
    io::write_atomic(&a.output, &to_bytes(|b| io::write_xy(&data, b))?)
}

/// Size the worker pool from `MIXREG_THREADS`, if set.
fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("MIXREG_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Input(format!("MIXREG_THREADS must be a positive integer, got '{v}'")))?;
    // a pool built earlier in the same process is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    init_threads()?;
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::InjectOutliers(a) => cmd_inject(a),
        Command::Select(a) => cmd_select(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Curves(a) => cmd_curves(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

/// Parse arguments, run, and return the process exit code
/// (0 success, 2 input error, 3 numerical or fit failure).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("0.6,2.5").unwrap(), (0.6, 2.5));
        assert_eq!(parse_pair("0, -1").unwrap(), (0.0, -1.0));
        assert!(parse_pair("0.6").is_err());
        assert!(parse_pair("a,1").is_err());
        assert!(parse_pair("inf,1").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["mixreg", "fit"]), 2);
        assert_eq!(run(["mixreg", "bogus"]), 2);
        assert_eq!(run(["mixreg", "--help"]), 0);
    }
}
