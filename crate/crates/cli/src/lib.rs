//! Command-line front-end: dataset ingestion, report serialization and
//! plot-data emission.

pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use dtbias::estimators::{fit_npmle_unchecked, FitStatus};
use dtbias::simulate::parse_real;
use dtbias::{
    bootstrap_analysis, ecdf, npmle_cdf, run_monte_carlo, sampling_curve, sup_distance, BootstrapOptions, McOptions,
    McScenario, Model, NpmleOptions, TargetLaw,
};

use report::{sampling_bias_plot, CurvePoint, FitReport, FittedRow, PlotData, SimCell, SimReport, TestReport};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ESTIMATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dtbias::Error),
    #[error("{0}")]
    Output(String),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_estimation_failure() => EXIT_ESTIMATION,
            _ => EXIT_INPUT,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Output(_) => "IoError",
            CliError::Config(_) => "ConfigError",
        }
    }

    /// Machine-readable error record.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "dtbias", version, about = "Test for ignorable sampling bias with doubly truncated data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the NPMLE and the ECDF to a dataset.
    Fit(FitArgs),
    /// Bootstrap test of ignorable sampling bias, with standard-error ratios.
    Test(TestArgs),
    /// Monte Carlo power study and analytic sampling-bias curves.
    Simulate(SimulateArgs),
    /// Check that a dataset file is readable and valid.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Also write long-format plot data (series,x,value) to this file.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Estimation {
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    pub max_iter: usize,
}

impl Estimation {
    fn options(&self) -> NpmleOptions {
        NpmleOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub estimation: Estimation,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 500)]
    pub b: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub estimation: Estimation,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Both models, rho in {1,2,6}, sigma in {1/2,1}, n in {100,200};
    /// 1000 trials, B = 500.
    Table1,
    /// The same grid at n = 100 with 50 trials and B = 200.
    Smoke,
    /// Analytic sampling-bias curves only.
    Fig1,
}

/// Scenario grid for `simulate`, also readable from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub models: Vec<Model>,
    pub rhos: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub ns: Vec<usize>,
    pub gammas: Vec<f64>,
    pub target: TargetLaw,
    pub trials: usize,
    pub b: usize,
    pub seed: u64,
    pub curve_points: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            models: vec![Model::M1, Model::M2],
            rhos: vec![1.0, 2.0, 6.0],
            sigmas: vec![1.0, 0.5],
            ns: vec![100, 200],
            gammas: vec![0.1, 0.05, 0.01],
            target: TargetLaw::Uniform01,
            trials: 1000,
            b: 500,
            seed: 1,
            curve_points: 99,
        }
    }
}

impl SimConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Table1 => Self::default(),
            Preset::Smoke => Self {
                ns: vec![100],
                trials: 50,
                b: 200,
                ..Self::default()
            },
            Preset::Fig1 => Self {
                models: Vec::new(),
                ..Self::default()
            },
        }
    }

    /// Cells in table order: model, n, sigma, rho.
    pub fn scenarios(&self) -> Vec<McScenario> {
        let mut out = Vec::new();
        for &model in &self.models {
            for &n in &self.ns {
                for &sigma in &self.sigmas {
                    for &rho in &self.rhos {
                        out.push(McScenario {
                            model,
                            rho,
                            sigma,
                            n,
                            target: self.target,
                            gammas: self.gammas.clone(),
                            b: self.b,
                            trials: self.trials,
                            seed: self.seed,
                        });
                    }
                }
            }
        }
        out
    }
}

fn parse_real_arg(s: &str) -> std::result::Result<f64, String> {
    parse_real(s).map_err(|e| e.to_string())
}

fn parse_model_arg(s: &str) -> std::result::Result<Model, String> {
    s.parse().map_err(|e: dtbias::Error| e.to_string())
}

fn parse_target_arg(s: &str) -> std::result::Result<TargetLaw, String> {
    s.parse().map_err(|e: dtbias::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// JSON scenario grid; flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_model_arg)]
    pub model: Option<Vec<Model>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_real_arg)]
    pub rho: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_real_arg)]
    pub sigma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_real_arg)]
    pub gammas: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_target_arg)]
    pub target: Option<TargetLaw>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub b: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid size of the analytic sampling-bias curves in the plot data.
    #[arg(long)]
    pub curve_points: Option<usize>,
    #[command(flatten)]
    pub estimation: Estimation,
    #[command(flatten)]
    pub output: Output,
}

impl SimulateArgs {
    pub fn resolve(&self) -> Result<SimConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Core(dtbias::Error::Io(format!("{}: {e}", path.display()))))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            (None, Some(p)) => SimConfig::preset(p),
            (None, None) => SimConfig::default(),
        };
        if let Some(v) = &self.model {
            cfg.models = v.clone();
        }
        if let Some(v) = &self.rho {
            cfg.rhos = v.clone();
        }
        if let Some(v) = &self.sigma {
            cfg.sigmas = v.clone();
        }
        if let Some(v) = &self.n {
            cfg.ns = v.clone();
        }
        if let Some(v) = &self.gammas {
            cfg.gammas = v.clone();
        }
        if let Some(v) = self.target {
            cfg.target = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.b {
            cfg.b = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.curve_points {
            cfg.curve_points = v;
        }
        for sc in cfg.scenarios() {
            sc.validate()?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
}

/// Summary printed by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub n: usize,
    pub dropped: usize,
    pub dropped_rows: Vec<usize>,
    pub distinct_x: usize,
    pub untruncated: bool,
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<ValidationSummary> {
    let v = dtbias::dataset::load_dataset(&args.input)?;
    Ok(ValidationSummary {
        n: v.sample.len(),
        dropped: v.dropped(),
        dropped_rows: v.dropped_rows.clone(),
        distinct_x: v.sample.distinct_xs().len(),
        untruncated: v.sample.is_untruncated(),
    })
}

/// Fits a dataset. A fit that does not converge is an error carrying the
/// diagnostics.
pub fn cmd_fit(input: &Path, opts: &NpmleOptions) -> Result<FitReport> {
    let data = dtbias::dataset::load_dataset(input)?;
    let sample = &data.sample;
    let (fit, diag) = fit_npmle_unchecked(sample, opts)?;
    if diag.status != FitStatus::Converged {
        return Err(dtbias::fit_npmle(sample, opts).expect_err("same inputs fail again").into());
    }
    let f_n = npmle_cdf(&fit, sample)?;
    let f_star = ecdf(sample);
    let curve = sampling_curve(&fit, sample)?;
    let d_n = sup_distance(&f_n, &f_star, &curve.eval_points)?;

    let rows = sample
        .observations()
        .iter()
        .enumerate()
        .map(|(i, o)| FittedRow {
            x: o.x,
            u: o.u,
            v: o.v,
            f_weight: fit.f_weights[i],
            k_weight: fit.k_weights[i],
            g: fit.g_at_x[i],
        })
        .collect();
    let curve_points = curve
        .eval_points
        .iter()
        .zip(&curve.values)
        .map(|(&x, &g)| CurvePoint {
            x,
            npmle: f_n.eval(x),
            ecdf: f_star.eval(x),
            g,
        })
        .collect();

    Ok(FitReport {
        n: sample.len(),
        dropped: data.dropped(),
        dropped_rows: data.dropped_rows.clone(),
        status: diag.status,
        iterations: fit.iterations,
        final_delta: diag.final_delta,
        degenerate_indices: diag.degenerate_indices,
        alpha_n: fit.alpha_n,
        truncation_rate: 1.0 - fit.alpha_n,
        d_n,
        tol: opts.tol,
        max_iter: opts.max_iter,
        rows,
        curve: curve_points,
    })
}

pub fn cmd_test(input: &Path, b: usize, seed: u64, opts: &NpmleOptions) -> Result<TestReport> {
    let data = dtbias::dataset::load_dataset(input)?;
    let boot = BootstrapOptions {
        b,
        seed,
        npmle: *opts,
        parallel: true,
    };
    let (test, se_ratio) = bootstrap_analysis(&data.sample, &boot)?;
    Ok(TestReport {
        n: data.sample.len(),
        dropped: data.dropped(),
        tol: opts.tol,
        max_iter: opts.max_iter,
        test,
        se_ratio,
    })
}

/// Runs every cell of the grid; a cell whose trials are all discarded is
/// marked failed and the run continues.
pub fn cmd_simulate(cfg: &SimConfig, opts: &NpmleOptions) -> Result<SimReport> {
    let mc = McOptions {
        npmle: *opts,
        parallel: true,
    };
    let mut cells = Vec::new();
    for scenario in cfg.scenarios() {
        let cell = match run_monte_carlo(&scenario, &mc) {
            Ok(r) => SimCell {
                scenario,
                result: Some(r),
                error: None,
            },
            Err(e @ dtbias::Error::AllTrialsDiscarded { .. }) => SimCell {
                scenario,
                result: None,
                error: Some(e.to_string()),
            },
            Err(e) => return Err(e.into()),
        };
        cells.push(cell);
    }
    Ok(SimReport {
        tol: opts.tol,
        max_iter: opts.max_iter,
        cells,
    })
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(output: &Output, json: String, csv: String, plot: Option<PlotData>) -> Result<()> {
    let body = match output.format {
        Format::Json => json,
        Format::Csv => csv,
    };
    write_text(output.out.as_deref(), &body)?;
    if let (Some(path), Some(plot)) = (&output.plot_data, plot) {
        write_text(Some(path), &plot.to_csv())?;
    }
    Ok(())
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => {
            let r = cmd_fit(&a.input, &a.estimation.options())?;
            emit(&a.output, to_json(&r), r.to_csv(), Some(r.plot_data()))
        }
        Command::Test(a) => {
            let r = cmd_test(&a.input, a.b, a.seed, &a.estimation.options())?;
            emit(&a.output, to_json(&r), r.to_csv(), Some(r.plot_data()))
        }
        Command::Simulate(a) => {
            let cfg = a.resolve()?;
            let r = cmd_simulate(&cfg, &a.estimation.options())?;
            emit(&a.output, to_json(&r), r.to_csv(), Some(sampling_bias_plot(cfg.curve_points)))
        }
        Command::Validate(a) => {
            let s = cmd_validate(a)?;
            write_text(None, &to_json(&s))
        }
    }
}
