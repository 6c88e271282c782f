//! `cmem` command-line front end.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cmem::diagnostics::{diagnose_fit, holdout_evaluate, DiagnosticsReport, Interval};
use cmem::estimation::{fit, EstimatorKind, FitOptions, FitResult};
use cmem::io::{read_count_series, write_count_csv};
use cmem::model::simulate;
use cmem::rng::seeded;
use cmem::simstudy::{run_sim_study, SimStudyConfig, SimStudyTable};
use cmem::{CmemError, CountSeries, ModelSpec, OperatorSpec, ParamVector, Result};

use config::{parse_method, parse_operator, parse_order, FileConfig, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "cmem", version, about = "Count multiplicative error models for count time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a count series from the `[model]` section.
    Simulate(SimulateArgs),
    /// Fit an INGARCH mean and report estimates, standard errors and diagnostics.
    Fit(FitArgs),
    /// Fit, then write the full residual diagnostics report.
    Diagnose(FitArgs),
    /// Fit on all but the last `--holdout` counts and evaluate on the rest.
    ForecastEval(ForecastArgs),
    /// Run a Monte-Carlo study from the `[simstudy]` section.
    Simstudy(SimstudyArgs),
}

#[derive(Args)]
struct Common {
    /// TOML file with [model], [estimation] and [simstudy] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EstimationArgs {
    /// pq, nq, eq, 1w or 2w.
    #[arg(long)]
    method: Option<String>,
    /// Operator assumed for σ² and standard errors: poi, nb, bin or zip.
    #[arg(long)]
    operator: Option<String>,
    /// ZIP operator parameter κ > 1.
    #[arg(long)]
    kappa: Option<f64>,
    /// Model order as `p,q`.
    #[arg(long)]
    order: Option<String>,
    /// Tuning constant of the NB quasi-likelihood.
    #[arg(long = "nq-r")]
    nq_r: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, short, default_value_t = 1000)]
    n: usize,
    #[arg(long = "burn-in", default_value_t = cmem::simstudy::DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Add the latent conditional mean as a third column.
    #[arg(long)]
    latent: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Count series: one integer per line, or CSV with a `count` column.
    #[arg(long, short)]
    input: PathBuf,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    est: EstimationArgs,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    fit: FitArgs,
    /// Number of trailing observations held out.
    #[arg(long)]
    holdout: usize,
}

#[derive(Args)]
struct SimstudyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    replications: Option<usize>,
    /// Fraction trimmed from each tail of the replication summaries.
    #[arg(long)]
    trim: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated sample sizes.
    #[arg(long, short, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
}

/// Everything needed to re-run a command bit for bit.
#[derive(Serialize)]
struct Resolved {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    burn_in: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    holdout: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<ModelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimation: Option<ResolvedEstimation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simstudy: Option<SimStudyConfig>,
}

impl Resolved {
    fn new(command: &'static str) -> Self {
        Resolved {
            command,
            input: None,
            seed: None,
            n: None,
            burn_in: None,
            holdout: None,
            model: None,
            estimation: None,
            simstudy: None,
        }
    }
}

#[derive(Serialize, Clone)]
struct ResolvedEstimation {
    method: EstimatorKind,
    operator: OperatorSpec,
    p: usize,
    q: usize,
    options: FitOptions,
}

#[derive(Serialize)]
struct Estimate {
    name: String,
    value: f64,
    ase: f64,
}

#[derive(Serialize)]
struct DiagnosticsSummary {
    n: usize,
    mar: f64,
    mspr: f64,
    msr: f64,
    vsr: f64,
    residual_acf: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_vsr: Option<Interval>,
}

impl From<&DiagnosticsReport> for DiagnosticsSummary {
    fn from(r: &DiagnosticsReport) -> Self {
        DiagnosticsSummary {
            n: r.n,
            mar: r.mar,
            mspr: r.mspr,
            msr: r.msr,
            vsr: r.vsr,
            residual_acf: r.residual_acf.clone(),
            predicted_vsr: r.predicted_vsr,
        }
    }
}

#[derive(Serialize)]
struct Convergence {
    converged: bool,
    iterations: usize,
    grad_norm: f64,
    objective_value: f64,
    init: ParamVector,
}

#[derive(Serialize)]
struct FitSummary {
    method: String,
    operator: String,
    estimates: Vec<Estimate>,
    sigma2: Estimate,
    convergence: Convergence,
    warnings: Vec<String>,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        let names = ParamVector::names(f.theta_hat.p(), f.theta_hat.q());
        let estimates = names
            .into_iter()
            .zip(f.theta_hat.to_vec())
            .zip(&f.ase)
            .map(|((name, value), &ase)| Estimate { name, value, ase })
            .collect();
        FitSummary {
            method: f.method.to_string(),
            operator: f.operator.to_string(),
            estimates,
            sigma2: Estimate { name: "sigma2".into(), value: f.sigma2_hat, ase: f.sigma2_ase() },
            convergence: Convergence {
                converged: f.converged,
                iterations: f.iterations,
                grad_norm: f.grad_norm,
                objective_value: f.objective_value,
                init: f.init.clone(),
            },
            warnings: f.warnings.clone(),
        }
    }
}

#[derive(Serialize)]
struct FitDocument {
    config: Resolved,
    fit: FitSummary,
    diagnostics: DiagnosticsSummary,
}

#[derive(Serialize)]
struct DiagnoseDocument {
    config: Resolved,
    fit: FitSummary,
    report: DiagnosticsReport,
}

#[derive(Serialize)]
struct ForecastDocument {
    config: Resolved,
    fit: FitSummary,
    in_sample: DiagnosticsSummary,
    holdout: DiagnosticsSummary,
}

#[derive(Serialize)]
struct SimstudyDocument<'a> {
    config: Resolved,
    table: &'a SimStudyTable,
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    serde_json::to_string_pretty(doc)
        .map(|s| s + "\n")
        .map_err(|e| CmemError::Numerical(format!("cannot serialise result: {e}")))
}

/// `<output>.json` next to a CSV output.
fn sidecar(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn resolve_estimation(est: &EstimationArgs, file: &FileConfig) -> Result<ResolvedEstimation> {
    let section = file.estimation.clone().unwrap_or_default();
    let nq_r = est.nq_r.or(section.nq_r);
    let method = parse_method(est.method.as_deref().or(section.method.as_deref()).unwrap_or("pq"), nq_r)?;
    let kappa = est.kappa.or(section.kappa);
    let operator = parse_operator(est.operator.as_deref().or(section.operator.as_deref()).unwrap_or("poi"), kappa)?;
    let [p, q] = match &est.order {
        Some(text) => parse_order(text)?,
        None => section.order.unwrap_or([1, 1]),
    };
    let options = section.fit_options(p, q)?;
    Ok(ResolvedEstimation { method, operator, p, q, options })
}

fn run_fit(series: &CountSeries, r: &ResolvedEstimation) -> Result<FitResult> {
    fit(r.method, series, r.p, r.q, &r.operator, &r.options)
}

fn fit_setup(args: &FitArgs, command: &'static str) -> Result<(CountSeries, Resolved)> {
    let file = config::load(args.common.config.as_deref())?;
    let series = read_count_series(&args.input)?;
    let mut resolved = Resolved::new(command);
    resolved.input = Some(args.input.clone());
    resolved.estimation = Some(resolve_estimation(&args.est, &file)?);
    Ok((series, resolved))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let file = config::load(args.common.config.as_deref())?;
    let model = file.model.clone().unwrap_or_default().resolve()?;
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let (series, means) = simulate(&model, args.n, args.burn_in, &mut seeded(seed))?;
    let csv = write_count_csv(&series, args.latent.then_some(means.as_slice()));
    emit(args.common.output.as_deref(), &csv)?;
    if let Some(out) = &args.common.output {
        let mut resolved = Resolved::new("simulate");
        resolved.seed = Some(seed);
        resolved.n = Some(args.n);
        resolved.burn_in = Some(args.burn_in);
        resolved.model = Some(model);
        fs::write(sidecar(out), to_json(&serde_json::json!({ "config": resolved }))?)?;
    }
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let (series, config) = fit_setup(args, "fit")?;
    let f = run_fit(&series, config.estimation.as_ref().unwrap())?;
    let report = diagnose_fit(&series, &f)?;
    let doc = FitDocument { fit: FitSummary::from(&f), diagnostics: DiagnosticsSummary::from(&report), config };
    emit(args.common.output.as_deref(), &to_json(&doc)?)
}

fn cmd_diagnose(args: &FitArgs) -> Result<()> {
    let (series, config) = fit_setup(args, "diagnose")?;
    let f = run_fit(&series, config.estimation.as_ref().unwrap())?;
    let report = diagnose_fit(&series, &f)?;
    let doc = DiagnoseDocument { fit: FitSummary::from(&f), report, config };
    emit(args.common.output.as_deref(), &to_json(&doc)?)
}

fn cmd_forecast(args: &ForecastArgs) -> Result<()> {
    let (series, mut config) = fit_setup(&args.fit, "forecast-eval")?;
    config.holdout = Some(args.holdout);
    if args.holdout == 0 || args.holdout >= series.len() {
        return Err(CmemError::InvalidSpec(format!(
            "holdout must lie in 1..{}, got {}",
            series.len(),
            args.holdout
        )));
    }
    let (train, test) = series.split_tail(args.holdout);
    let est = config.estimation.clone().unwrap();
    let f = run_fit(&train, &est)?;
    let in_sample = diagnose_fit(&train, &f)?;
    let holdout = holdout_evaluate(&f, &test, &est.operator)?;
    let doc = ForecastDocument {
        fit: FitSummary::from(&f),
        in_sample: DiagnosticsSummary::from(&in_sample),
        holdout: DiagnosticsSummary::from(&holdout),
        config,
    };
    emit(args.fit.common.output.as_deref(), &to_json(&doc)?)
}

fn cmd_simstudy(args: &SimstudyArgs) -> Result<()> {
    let file = config::load(args.common.config.as_deref())?;
    let est = file.estimation.clone().unwrap_or_default();
    let mut study = file.simstudy.clone().unwrap_or_default().resolve(file.model.as_ref(), &est)?;
    if let Some(r) = args.replications {
        study.replications = r;
    }
    if let Some(t) = args.trim {
        study.trim_fraction = t;
    }
    if let Some(s) = args.seed {
        study.seed = s;
    }
    if let Some(b) = args.burn_in {
        study.burn_in = b;
    }
    if !args.n.is_empty() {
        study.sample_sizes = args.n.clone();
    }
    let table = run_sim_study(&study)?;
    emit(args.common.output.as_deref(), &table.params_csv())?;
    if let Some(out) = &args.common.output {
        let mut resolved = Resolved::new("simstudy");
        resolved.simstudy = Some(study);
        fs::write(sidecar(out), to_json(&SimstudyDocument { config: resolved, table: &table })?)?;
        print!("{}", table.pretty());
    }
    Ok(())
}

fn error_kind(e: &CmemError) -> &'static str {
    match e {
        CmemError::Domain(_) => "domain",
        CmemError::InvalidSpec(_) => "invalid-spec",
        CmemError::NonStationary(_) => "non-stationary",
        CmemError::Unsupported(_) => "unsupported",
        CmemError::Singular(_) => "singular",
        CmemError::Numerical(_) => "numerical",
        CmemError::InsufficientData(_) => "insufficient-data",
        CmemError::Parse { .. } => "parse",
        CmemError::Io(_) => "io",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::ForecastEval(a) => cmd_forecast(a),
        Command::Simstudy(a) => cmd_simstudy(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code: u8 = if e.is_input_error() { 2 } else { 3 };
            let line = match &e {
                CmemError::Parse { line, .. } => Some(*line),
                _ => None,
            };
            let record = serde_json::json!({
                "error": { "kind": error_kind(&e), "message": e.to_string(), "line": line, "exit_code": code }
            });
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}
