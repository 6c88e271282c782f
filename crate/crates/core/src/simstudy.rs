//! Monte-Carlo study runner: simulate each data-generating process, fit every
//! requested method, and summarise with two-sided trimmed statistics.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::diagnose;
use crate::error::{CmemError, Result};
use crate::estimation::{fit, EstimatorKind, FitOptions};
use crate::model::{simulate, ModelSpec, ParamVector};
use crate::operators::OperatorSpec;
use crate::rng::stream;
use crate::series::sample_variance;

pub const DEFAULT_REPLICATIONS: usize = 500;
pub const DEFAULT_TRIM: f64 = 0.001;
pub const DEFAULT_BURN_IN: usize = 500;
/// Cells with a larger share of failed fits are flagged.
pub const FAILURE_FLAG_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dgp {
    pub label: String,
    pub model: ModelSpec,
}

/// Method plus the operator and order assumed when fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub method: EstimatorKind,
    pub operator: OperatorSpec,
    pub p: usize,
    pub q: usize,
}

impl FitSpec {
    pub fn new(method: EstimatorKind, operator: OperatorSpec) -> Self {
        FitSpec { method, operator, p: 1, q: 1 }
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.method, self.operator.short_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordFlags {
    pub estimates: bool,
    pub ases: bool,
    pub mar: bool,
    pub mspr: bool,
}

impl Default for RecordFlags {
    fn default() -> Self {
        RecordFlags { estimates: true, ases: true, mar: true, mspr: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStudyConfig {
    pub dgps: Vec<Dgp>,
    pub fit_specs: Vec<FitSpec>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub trim_fraction: f64,
    pub seed: u64,
    pub burn_in: usize,
    pub record: RecordFlags,
    pub fit_options: FitOptions,
}

impl SimStudyConfig {
    pub fn new(dgps: Vec<Dgp>, fit_specs: Vec<FitSpec>, sample_sizes: Vec<usize>, seed: u64) -> Self {
        SimStudyConfig {
            dgps,
            fit_specs,
            sample_sizes,
            replications: DEFAULT_REPLICATIONS,
            trim_fraction: DEFAULT_TRIM,
            seed,
            burn_in: DEFAULT_BURN_IN,
            record: RecordFlags::default(),
            fit_options: FitOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(CmemError::InvalidSpec("replications must be >= 1".into()));
        }
        if !(0.0..=0.05).contains(&self.trim_fraction) {
            return Err(CmemError::InvalidSpec(format!(
                "trim fraction must lie in [0, 0.05], got {}",
                self.trim_fraction
            )));
        }
        if self.dgps.is_empty() || self.fit_specs.is_empty() || self.sample_sizes.is_empty() {
            return Err(CmemError::InvalidSpec(
                "a study needs at least one DGP, fit spec and sample size".into(),
            ));
        }
        for d in &self.dgps {
            d.model.validate()?;
        }
        Ok(())
    }
}

/// Summary of one parameter in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCell {
    pub dgp: String,
    pub n: usize,
    pub fit: String,
    pub parameter: String,
    pub true_value: Option<f64>,
    pub mean: f64,
    pub sse: f64,
    pub ase_mean: f64,
    pub count: usize,
}

/// Per-fit summary of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCell {
    pub dgp: String,
    pub n: usize,
    pub fit: String,
    pub mean_mar: f64,
    pub mean_mspr: f64,
    pub successes: usize,
    pub failures: usize,
    pub nonconverged: usize,
    pub flagged: bool,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SimStudyTable {
    pub params: Vec<ParamCell>,
    pub fits: Vec<FitCell>,
}

impl SimStudyTable {
    pub fn param(&self, dgp: &str, n: usize, fit: &str, parameter: &str) -> Option<&ParamCell> {
        self.params
            .iter()
            .find(|c| c.dgp == dgp && c.n == n && c.fit == fit && c.parameter == parameter)
    }

    pub fn fit(&self, dgp: &str, n: usize, fit: &str) -> Option<&FitCell> {
        self.fits.iter().find(|c| c.dgp == dgp && c.n == n && c.fit == fit)
    }

    pub fn params_csv(&self) -> String {
        let mut s = String::from("dgp,n,fit,parameter,true,mean,sse,ase,count\n");
        for c in &self.params {
            let truth = c.true_value.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                c.dgp, c.n, c.fit, c.parameter, truth, c.mean, c.sse, c.ase_mean, c.count
            );
        }
        s
    }

    pub fn fits_csv(&self) -> String {
        let mut s = String::from("dgp,n,fit,mar,mspr,successes,failures,nonconverged,flagged\n");
        for c in &self.fits {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                c.dgp, c.n, c.fit, c.mean_mar, c.mean_mspr, c.successes, c.failures, c.nonconverged, c.flagged
            );
        }
        s
    }

    /// Text layout with one block per `(dgp, n)`: parameters down, fits across.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        let mut blocks: Vec<(String, usize)> = Vec::new();
        for c in &self.params {
            if !blocks.iter().any(|(d, n)| *d == c.dgp && *n == c.n) {
                blocks.push((c.dgp.clone(), c.n));
            }
        }
        for (dgp, n) in blocks {
            let cells: Vec<&ParamCell> = self.params.iter().filter(|c| c.dgp == dgp && c.n == n).collect();
            let mut fits: Vec<&str> = Vec::new();
            let mut params: Vec<&str> = Vec::new();
            for c in &cells {
                if !fits.contains(&c.fit.as_str()) {
                    fits.push(&c.fit);
                }
                if !params.contains(&c.parameter.as_str()) {
                    params.push(&c.parameter);
                }
            }
            let _ = writeln!(out, "{dgp}, n = {n}");
            let _ = write!(out, "{:<8}", "param");
            for f in &fits {
                let _ = write!(out, " | {:^26}", f);
            }
            out.push('\n');
            let _ = write!(out, "{:<8}", "");
            for _ in &fits {
                let _ = write!(out, " | {:>8} {:>8} {:>8}", "mean", "sse", "ase");
            }
            out.push('\n');
            for p in &params {
                let _ = write!(out, "{p:<8}");
                for f in &fits {
                    match cells.iter().find(|c| c.fit == *f && c.parameter == *p) {
                        Some(c) => {
                            let _ = write!(out, " | {:>8.3} {:>8.3} {:>8.3}", c.mean, c.sse, c.ase_mean);
                        }
                        None => {
                            let _ = write!(out, " | {:>26}", "");
                        }
                    }
                }
                out.push('\n');
            }
            for f in &fits {
                if let Some(c) = self.fit(&dgp, n, f) {
                    let _ = writeln!(
                        out,
                        "  {f}: MAR {:.3}  MSPR {:.3}  ok {}  failed {}{}",
                        c.mean_mar,
                        c.mean_mspr,
                        c.successes,
                        c.failures,
                        if c.flagged { "  [FLAGGED]" } else { "" }
                    );
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Mean and standard deviation after dropping `⌈trim·n⌉` values from each end.
pub fn trimmed_stats(values: &[f64], trim_fraction: f64) -> Result<(f64, f64)> {
    if !(0.0..0.5).contains(&trim_fraction) {
        return Err(CmemError::Domain(format!("trim fraction {trim_fraction} outside [0, 0.5)")));
    }
    let mut v: Vec<f64> = values.to_vec();
    if v.iter().any(|x| x.is_nan()) {
        return Err(CmemError::Domain("cannot trim NaN values".into()));
    }
    v.sort_by(|a, b| a.total_cmp(b));
    // Guard against 0.001 * 1000 landing a hair above an integer.
    let k = (trim_fraction * v.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    if v.len() < 2 * k + 3 {
        return Err(CmemError::InsufficientData(format!(
            "{} values leave fewer than 3 after trimming {k} from each end",
            v.len()
        )));
    }
    let kept = &v[k..v.len() - k];
    let m = kept.iter().sum::<f64>() / kept.len() as f64;
    Ok((m, sample_variance(kept).sqrt()))
}

/// Trimmed summary where possible; too-short vectors fall back to the plain
/// mean with a sample sd (NaN for a single value).
fn summarize(values: &[f64], trim: f64) -> (f64, f64) {
    match trimmed_stats(values, trim) {
        Ok(ms) => ms,
        Err(_) if values.is_empty() => (f64::NAN, f64::NAN),
        Err(_) => {
            let m = values.iter().sum::<f64>() / values.len() as f64;
            (m, sample_variance(values).sqrt())
        }
    }
}

#[derive(Debug, Clone)]
struct FitRecord {
    estimates: Vec<f64>,
    ases: Vec<f64>,
    mar: f64,
    mspr: f64,
    converged: bool,
}

type Outcome = std::result::Result<FitRecord, String>;

fn fit_one(series: &crate::series::CountSeries, spec: &FitSpec, opts: &FitOptions) -> Outcome {
    let res = fit(spec.method, series, spec.p, spec.q, &spec.operator, opts).map_err(|e| e.to_string())?;
    let rep = diagnose(series, &res.fitted_means, &spec.operator, res.sigma2_hat, None)
        .map_err(|e| e.to_string())?;
    let mut estimates = res.theta_hat.to_vec();
    estimates.push(res.sigma2_hat);
    Ok(FitRecord { estimates, ases: res.ase, mar: rep.mar, mspr: rep.mspr, converged: res.converged })
}

fn simulate_rep(
    model: &ModelSpec,
    seed: u64,
    stream_idx: usize,
    n: usize,
    r: usize,
    burn_in: usize,
) -> std::result::Result<crate::series::CountSeries, String> {
    let mut rng = stream(seed, stream_idx as u64, n as u64, r as u64);
    simulate(model, n, burn_in, &mut rng).map(|(x, _)| x).map_err(|e| e.to_string())
}

/// Run replications for one `(dgp, n)` cell; outer index is replication.
fn run_cell(
    model: &ModelSpec,
    fits: &[FitSpec],
    stream_idx: usize,
    n: usize,
    cfg_seed: u64,
    replications: usize,
    burn_in: usize,
    opts: &FitOptions,
) -> Vec<Vec<Outcome>> {
    (0..replications)
        .into_par_iter()
        .map(|r| match simulate_rep(model, cfg_seed, stream_idx, n, r, burn_in) {
            Ok(series) => fits.iter().map(|f| fit_one(&series, f, opts)).collect(),
            Err(e) => fits.iter().map(|_| Err(e.clone())).collect(),
        })
        .collect()
}

fn param_names(spec: &FitSpec) -> Vec<String> {
    let mut names = ParamVector::names(spec.p, spec.q);
    names.push("sigma2".into());
    names
}

fn true_values(model: &ModelSpec, spec: &FitSpec) -> Vec<Option<f64>> {
    let th = &model.mean.params;
    let mut out = Vec::new();
    out.push(Some(th.a0));
    out.extend((0..spec.p).map(|i| th.a.get(i).copied()));
    out.extend((0..spec.q).map(|j| th.b.get(j).copied()));
    out.push(Some(model.sigma2()));
    out
}

fn summarize_fit(
    dgp: &Dgp,
    n: usize,
    spec: &FitSpec,
    outcomes: &[&Outcome],
    trim: f64,
    record: &RecordFlags,
    table: &mut SimStudyTable,
) {
    let ok: Vec<&FitRecord> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let failures = outcomes.len() - ok.len();
    let first_error = outcomes.iter().find_map(|o| o.as_ref().err().cloned());
    let label = spec.label();
    if record.estimates || record.ases {
        let truths = true_values(&dgp.model, spec);
        for (i, name) in param_names(spec).into_iter().enumerate() {
            let est: Vec<f64> = ok.iter().map(|r| r.estimates[i]).filter(|v| v.is_finite()).collect();
            let ase: Vec<f64> = ok.iter().map(|r| r.ases[i]).filter(|v| v.is_finite()).collect();
            let (mean, sse) = if record.estimates { summarize(&est, trim) } else { (f64::NAN, f64::NAN) };
            let ase_mean = if record.ases { summarize(&ase, trim).0 } else { f64::NAN };
            table.params.push(ParamCell {
                dgp: dgp.label.clone(),
                n,
                fit: label.clone(),
                parameter: name,
                true_value: truths[i],
                mean,
                sse,
                ase_mean,
                count: est.len(),
            });
        }
    }
    let mars: Vec<f64> = ok.iter().map(|r| r.mar).collect();
    let msprs: Vec<f64> = ok.iter().map(|r| r.mspr).collect();
    table.fits.push(FitCell {
        dgp: dgp.label.clone(),
        n,
        fit: label,
        mean_mar: if record.mar { summarize(&mars, trim).0 } else { f64::NAN },
        mean_mspr: if record.mspr { summarize(&msprs, trim).0 } else { f64::NAN },
        successes: ok.len(),
        failures,
        nonconverged: ok.iter().filter(|r| !r.converged).count(),
        flagged: failures as f64 > FAILURE_FLAG_SHARE * outcomes.len() as f64,
        first_error,
    });
}

/// Run the full grid. Replication `r` of `(dgp i, n)` uses stream `(seed, i, n, r)`,
/// so every fit spec sees the same series.
pub fn run_sim_study(config: &SimStudyConfig) -> Result<SimStudyTable> {
    config.validate()?;
    let mut table = SimStudyTable::default();
    for (i, dgp) in config.dgps.iter().enumerate() {
        for &n in &config.sample_sizes {
            let reps = run_cell(
                &dgp.model,
                &config.fit_specs,
                i,
                n,
                config.seed,
                config.replications,
                config.burn_in,
                &config.fit_options,
            );
            for (f, spec) in config.fit_specs.iter().enumerate() {
                let outcomes: Vec<&Outcome> = reps.iter().map(|r| &r[f]).collect();
                summarize_fit(dgp, n, spec, &outcomes, config.trim_fraction, &config.record, &mut table);
            }
        }
    }
    Ok(table)
}

/// One side of a paired comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arm {
    pub label: String,
    pub dgp: ModelSpec,
    pub operator: OperatorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecPair {
    pub label: String,
    pub first: Arm,
    pub second: Arm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecConfig {
    pub pairs: Vec<MisspecPair>,
    pub methods: Vec<EstimatorKind>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub trim_fraction: f64,
    pub seed: u64,
    pub burn_in: usize,
    pub fit_options: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MisspecRow {
    pub pair: String,
    pub n: usize,
    pub method: String,
    pub first_label: String,
    pub second_label: String,
    pub first_mar: f64,
    pub second_mar: f64,
    pub first_mspr: f64,
    pub second_mspr: f64,
    pub first_failures: usize,
    pub second_failures: usize,
}

impl MisspecRow {
    pub fn mspr_gap(&self) -> f64 {
        self.second_mspr - self.first_mspr
    }

    pub fn mar_gap(&self) -> f64 {
        self.second_mar - self.first_mar
    }
}

pub fn misspec_csv(rows: &[MisspecRow]) -> String {
    let mut s = String::from("pair,n,method,first,second,first_mar,second_mar,first_mspr,second_mspr\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.pair, r.n, r.method, r.first_label, r.second_label, r.first_mar, r.second_mar, r.first_mspr, r.second_mspr
        );
    }
    s
}

/// Mean MAR and MSPR side by side for each pair. Both arms of replication `r`
/// draw from stream `(seed, pair, n, r)`, so identical DGPs give identical series.
pub fn misspecification_report(config: &MisspecConfig) -> Result<Vec<MisspecRow>> {
    if config.replications == 0 || config.pairs.is_empty() || config.methods.is_empty() {
        return Err(CmemError::InvalidSpec("empty misspecification study".into()));
    }
    if !(0.0..=0.05).contains(&config.trim_fraction) {
        return Err(CmemError::InvalidSpec("trim fraction must lie in [0, 0.05]".into()));
    }
    let mut rows = Vec::new();
    for (i, pair) in config.pairs.iter().enumerate() {
        let arm_fits = |arm: &Arm| -> Vec<FitSpec> {
            config.methods.iter().map(|&m| FitSpec::new(m, arm.operator)).collect()
        };
        for &n in &config.sample_sizes {
            let mut sides = Vec::new();
            for arm in [&pair.first, &pair.second] {
                let fits = arm_fits(arm);
                let reps = run_cell(
                    &arm.dgp,
                    &fits,
                    i,
                    n,
                    config.seed,
                    config.replications,
                    config.burn_in,
                    &config.fit_options,
                );
                let per_method: Vec<(f64, f64, usize)> = (0..fits.len())
                    .map(|f| {
                        let ok: Vec<&FitRecord> = reps.iter().filter_map(|r| r[f].as_ref().ok()).collect();
                        let mars: Vec<f64> = ok.iter().map(|r| r.mar).collect();
                        let msprs: Vec<f64> = ok.iter().map(|r| r.mspr).collect();
                        (
                            summarize(&mars, config.trim_fraction).0,
                            summarize(&msprs, config.trim_fraction).0,
                            reps.len() - ok.len(),
                        )
                    })
                    .collect();
                sides.push(per_method);
            }
            for (f, method) in config.methods.iter().enumerate() {
                let (a, b) = (sides[0][f], sides[1][f]);
                rows.push(MisspecRow {
                    pair: pair.label.clone(),
                    n,
                    method: method.to_string(),
                    first_label: pair.first.label.clone(),
                    second_label: pair.second.label.clone(),
                    first_mar: a.0,
                    second_mar: b.0,
                    first_mspr: a.1,
                    second_mspr: b.1,
                    first_failures: a.2,
                    second_failures: b.2,
                });
            }
        }
    }
    Ok(rows)
}
