//! Semi-parametric estimation: Poisson, negative-binomial and exponential QMLE,
//! one- and two-stage weighted least squares, `σ²` estimation and sandwich
//! standard errors.
//!
//! All estimators start the mean recursion with pre-sample counts and means set
//! to the sample mean of the series.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CmemError, Result};
use crate::model::{conditional_mean_path, moment_estimate_11, MeanSpec, MomentStatus, ParamVector, Response};
use crate::operators::OperatorSpec;
use crate::optim::minimize;
pub use crate::optim::OptimOptions;
use crate::series::CountSeries;

pub use crate::optim::SIMPLEX_LIMIT;

/// Floor on stage-one WLSE weights.
pub const WLSE_WEIGHT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorKind {
    Pq,
    Nq { r: f64 },
    Eq,
    /// First-stage WLSE with frozen weights.
    W1,
    /// Two-stage WLSE.
    W2,
}

impl EstimatorKind {
    pub fn nq(r: f64) -> Result<Self> {
        if r > 0.0 && r.is_finite() {
            Ok(EstimatorKind::Nq { r })
        } else {
            Err(CmemError::InvalidSpec(format!("NQ tuning constant must be > 0, got {r}")))
        }
    }

    pub fn is_qmle(&self) -> bool {
        matches!(self, EstimatorKind::Pq | EstimatorKind::Nq { .. } | EstimatorKind::Eq)
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            EstimatorKind::Pq => "PQ",
            EstimatorKind::Nq { .. } => "NQ",
            EstimatorKind::Eq => "EQ",
            EstimatorKind::W1 => "1W",
            EstimatorKind::W2 => "2W",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for EstimatorKind {
    type Err = CmemError;

    /// `pq`, `nq` (r = 1), `eq`, `1w`, `2w`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pq" => Ok(EstimatorKind::Pq),
            "nq" => Ok(EstimatorKind::Nq { r: 1.0 }),
            "eq" => Ok(EstimatorKind::Eq),
            "1w" | "w1" => Ok(EstimatorKind::W1),
            "2w" | "w2" => Ok(EstimatorKind::W2),
            other => Err(CmemError::InvalidSpec(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FitOptions {
    pub optim: OptimOptions,
    /// Starting point; defaults to the moment estimate for (1,1), a flat interior point otherwise.
    pub init: Option<ParamVector>,
    /// WLSE weighting point `(θ*, σ²*)`; defaults to the moment estimate and `σ²` evaluated there.
    pub weight_point: Option<(ParamVector, f64)>,
    /// Keep the stage-one result inside a 2W fit.
    pub keep_stage1: bool,
}

/// Last `p` counts and last `q` fitted means of the training series, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailState {
    pub x: Vec<f64>,
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: EstimatorKind,
    pub operator: OperatorSpec,
    pub theta_hat: ParamVector,
    pub sigma2_hat: f64,
    /// Standard errors for `(a₀, a…, b…, σ²)`.
    pub ase: Vec<f64>,
    pub fitted_means: Vec<f64>,
    pub objective_value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub init: ParamVector,
    pub warnings: Vec<String>,
    pub tail: TailState,
    pub stage1: Option<Box<FitResult>>,
}

impl FitResult {
    pub fn mean_spec(&self) -> MeanSpec {
        MeanSpec { params: self.theta_hat.clone(), response: Response::Linear }
    }

    pub fn sigma2_ase(&self) -> f64 {
        *self.ase.last().unwrap_or(&f64::NAN)
    }
}

/// `(l_t, ∂l_t/∂M)` for one observation of a QMLE objective.
fn qmle_term(kind: &EstimatorKind, x: f64, m: f64) -> (f64, f64) {
    match *kind {
        EstimatorKind::Pq => {
            let l = if x > 0.0 { x * m.ln() } else { 0.0 };
            (l - m, x / m - 1.0)
        }
        EstimatorKind::Nq { r } => {
            let l = if x > 0.0 { x * m.ln() } else { 0.0 };
            (l - (r + x) * (r + m).ln(), x / m - (r + x) / (r + m))
        }
        EstimatorKind::Eq => (-m.ln() - x / m, -1.0 / m + x / (m * m)),
        EstimatorKind::W1 | EstimatorKind::W2 => unreachable!("not a QMLE"),
    }
}

fn level_of(xs: &[f64]) -> f64 {
    crate::series::mean(xs)
}

fn fitted_path(theta: &ParamVector, xs: &[u64], level: f64) -> Result<Vec<f64>> {
    let spec = MeanSpec { params: theta.clone(), response: Response::Linear };
    conditional_mean_path(&spec, xs, &vec![level; theta.q()], &vec![level; theta.p()])
}

/// Fitted means `M̃_t(θ)` with pre-sample values at the sample mean.
pub fn fitted_means(theta: &ParamVector, series: &CountSeries) -> Result<Vec<f64>> {
    fitted_path(theta, series.values(), series.mean())
}

/// `Σ_t l_t(θ)` for PQ, NQ or EQ; larger is better.
pub fn qmle_objective(kind: &EstimatorKind, theta: &ParamVector, series: &CountSeries) -> Result<f64> {
    if !kind.is_qmle() {
        return Err(CmemError::InvalidSpec(format!(
            "{kind} is a least-squares method and has no QMLE objective"
        )));
    }
    theta.validate()?;
    let m = fitted_means(theta, series)?;
    Ok(series
        .values()
        .iter()
        .zip(&m)
        .map(|(&x, &mt)| qmle_term(kind, x as f64, mt).0)
        .sum())
}

/// Means and row-major gradient rows `∂M̃_t/∂θ` in one pass.
fn path_with_gradient(th: &ParamVector, xs: &[f64], level: f64) -> (Vec<f64>, Vec<f64>) {
    let (p, q) = (th.p(), th.q());
    let k = th.dim();
    let n = xs.len();
    let mut means = Vec::with_capacity(n);
    let mut rows = vec![0.0; n * k];
    let x_at = |t: usize, i: usize| if t >= i { xs[t - i] } else { level };
    for t in 0..n {
        let mut m = th.a0;
        for i in 1..=p {
            m += th.a[i - 1] * x_at(t, i);
        }
        for j in 1..=q {
            m += th.b[j - 1] * if t >= j { means[t - j] } else { level };
        }
        means.push(m);

        let (done, rest) = rows.split_at_mut(t * k);
        let row = &mut rest[..k];
        row[0] = 1.0;
        for i in 1..=p {
            row[i] = x_at(t, i);
        }
        for j in 1..=q {
            row[p + j] = if t >= j { means[t - j] } else { level };
        }
        for j in 1..=q.min(t) {
            let prev = &done[(t - j) * k..(t - j + 1) * k];
            let bj = th.b[j - 1];
            for (r, pv) in row.iter_mut().zip(prev) {
                *r += bj * pv;
            }
        }
    }
    (means, rows)
}

/// `∂M̃_t/∂θ` as an `n × (1+p+q)` matrix.
pub fn mean_gradient_path(mean: &MeanSpec, series: &CountSeries) -> Result<DMatrix<f64>> {
    if mean.response != Response::Linear {
        return Err(CmemError::Unsupported("gradients require the linear response".into()));
    }
    mean.validate()?;
    let xs = series.to_f64();
    let (_, rows) = path_with_gradient(&mean.params, &xs, level_of(&xs));
    Ok(DMatrix::from_row_slice(xs.len(), mean.params.dim(), &rows))
}

/// `ν(m) + σ²m²`.
pub fn conditional_variance(op: &OperatorSpec, m: f64, sigma2: f64) -> f64 {
    op.nu_unchecked(m) + sigma2 * m * m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sigma2Estimate {
    pub sigma2: f64,
    pub lambda_ase: f64,
    pub warning: Option<String>,
}

/// Least-squares `σ²` estimate matched to the operator, with `sqrt(Λ̂/n)`.
pub fn estimate_sigma2(op: &OperatorSpec, series: &CountSeries, fitted: &[f64]) -> Result<Sigma2Estimate> {
    let xs = series.values();
    if xs.len() != fitted.len() || xs.is_empty() {
        return Err(CmemError::InvalidSpec(format!(
            "series length {} does not match {} fitted means",
            xs.len(),
            fitted.len()
        )));
    }
    if let Some(t) = fitted.iter().position(|m| !(*m > 0.0)) {
        return Err(CmemError::Domain(format!("fitted mean at index {t} is not positive")));
    }
    let nu_op = match op {
        OperatorSpec::CompoundingPoisson | OperatorSpec::CompoundingNb => OperatorSpec::CompoundingPoisson,
        OperatorSpec::BinomialMult => OperatorSpec::BinomialMult,
        OperatorSpec::CompoundingZip { .. } => {
            return Err(CmemError::Unsupported(
                "no sigma2 estimator is available for the ZIP operator".into(),
            ))
        }
    };
    let z: Vec<f64> = xs
        .iter()
        .zip(fitted)
        .map(|(&x, &m)| {
            let r = x as f64 - m;
            (r * r - nu_op.nu_unchecked(m)) / (m * m)
        })
        .collect();
    let n = z.len() as f64;
    let base = z.iter().sum::<f64>() / n;
    let lambda = z.iter().map(|v| (v - base).powi(2)).sum::<f64>() / n;
    let sigma2 = match op {
        OperatorSpec::CompoundingNb => base - 1.0,
        _ => base,
    };
    let warning = (sigma2 < 0.0).then(|| format!("estimated sigma2 = {sigma2:.4} is negative"));
    Ok(Sigma2Estimate { sigma2, lambda_ase: (lambda / n).sqrt(), warning })
}

fn outer_mean(rows: &[f64], k: usize, weights: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let n = rows.len() / k;
    let mut out = DMatrix::<f64>::zeros(k, k);
    for t in 0..n {
        let w = weights(t);
        let r = &rows[t * k..(t + 1) * k];
        for i in 0..k {
            let wi = w * r[i];
            for j in i..k {
                out[(i, j)] += wi * r[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            out[(i, j)] = out[(j, i)];
        }
    }
    out / n as f64
}

fn invert(m: DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    let inv = m
        .try_inverse()
        .ok_or_else(|| CmemError::Singular(format!("{name} is not invertible")))?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(CmemError::Singular(format!("{name} is not invertible")));
    }
    Ok(inv)
}

type Weight = Box<dyn Fn(f64) -> f64>;

fn diag_se(cov: &DMatrix<f64>, n: usize) -> Vec<f64> {
    (0..cov.nrows()).map(|i| (cov[(i, i)].max(0.0) / n as f64).sqrt()).collect()
}

/// Sandwich standard errors for `θ̂`.
///
/// QMLE kinds use `Ĝ⁻¹Ĝ₁Ĝ⁻¹`, 2W uses `Ĵ⁻¹`. For 1W pass the frozen weights
/// through [`sandwich_se_wlse1`].
pub fn sandwich_se(
    kind: &EstimatorKind,
    theta_hat: &ParamVector,
    sigma2_hat: f64,
    series: &CountSeries,
    op: &OperatorSpec,
) -> Result<Vec<f64>> {
    let xs = series.to_f64();
    let n = xs.len();
    let k = theta_hat.dim();
    let (m, rows) = path_with_gradient(theta_hat, &xs, level_of(&xs));
    let v: Vec<f64> = m.iter().map(|&mt| conditional_variance(op, mt, sigma2_hat)).collect();
    match *kind {
        EstimatorKind::W2 => {
            let j = outer_mean(&rows, k, |t| 1.0 / v[t].max(WLSE_WEIGHT_FLOOR));
            Ok(diag_se(&invert(j, "J")?, n))
        }
        EstimatorKind::W1 => Err(CmemError::InvalidSpec(
            "first-stage WLSE errors need the frozen weights; use sandwich_se_wlse1".into(),
        )),
        _ => {
            // Curvature and score weights; constant factors cancel in the sandwich.
            let (w, w1): (Weight, Weight) = match *kind {
                EstimatorKind::Pq => (Box::new(|m| 1.0 / m), Box::new(|m| 1.0 / (m * m))),
                EstimatorKind::Nq { r } => (
                    Box::new(move |m| 1.0 / (m * (r + m))),
                    Box::new(move |m| 1.0 / (m * (r + m)).powi(2)),
                ),
                EstimatorKind::Eq => (Box::new(|m| 1.0 / (m * m)), Box::new(|m| 1.0 / m.powi(4))),
                _ => unreachable!(),
            };
            let g = outer_mean(&rows, k, |t| w(m[t]));
            let g1 = outer_mean(&rows, k, |t| v[t] * w1(m[t]));
            let gi = invert(g, "G")?;
            Ok(diag_se(&(&gi * g1 * &gi), n))
        }
    }
}

/// Sandwich errors of the first-stage WLSE with frozen weights `v*`.
pub fn sandwich_se_wlse1(
    theta_hat: &ParamVector,
    sigma2_hat: f64,
    frozen: &[f64],
    series: &CountSeries,
    op: &OperatorSpec,
) -> Result<Vec<f64>> {
    let xs = series.to_f64();
    let k = theta_hat.dim();
    let (m, rows) = path_with_gradient(theta_hat, &xs, level_of(&xs));
    let g = outer_mean(&rows, k, |t| 1.0 / frozen[t]);
    let g1 = outer_mean(&rows, k, |t| conditional_variance(op, m[t], sigma2_hat) / frozen[t].powi(2));
    let gi = invert(g, "G")?;
    Ok(diag_se(&(&gi * g1 * &gi), xs.len()))
}

fn check_fit_input(series: &CountSeries, p: usize, q: usize, op: &OperatorSpec) -> Result<()> {
    op.validate()?;
    if let OperatorSpec::CompoundingZip { .. } = op {
        return Err(CmemError::Unsupported("estimation under the ZIP operator".into()));
    }
    let need = 10 * (1 + p + q);
    if series.len() <= need {
        return Err(CmemError::InsufficientData(format!(
            "need more than {need} observations for order ({p},{q}), got {}",
            series.len()
        )));
    }
    let v = series.values();
    if v.iter().all(|&x| x == v[0]) {
        return Err(CmemError::InsufficientData("series is constant".into()));
    }
    Ok(())
}

/// Starting point: moment estimate for (1,1), otherwise an even split of persistence 0.5.
fn default_init(series: &CountSeries, p: usize, q: usize, warnings: &mut Vec<String>) -> Result<ParamVector> {
    if p == 1 && q == 1 {
        let est = moment_estimate_11(series)?;
        if let MomentStatus::Fallback(why) = &est.status {
            warnings.push(format!("moment initialisation fell back: {why}"));
        }
        return Ok(est.mean.params);
    }
    let xbar = series.mean();
    if p + q == 0 {
        return Ok(ParamVector::new(xbar, vec![], vec![]));
    }
    let c = 0.5 / (p + q) as f64;
    Ok(ParamVector::new(xbar * 0.5, vec![c; p], vec![c; q]))
}

fn tail_state(xs: &[u64], means: &[f64], p: usize, q: usize) -> TailState {
    let n = xs.len();
    TailState {
        x: xs[n.saturating_sub(p)..].iter().map(|&x| x as f64).collect(),
        m: means[n.saturating_sub(q)..].to_vec(),
    }
}

fn check_init(init: &ParamVector, p: usize, q: usize) -> Result<()> {
    if init.p() != p || init.q() != q {
        return Err(CmemError::InvalidSpec(format!(
            "initial value has order ({}, {}), expected ({p}, {q})",
            init.p(),
            init.q()
        )));
    }
    init.validate()?;
    if init.persistence() >= 1.0 {
        return Err(CmemError::InvalidSpec("initial value is not stationary".into()));
    }
    Ok(())
}

/// Maximise a QMLE objective over the stationarity region.
pub fn fit_qmle(
    kind: EstimatorKind,
    series: &CountSeries,
    p: usize,
    q: usize,
    op: &OperatorSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    if !kind.is_qmle() {
        return Err(CmemError::InvalidSpec(format!("{kind} is not a QMLE method")));
    }
    check_fit_input(series, p, q, op)?;
    let mut warnings = Vec::new();
    let init = match &opts.init {
        Some(i) => i.clone(),
        None => default_init(series, p, q, &mut warnings)?,
    };
    check_init(&init, p, q)?;

    let xs = series.to_f64();
    let level = level_of(&xs);
    let n = xs.len() as f64;
    let k = 1 + p + q;
    let objective = |theta: &[f64]| -> Result<(f64, Vec<f64>)> {
        let th = ParamVector::from_slice(p, q, theta)?;
        let (m, rows) = path_with_gradient(&th, &xs, level);
        let mut val = 0.0;
        let mut grad = vec![0.0; k];
        for t in 0..xs.len() {
            let (l, d) = qmle_term(&kind, xs[t], m[t]);
            val += l;
            for (g, r) in grad.iter_mut().zip(&rows[t * k..(t + 1) * k]) {
                *g += d * r;
            }
        }
        Ok((-val / n, grad.into_iter().map(|g| -g / n).collect()))
    };
    let res = minimize(objective, &init.to_vec(), &opts.optim)?;
    let theta_hat = ParamVector::from_slice(p, q, &res.theta)?;
    if let Some(msg) = &res.message {
        warnings.push(msg.clone());
    }

    let fitted = fitted_path(&theta_hat, series.values(), level)?;
    let s2 = estimate_sigma2(op, series, &fitted)?;
    warnings.extend(s2.warning.clone());
    let mut ase = sandwich_se(&kind, &theta_hat, s2.sigma2, series, op)?;
    ase.push(s2.lambda_ase);

    Ok(FitResult {
        method: kind,
        operator: *op,
        tail: tail_state(series.values(), &fitted, p, q),
        theta_hat,
        sigma2_hat: s2.sigma2,
        ase,
        fitted_means: fitted,
        objective_value: -res.value * n,
        converged: res.converged,
        iterations: res.iterations,
        grad_norm: res.grad_norm,
        init,
        warnings,
        stage1: None,
    })
}

/// Minimise `Σ(X_t − M̃_t(θ))²/w_t` with fixed weights.
fn wlse_stage(
    series: &CountSeries,
    p: usize,
    q: usize,
    weights: &[f64],
    init: &ParamVector,
    optim: &OptimOptions,
) -> Result<crate::optim::OptimResult> {
    let xs = series.to_f64();
    let level = level_of(&xs);
    let n = xs.len() as f64;
    let k = 1 + p + q;
    let objective = |theta: &[f64]| -> Result<(f64, Vec<f64>)> {
        let th = ParamVector::from_slice(p, q, theta)?;
        let (m, rows) = path_with_gradient(&th, &xs, level);
        let mut val = 0.0;
        let mut grad = vec![0.0; k];
        for t in 0..xs.len() {
            let r = xs[t] - m[t];
            val += r * r / weights[t];
            let d = -2.0 * r / weights[t];
            for (g, row) in grad.iter_mut().zip(&rows[t * k..(t + 1) * k]) {
                *g += d * row;
            }
        }
        Ok((val / n, grad.into_iter().map(|g| g / n).collect()))
    };
    minimize(objective, &init.to_vec(), optim)
}

fn frozen_weights(op: &OperatorSpec, means: &[f64], sigma2: f64) -> Vec<f64> {
    means
        .iter()
        .map(|&m| conditional_variance(op, m, sigma2).max(WLSE_WEIGHT_FLOOR))
        .collect()
}

/// One- or two-stage weighted least squares.
///
/// Stage one uses weights `v_t(θ*, σ²*)`; `σ²` is re-estimated at `θ̂_1W`; stage
/// two uses `v_t(θ̂_1W, σ̂²)`. The returned `σ̂²` is evaluated at the final estimate.
pub fn fit_wlse(
    kind: EstimatorKind,
    series: &CountSeries,
    p: usize,
    q: usize,
    op: &OperatorSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    if kind.is_qmle() {
        return Err(CmemError::InvalidSpec(format!("{kind} is not a least-squares method")));
    }
    check_fit_input(series, p, q, op)?;
    let mut warnings = Vec::new();
    let level = series.mean();
    let (theta_star, sigma2_star) = match &opts.weight_point {
        Some((th, s2)) => (th.clone(), *s2),
        None => {
            let th = match &opts.init {
                Some(i) => i.clone(),
                None => default_init(series, p, q, &mut warnings)?,
            };
            check_init(&th, p, q)?;
            let m = fitted_path(&th, series.values(), level)?;
            let s2 = estimate_sigma2(op, series, &m)?.sigma2;
            (th, s2)
        }
    };
    check_init(&theta_star, p, q)?;
    let init = opts.init.clone().unwrap_or_else(|| theta_star.clone());
    check_init(&init, p, q)?;

    let m_star = fitted_path(&theta_star, series.values(), level)?;
    let w1 = frozen_weights(op, &m_star, sigma2_star);
    let r1 = wlse_stage(series, p, q, &w1, &init, &opts.optim)?;
    let theta1 = ParamVector::from_slice(p, q, &r1.theta)?;
    let fitted1 = fitted_path(&theta1, series.values(), level)?;
    let s2_1 = estimate_sigma2(op, series, &fitted1)?;
    let n = series.len() as f64;

    let mut warn1 = warnings.clone();
    warn1.extend(r1.message.clone());
    warn1.extend(s2_1.warning.clone());
    let mut ase1 = sandwich_se_wlse1(&theta1, s2_1.sigma2, &w1, series, op)?;
    ase1.push(s2_1.lambda_ase);
    let stage1 = FitResult {
        method: EstimatorKind::W1,
        operator: *op,
        tail: tail_state(series.values(), &fitted1, p, q),
        theta_hat: theta1.clone(),
        sigma2_hat: s2_1.sigma2,
        ase: ase1,
        fitted_means: fitted1.clone(),
        objective_value: r1.value * n,
        converged: r1.converged,
        iterations: r1.iterations,
        grad_norm: r1.grad_norm,
        init: init.clone(),
        warnings: warn1,
        stage1: None,
    };
    if kind == EstimatorKind::W1 {
        return Ok(stage1);
    }

    let w2 = frozen_weights(op, &fitted1, s2_1.sigma2);
    let r2 = wlse_stage(series, p, q, &w2, &theta1, &opts.optim)?;
    let theta2 = ParamVector::from_slice(p, q, &r2.theta)?;
    let fitted2 = fitted_path(&theta2, series.values(), level)?;
    let s2_2 = estimate_sigma2(op, series, &fitted2)?;
    warnings.extend(r1.message.map(|m| format!("stage 1: {m}")));
    warnings.extend(r2.message.clone());
    warnings.extend(s2_2.warning.clone());
    let mut ase = sandwich_se(&EstimatorKind::W2, &theta2, s2_2.sigma2, series, op)?;
    ase.push(s2_2.lambda_ase);

    Ok(FitResult {
        method: EstimatorKind::W2,
        operator: *op,
        tail: tail_state(series.values(), &fitted2, p, q),
        theta_hat: theta2,
        sigma2_hat: s2_2.sigma2,
        ase,
        fitted_means: fitted2,
        objective_value: r2.value * n,
        converged: r1.converged && r2.converged,
        iterations: r1.iterations + r2.iterations,
        grad_norm: r2.grad_norm,
        init,
        warnings,
        stage1: opts.keep_stage1.then(|| Box::new(stage1)),
    })
}

/// Dispatch to [`fit_qmle`] or [`fit_wlse`].
pub fn fit(
    kind: EstimatorKind,
    series: &CountSeries,
    p: usize,
    q: usize,
    op: &OperatorSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    if kind.is_qmle() {
        fit_qmle(kind, series, p, q, op, opts)
    } else {
        fit_wlse(kind, series, p, q, op, opts)
    }
}
