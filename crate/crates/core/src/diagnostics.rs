//! Residual-based adequacy statistics and model-versus-sample moment comparison.

use serde::{Deserialize, Serialize};

use crate::error::{CmemError, Result};
use crate::estimation::{conditional_variance, fitted_means, FitResult};
use crate::model::{conditional_mean_path, moment_estimate_11, moment_summary, MomentSummary, ModelSpec};
use crate::operators::OperatorSpec;
use crate::series::{mean, sample_acf, sample_variance, CountSeries};

/// Default number of residual autocorrelation lags.
pub const RESIDUAL_ACF_LAGS: usize = 10;

/// A point value, or bounds when the binomial operator leaves it undetermined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Interval {
    Point(f64),
    Range { lo: f64, hi: f64 },
}

impl Interval {
    pub fn from_bounds(lo: f64, hi: f64) -> Self {
        if lo == hi {
            Interval::Point(lo)
        } else {
            Interval::Range { lo, hi }
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Interval::Point(v) => (v, v),
            Interval::Range { lo, hi } => (lo, hi),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        let (lo, hi) = self.bounds();
        lo <= v && v <= hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub mar: f64,
    pub mspr: f64,
    pub msr: f64,
    pub vsr: f64,
    pub pearson: Vec<f64>,
    pub scaled: Vec<f64>,
    pub residual_acf: Vec<f64>,
    pub predicted_vsr: Option<Interval>,
}

fn check_lengths(series: &CountSeries, fitted: &[f64]) -> Result<()> {
    if series.len() != fitted.len() {
        return Err(CmemError::InvalidSpec(format!(
            "series length {} does not match {} fitted means",
            series.len(),
            fitted.len()
        )));
    }
    if let Some(t) = fitted.iter().position(|m| !(*m > 0.0)) {
        return Err(CmemError::Domain(format!("fitted mean at index {t} is not positive")));
    }
    Ok(())
}

/// `R_t = (X_t − M̂_t) / sqrt(ν(M̂_t) + σ̂²M̂_t²)`.
pub fn pearson_residuals(
    series: &CountSeries,
    fitted: &[f64],
    op: &OperatorSpec,
    sigma2: f64,
) -> Result<Vec<f64>> {
    check_lengths(series, fitted)?;
    series
        .values()
        .iter()
        .zip(fitted)
        .enumerate()
        .map(|(t, (&x, &m))| {
            let v = conditional_variance(op, m, sigma2);
            if v > 0.0 {
                Ok((x as f64 - m) / v.sqrt())
            } else {
                Err(CmemError::Numerical(format!(
                    "Pearson residual denominator {v} is not positive at index {t}"
                )))
            }
        })
        .collect()
}

fn scaled_residuals(series: &CountSeries, fitted: &[f64]) -> Vec<f64> {
    series.values().iter().zip(fitted).map(|(&x, &m)| x as f64 / m).collect()
}

/// Sample mean and variance of `S_t = X_t / M̂_t`.
pub fn scaled_residual_stats(series: &CountSeries, fitted: &[f64]) -> Result<(f64, f64)> {
    check_lengths(series, fitted)?;
    let s = scaled_residuals(series, fitted);
    Ok((mean(&s), sample_variance(&s)))
}

/// `(1/n) Σ |X_t − M̂_t|`.
pub fn mar(series: &CountSeries, fitted: &[f64]) -> Result<f64> {
    check_lengths(series, fitted)?;
    Ok(mean(
        &series.values().iter().zip(fitted).map(|(&x, &m)| (x as f64 - m).abs()).collect::<Vec<_>>(),
    ))
}

/// Second-order Taylor value of `σ² + E[ν(M)/M²]` around `μ`, with `var` the
/// variance plugged into the expansion.
pub fn scaled_variance_taylor(op: &OperatorSpec, sigma2: f64, mu: f64, var: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(CmemError::Domain(format!("marginal mean must be > 0, got {mu}")));
    }
    let (nu, d1, d2) = op.nu_derivatives(mu).ok_or_else(|| {
        CmemError::Unsupported("the binomial operator has no differentiable variance function".into())
    })?;
    let mu2 = mu * mu;
    Ok(sigma2 + nu / mu2 + (mu2 * d2 - 4.0 * mu * d1 + 6.0 * nu) / (2.0 * mu2 * mu2) * var)
}

/// Model-implied `V[S_t]`, expanding around `μ` with the variance of `M_t`.
///
/// The binomial operator yields `[σ², σ² + 0.25·E[1/M²]]` with
/// `E[1/M²] ≈ 1/μ² + 3V[M]/μ⁴` at the upper variance bound.
pub fn predicted_scaled_variance(op: &OperatorSpec, sigma2: f64, summary: &MomentSummary) -> Result<Interval> {
    let mu = summary.mu;
    if !(mu > 0.0) {
        return Err(CmemError::Domain(format!("marginal mean must be > 0, got {mu}")));
    }
    match op {
        OperatorSpec::BinomialMult => {
            let vm = summary.upper.var_m;
            let inv_sq = 1.0 / (mu * mu) + 3.0 * vm / mu.powi(4);
            Ok(Interval::Range { lo: sigma2, hi: sigma2 + 0.25 * inv_sq })
        }
        _ => Ok(Interval::Point(scaled_variance_taylor(op, sigma2, mu, summary.lower.var_m)?)),
    }
}

/// Full report for a fitted series.
pub fn diagnose(
    series: &CountSeries,
    fitted: &[f64],
    op: &OperatorSpec,
    sigma2: f64,
    predicted_vsr: Option<Interval>,
) -> Result<DiagnosticsReport> {
    let pearson = pearson_residuals(series, fitted, op, sigma2)?;
    let scaled = scaled_residuals(series, fitted);
    let mspr = pearson.iter().map(|r| r * r).sum::<f64>() / pearson.len() as f64;
    let report = DiagnosticsReport {
        n: series.len(),
        mar: mar(series, fitted)?,
        mspr,
        msr: mean(&scaled),
        vsr: if scaled.len() > 1 { sample_variance(&scaled) } else { 0.0 },
        residual_acf: sample_acf(&pearson, RESIDUAL_ACF_LAGS),
        pearson,
        scaled,
        predicted_vsr,
    };
    if !(report.mar.is_finite() && report.mspr.is_finite() && report.msr.is_finite() && report.vsr.is_finite()) {
        return Err(CmemError::Numerical("diagnostic statistics are not finite".into()));
    }
    Ok(report)
}

/// Report for a fit on its own training series, including the predicted `V[S_t]`
/// when the fitted model is stationary.
pub fn diagnose_fit(series: &CountSeries, fit: &FitResult) -> Result<DiagnosticsReport> {
    let predicted = fitted_model(fit)
        .and_then(|m| moment_summary(&m, 1))
        .and_then(|s| predicted_scaled_variance(&fit.operator, fit.sigma2_hat, &s))
        .ok();
    diagnose(series, &fit.fitted_means, &fit.operator, fit.sigma2_hat, predicted)
}

/// The fitted CMEM, with an innovation law chosen only for its variance `σ̂²`.
///
/// The moment engine reads nothing else from the innovation.
pub fn fitted_model(fit: &FitResult) -> Result<ModelSpec> {
    let innov = innovation_with_variance(fit.sigma2_hat)?;
    ModelSpec::new(fit.mean_spec(), fit.operator, innov)
}

/// Some unit-mean innovation law with variance `sigma2 ≥ 0`.
pub fn innovation_with_variance(sigma2: f64) -> Result<crate::operators::InnovationSpec> {
    use crate::operators::{three_point_from_sigma2, InnovationSpec};
    if sigma2 < 0.0 || !sigma2.is_finite() {
        return Err(CmemError::Domain(format!("no innovation law has variance {sigma2}")));
    }
    if sigma2 == 0.0 {
        return Ok(InnovationSpec::Degenerate);
    }
    if sigma2 < 1.0 {
        return three_point_from_sigma2(sigma2);
    }
    if sigma2 == 1.0 {
        return Ok(InnovationSpec::PoissonUnit);
    }
    // Mass on {0, 1, L}: p_L = σ²/(L(L−1)), p_0 = (L−1)p_L, p_1 = 1 − L·p_L.
    let l = (sigma2.ceil() as usize + 2).max(3);
    let lf = l as f64;
    let pl = sigma2 / (lf * (lf - 1.0));
    let mut pmf = vec![0.0; l + 1];
    pmf[l] = pl;
    pmf[0] = (lf - 1.0) * pl;
    pmf[1] = 1.0 - pmf[0] - pl;
    Ok(InnovationSpec::EmpiricalPmf { pmf })
}

/// Scaled-residual variance under the INGARCH(1,1) moment fit; an NB counting
/// series is only plausible when it exceeds one.
pub fn nb_suitability_screen(series: &CountSeries) -> Result<(f64, bool)> {
    let est = moment_estimate_11(series)?;
    let fitted = fitted_means(&est.mean.params, series)?;
    let (_, vsr) = scaled_residual_stats(series, &fitted)?;
    Ok((vsr, vsr > 1.0))
}

/// Continue the fitted filter through `holdout`, feeding observations one
/// step at a time, and report diagnostics on the holdout only.
pub fn holdout_evaluate(fit: &FitResult, holdout: &CountSeries, op: &OperatorSpec) -> Result<DiagnosticsReport> {
    if holdout.is_empty() {
        return Err(CmemError::InsufficientData("holdout series is empty".into()));
    }
    let means = conditional_mean_path(&fit.mean_spec(), holdout.values(), &fit.tail.m, &fit.tail.x)?;
    diagnose(holdout, &means, op, fit.sigma2_hat, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub mean: f64,
    pub var: Interval,
    pub rho: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentComparison {
    pub sample: MomentRow,
    pub model: MomentRow,
}

/// Sample mean, variance and `ρ(1..=lags)` next to the fitted model's values.
pub fn model_vs_sample_report(series: &CountSeries, model: &ModelSpec, lags: usize) -> Result<MomentComparison> {
    let xs = series.to_f64();
    let sample = MomentRow {
        mean: mean(&xs),
        var: Interval::Point(sample_variance(&xs)),
        rho: sample_acf(&xs, lags).into_iter().map(Interval::Point).collect(),
    };
    let ms = moment_summary(model, lags)?;
    let (lo, hi) = ms.var_x();
    let model_row = MomentRow {
        mean: ms.mu,
        var: Interval::from_bounds(lo, hi),
        rho: (1..=lags)
            .map(|k| {
                let (a, b) = ms.rho(k);
                Interval::from_bounds(a, b)
            })
            .collect(),
    };
    Ok(MomentComparison { sample, model: model_row })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_residuals() {
        let s = CountSeries::new(vec![3, 5, 2]);
        let m = [3.0, 5.0, 2.0];
        let r = diagnose(&s, &m, &OperatorSpec::CompoundingPoisson, 0.5, None).unwrap();
        assert_eq!(r.mspr, 0.0);
        assert_eq!(r.mar, 0.0);
        assert!(r.pearson.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_denominator_names_index() {
        let s = CountSeries::new(vec![3, 5]);
        let err = pearson_residuals(&s, &[3.5, 5.0], &OperatorSpec::BinomialMult, 0.0).unwrap_err();
        assert!(err.to_string().contains("index 1"), "{err}");
    }

    #[test]
    fn constant_fit_scaling_identity() {
        let s = CountSeries::new(vec![2, 6, 4, 8]);
        let xbar = s.mean();
        let (msr, vsr) = scaled_residual_stats(&s, &[xbar; 4]).unwrap();
        assert!((msr - 1.0).abs() < 1e-15);
        assert!((vsr - sample_variance(&s.to_f64()) / (xbar * xbar)).abs() < 1e-14);
    }

    #[test]
    fn taylor_example_value() {
        let v = scaled_variance_taylor(&OperatorSpec::CompoundingPoisson, 1.0, 7.0, 93.33).unwrap();
        assert!((v - 1.415).abs() < 1e-3);
        let deg = scaled_variance_taylor(&OperatorSpec::CompoundingPoisson, 0.0, 7.0, 93.33).unwrap();
        assert!((deg - (1.0 / 7.0 + 93.33 / 343.0)).abs() < 1e-12);
    }

    #[test]
    fn nb_prediction_exceeds_one() {
        for &(s2, mu, var) in &[(0.0, 1.0, 0.0), (0.1, 50.0, 10.0), (0.4, 3.0, 100.0)] {
            let v = scaled_variance_taylor(&OperatorSpec::CompoundingNb, s2, mu, var).unwrap();
            assert!(v > 1.0);
        }
    }

    #[test]
    fn innovation_placeholder_variance() {
        for s2 in [0.0, 0.063, 0.5, 1.0, 1.7, 4.2] {
            let innov = innovation_with_variance(s2).unwrap();
            innov.validate().unwrap();
            assert!((innov.variance() - s2).abs() < 1e-12, "{s2}");
        }
        assert!(innovation_with_variance(-0.1).is_err());
    }

    #[test]
    fn interval_helpers() {
        assert_eq!(Interval::from_bounds(1.0, 1.0), Interval::Point(1.0));
        assert!(Interval::Range { lo: 0.0, hi: 2.0 }.contains(1.0));
    }
}
