//! TOML run configuration with `[model]`, `[estimation]` and `[simstudy]` sections.

use std::path::Path;

use serde::{Deserialize, Serialize};

use cmem::estimation::{EstimatorKind, FitOptions, OptimOptions};
use cmem::simstudy::{Dgp, FitSpec, SimStudyConfig, DEFAULT_BURN_IN, DEFAULT_REPLICATIONS, DEFAULT_TRIM};
use cmem::{CmemError, InnovationSpec, MeanSpec, ModelSpec, OperatorSpec, ParamVector, Response, Result};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<ModelSection>,
    pub estimation: Option<EstimationSection>,
    pub simstudy: Option<SimstudySection>,
}

/// A data-generating model. The innovation is either given explicitly or
/// chosen from `sigma2`: 0 degenerate, (0,1) three-point, 1 Poisson, >1 ZIP.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub label: Option<String>,
    pub a0: f64,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default = "default_operator")]
    pub operator: String,
    pub kappa: Option<f64>,
    pub sigma2: Option<f64>,
    pub innovation: Option<InnovationSpec>,
    pub softplus_c: Option<f64>,
}

fn default_operator() -> String {
    "poi".into()
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            label: None,
            a0: 2.8,
            a: vec![0.4],
            b: vec![0.2],
            operator: default_operator(),
            kappa: None,
            sigma2: None,
            innovation: None,
            softplus_c: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    pub method: Option<String>,
    pub operator: Option<String>,
    pub kappa: Option<f64>,
    pub order: Option<[usize; 2]>,
    pub nq_r: Option<f64>,
    pub param_tol: Option<f64>,
    pub grad_tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Starting point `(a0, a…, b…)`.
    pub init: Option<Vec<f64>>,
    /// WLSE weighting point `(a0, a…, b…)` with `weight_sigma2`.
    pub weight_theta: Option<Vec<f64>>,
    pub weight_sigma2: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimstudySection {
    #[serde(default)]
    pub dgps: Vec<ModelSection>,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub operators: Vec<String>,
    pub order: Option<[usize; 2]>,
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    pub replications: Option<usize>,
    pub trim: Option<f64>,
    pub seed: Option<u64>,
    pub burn_in: Option<usize>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| CmemError::InvalidSpec(format!("{}: {}", path.display(), e.message())))
}

pub fn parse_operator(name: &str, kappa: Option<f64>) -> Result<OperatorSpec> {
    match (name.parse::<OperatorSpec>()?, kappa) {
        (OperatorSpec::CompoundingZip { .. }, Some(k)) => OperatorSpec::zip(k),
        (_, Some(_)) => Err(CmemError::InvalidSpec("kappa only applies to the zip operator".into())),
        (op, None) => Ok(op),
    }
}

pub fn parse_method(name: &str, nq_r: Option<f64>) -> Result<EstimatorKind> {
    match (name.parse::<EstimatorKind>()?, nq_r) {
        (EstimatorKind::Nq { .. }, Some(r)) => EstimatorKind::nq(r),
        (kind, _) => Ok(kind),
    }
}

pub fn parse_order(text: &str) -> Result<[usize; 2]> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CmemError::InvalidSpec(format!("order must look like 'p,q', got '{text}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    Ok([parts[0].parse().map_err(|_| bad())?, parts[1].parse().map_err(|_| bad())?])
}

fn innovation_for(sigma2: f64) -> Result<InnovationSpec> {
    if sigma2 > 1.0 {
        return InnovationSpec::zip_unit(1.0 - 1.0 / sigma2);
    }
    cmem::diagnostics::innovation_with_variance(sigma2)
}

impl ModelSection {
    pub fn resolve(&self) -> Result<ModelSpec> {
        let operator = parse_operator(&self.operator, self.kappa)?;
        let innovation = match (&self.innovation, self.sigma2) {
            (Some(_), Some(_)) => {
                return Err(CmemError::InvalidSpec("give either innovation or sigma2, not both".into()))
            }
            (Some(i), None) => i.clone(),
            (None, s2) => innovation_for(s2.unwrap_or(1.0))?,
        };
        let response = match self.softplus_c {
            Some(c) => Response::Softplus { c },
            None => Response::Linear,
        };
        let mean = MeanSpec { params: ParamVector::new(self.a0, self.a.clone(), self.b.clone()), response };
        ModelSpec::new(mean, operator, innovation)
    }

    pub fn label(&self, idx: usize) -> String {
        self.label.clone().unwrap_or_else(|| format!("dgp{}", idx + 1))
    }
}

impl EstimationSection {
    pub fn fit_options(&self, p: usize, q: usize) -> Result<FitOptions> {
        let d = OptimOptions::default();
        let optim = OptimOptions {
            param_tol: self.param_tol.unwrap_or(d.param_tol),
            grad_tol: self.grad_tol.unwrap_or(d.grad_tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
        };
        let init = self.init.as_deref().map(|v| ParamVector::from_slice(p, q, v)).transpose()?;
        let weight_point = match (&self.weight_theta, self.weight_sigma2) {
            (Some(th), Some(s2)) => Some((ParamVector::from_slice(p, q, th)?, s2)),
            (None, None) => None,
            _ => {
                return Err(CmemError::InvalidSpec(
                    "weight_theta and weight_sigma2 must be given together".into(),
                ))
            }
        };
        Ok(FitOptions { optim, init, weight_point, keep_stage1: false })
    }
}

impl SimstudySection {
    /// Study over every `method × operator` pair, falling back to `[model]` as the only DGP.
    pub fn resolve(&self, model: Option<&ModelSection>, est: &EstimationSection) -> Result<SimStudyConfig> {
        let dgp_sections: Vec<ModelSection> = if self.dgps.is_empty() {
            vec![model.cloned().unwrap_or_default()]
        } else {
            self.dgps.clone()
        };
        let dgps = dgp_sections
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(Dgp { label: s.label(i), model: s.resolve()? }))
            .collect::<Result<Vec<_>>>()?;
        let [p, q] = self.order.or(est.order).unwrap_or([1, 1]);
        let methods = if self.methods.is_empty() { vec!["pq".to_string()] } else { self.methods.clone() };
        let operators = if self.operators.is_empty() { vec!["poi".to_string()] } else { self.operators.clone() };
        let mut fit_specs = Vec::new();
        for m in &methods {
            for o in &operators {
                let method = parse_method(m, est.nq_r)?;
                let operator = parse_operator(o, None)?;
                fit_specs.push(FitSpec { method, operator, p, q });
            }
        }
        let sizes = if self.sample_sizes.is_empty() { vec![1000] } else { self.sample_sizes.clone() };
        let mut cfg = SimStudyConfig::new(dgps, fit_specs, sizes, self.seed.unwrap_or(DEFAULT_SEED));
        cfg.replications = self.replications.unwrap_or(DEFAULT_REPLICATIONS);
        cfg.trim_fraction = self.trim.unwrap_or(DEFAULT_TRIM);
        cfg.burn_in = self.burn_in.unwrap_or(DEFAULT_BURN_IN);
        cfg.fit_options = est.fit_options(p, q)?;
        Ok(cfg)
    }
}
