//! INGARCH(p,q)-CMEM: mean recursion, simulation, stationarity and moments.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CmemError, Result};
use crate::operators::{sample_operator, InnovationSpec, OperatorSpec};
use crate::series::{sample_acf, CountSeries};

/// Link between the affine INGARCH combination and the conditional mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Response {
    #[default]
    Linear,
    /// `s_c(x) = c·ln(1 + exp(x/c))`; used only to generate data.
    Softplus { c: f64 },
}

impl Response {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Response::Linear => x,
            Response::Softplus { c } => softplus(x, c),
        }
    }
}

/// `c·ln(1 + e^{x/c})` without overflow.
pub fn softplus(x: f64, c: f64) -> f64 {
    let z = x / c;
    c * (z.max(0.0) + (-z.abs()).exp().ln_1p())
}

/// Regression parameters `θ = (a₀, a₁…a_p, b₁…b_q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ParamVector {
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Self {
        ParamVector { a0, a, b }
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn q(&self) -> usize {
        self.b.len()
    }

    pub fn dim(&self) -> usize {
        1 + self.a.len() + self.b.len()
    }

    /// `Σa_i + Σb_j`.
    pub fn persistence(&self) -> f64 {
        self.a.iter().sum::<f64>() + self.b.iter().sum::<f64>()
    }

    /// Flat layout `(a₀, a₁…a_p, b₁…b_q)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.a0);
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        v
    }

    pub fn from_slice(p: usize, q: usize, v: &[f64]) -> Result<Self> {
        if v.len() != 1 + p + q {
            return Err(CmemError::InvalidSpec(format!(
                "expected {} parameters for order ({p},{q}), got {}",
                1 + p + q,
                v.len()
            )));
        }
        Ok(ParamVector {
            a0: v[0],
            a: v[1..1 + p].to_vec(),
            b: v[1 + p..].to_vec(),
        })
    }

    /// Parameter names in flat order, e.g. `a0, a1, b1`.
    pub fn names(p: usize, q: usize) -> Vec<String> {
        let mut names = vec!["a0".to_string()];
        names.extend((1..=p).map(|i| format!("a{i}")));
        names.extend((1..=q).map(|j| format!("b{j}")));
        names
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a0 > 0.0 && self.a0.is_finite()) {
            return Err(CmemError::InvalidSpec(format!("a0 must be > 0, got {}", self.a0)));
        }
        if self.a.iter().chain(&self.b).any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(CmemError::InvalidSpec(
                "INGARCH coefficients must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Conditional-mean specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSpec {
    pub params: ParamVector,
    #[serde(default)]
    pub response: Response,
}

impl MeanSpec {
    pub fn linear(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Self {
        MeanSpec { params: ParamVector::new(a0, a, b), response: Response::Linear }
    }

    pub fn softplus(a0: f64, a: Vec<f64>, b: Vec<f64>, c: f64) -> Self {
        MeanSpec { params: ParamVector::new(a0, a, b), response: Response::Softplus { c } }
    }

    pub fn p(&self) -> usize {
        self.params.p()
    }

    pub fn q(&self) -> usize {
        self.params.q()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Response::Softplus { c } = self.response {
            if !(c > 0.0 && c.is_finite()) {
                return Err(CmemError::InvalidSpec(format!("softplus c must be > 0, got {c}")));
            }
        }
        Ok(())
    }
}

/// A fully specified CMEM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub mean: MeanSpec,
    pub operator: OperatorSpec,
    pub innovation: InnovationSpec,
}

impl ModelSpec {
    pub fn new(mean: MeanSpec, operator: OperatorSpec, innovation: InnovationSpec) -> Result<Self> {
        let m = ModelSpec { mean, operator, innovation };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.mean.validate()?;
        self.operator.validate()?;
        self.innovation.validate()
    }

    pub fn sigma2(&self) -> f64 {
        self.innovation.variance()
    }
}

/// Variance and autocovariances of the stationary process for one value of `E[ν(M_t)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondMoments {
    pub var_x: f64,
    pub var_m: f64,
    /// `γ_X(0..=K)`.
    pub gamma_x: Vec<f64>,
    /// `γ_M(0..=K)`.
    pub gamma_m: Vec<f64>,
    /// `ρ(1..=K)`.
    pub rho: Vec<f64>,
}

/// Unconditional moments. For compounding operators `lower == upper`; for the
/// binomial operator they hold the bounds from `E[ν(M_t)] ∈ [0, 0.25]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mu: f64,
    pub lower: SecondMoments,
    pub upper: SecondMoments,
    pub exact: bool,
}

impl MomentSummary {
    /// `V[X_t]` as `(lo, hi)`; equal ends for compounding operators.
    pub fn var_x(&self) -> (f64, f64) {
        (self.lower.var_x, self.upper.var_x)
    }

    pub fn var_m(&self) -> (f64, f64) {
        (self.lower.var_m, self.upper.var_m)
    }

    /// `ρ(k)` as `(min, max)` over the two ends.
    pub fn rho(&self, k: usize) -> (f64, f64) {
        let (a, b) = (self.lower.rho[k - 1], self.upper.rho[k - 1]);
        (a.min(b), a.max(b))
    }
}

pub fn check_first_order_stationarity(mean: &MeanSpec) -> bool {
    mean.params.persistence() < 1.0
}

/// `v₁` in the conditional variance-to-mean relation used by the second-order criterion.
pub fn second_order_v1(op: &OperatorSpec, sigma2: f64) -> Result<f64> {
    match op {
        OperatorSpec::CompoundingPoisson | OperatorSpec::CompoundingZip { .. } => Ok(sigma2),
        OperatorSpec::CompoundingNb => Ok(1.0 + sigma2),
        OperatorSpec::BinomialMult => Err(CmemError::Unsupported(
            "no second-order stationarity criterion is available for the binomial operator".into(),
        )),
    }
}

/// `(a₁+b₁)² + v₁·a₁² < 1` for an INGARCH(1,1) mean.
pub fn check_second_order_stationarity_11(mean: &MeanSpec, v1: f64) -> Result<bool> {
    if mean.p() != 1 || mean.q() != 1 {
        return Err(CmemError::InvalidSpec(format!(
            "second-order check needs p = q = 1, got ({}, {})",
            mean.p(),
            mean.q()
        )));
    }
    let (a1, b1) = (mean.params.a[0], mean.params.b[0]);
    let s = a1 + b1;
    Ok(s * s + v1 * a1 * a1 < 1.0)
}

/// Model-level second-order check for (1,1) models.
pub fn check_second_order_stationarity(model: &ModelSpec) -> Result<bool> {
    let v1 = second_order_v1(&model.operator, model.sigma2())?;
    check_second_order_stationarity_11(&model.mean, v1)
}

/// `μ = a₀ / (1 − Σa_i − Σb_j)`.
pub fn unconditional_mean(mean: &MeanSpec) -> Result<f64> {
    let s = mean.params.persistence();
    if s >= 1.0 {
        return Err(CmemError::NonStationary(format!("sum of coefficients is {s} >= 1")));
    }
    Ok(mean.params.a0 / (1.0 - s))
}

/// `M̃_1…M̃_n` from the recursion, given pre-sample values in chronological
/// order (`x_init` holds `p` counts, `m_init` holds `q` means, last entry most recent).
pub fn conditional_mean_path(
    mean: &MeanSpec,
    series: &[u64],
    m_init: &[f64],
    x_init: &[f64],
) -> Result<Vec<f64>> {
    let (p, q) = (mean.p(), mean.q());
    if x_init.len() != p || m_init.len() != q {
        return Err(CmemError::InvalidSpec(format!(
            "initial values must have lengths ({p}, {q}), got ({}, {})",
            x_init.len(),
            m_init.len()
        )));
    }
    let th = &mean.params;
    let mut xh: Vec<f64> = x_init.to_vec();
    xh.extend(series.iter().map(|&x| x as f64));
    let mut mh: Vec<f64> = m_init.to_vec();
    mh.reserve(series.len());
    for t in 0..series.len() {
        let mut lin = th.a0;
        for (i, ai) in th.a.iter().enumerate() {
            lin += ai * xh[p + t - 1 - i];
        }
        for (j, bj) in th.b.iter().enumerate() {
            lin += bj * mh[q + t - 1 - j];
        }
        let m = mean.response.apply(lin);
        if !(m > 0.0 && m.is_finite()) {
            return Err(CmemError::Numerical(format!(
                "conditional mean {m} at index {t} is not positive"
            )));
        }
        mh.push(m);
    }
    Ok(mh.split_off(q))
}

/// Pre-sample values filled with a constant, as used for estimation and simulation.
pub fn flat_init(mean: &MeanSpec, level: f64) -> (Vec<f64>, Vec<f64>) {
    (vec![level; mean.q()], vec![level; mean.p()])
}

/// Simulate `n` observations after `burn_in` discarded steps.
///
/// Lags start at the unconditional mean of the linear skeleton. Returns the
/// counts and the latent conditional means.
pub fn simulate<R: Rng + ?Sized>(
    model: &ModelSpec,
    n: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<(CountSeries, Vec<f64>)> {
    model.validate()?;
    let mu = unconditional_mean(&model.mean)?;
    let (p, q) = (model.mean.p(), model.mean.q());
    let th = &model.mean.params;
    let total = burn_in + n;
    let mut xs: Vec<f64> = vec![mu; p];
    let mut ms: Vec<f64> = vec![mu; q];
    let mut out_x = Vec::with_capacity(n);
    let mut out_m = Vec::with_capacity(n);
    for t in 0..total {
        let mut lin = th.a0;
        for (i, ai) in th.a.iter().enumerate() {
            lin += ai * xs[xs.len() - 1 - i];
        }
        for (j, bj) in th.b.iter().enumerate() {
            lin += bj * ms[ms.len() - 1 - j];
        }
        let m = model.mean.response.apply(lin);
        let eps = model.innovation.sample(rng);
        let x = sample_operator(&model.operator, m, eps, rng)?;
        // Keep only the lags we need.
        if p > 0 {
            xs.remove(0);
            xs.push(x as f64);
        }
        if q > 0 {
            ms.remove(0);
            ms.push(m);
        }
        if t >= burn_in {
            out_x.push(x);
            out_m.push(m);
        }
    }
    Ok((CountSeries::new(out_x), out_m))
}

/// `E[ν(M_t)] = c₀ + c₁·V[M_t]` for each operator; `None` for the binomial case.
fn expected_nu_coeffs(op: &OperatorSpec, mu: f64) -> Option<(f64, f64)> {
    match *op {
        OperatorSpec::CompoundingPoisson => Some((mu, 0.0)),
        OperatorSpec::CompoundingNb => Some((mu + mu * mu, 1.0)),
        OperatorSpec::CompoundingZip { kappa } => Some((kappa * mu, 0.0)),
        OperatorSpec::BinomialMult => None,
    }
}

/// Solve the autocovariance system for lags `0..=kk` with
/// `γ_X(0) = c₀ + c₁γ_M(0) + μ²σ² + (σ²+1)γ_M(0)`.
fn solve_autocov(
    th: &ParamVector,
    mu: f64,
    sigma2: f64,
    c0: f64,
    c1: f64,
    kk: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nv = kk + 1;
    let gx = |k: usize| k;
    let gm = |k: usize| nv + k;
    let dim = 2 * nv;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let (p, q) = (th.p(), th.q());

    // Row 0: variance identity.
    a[(0, gx(0))] = 1.0;
    a[(0, gm(0))] = -(c1 + sigma2 + 1.0);
    rhs[0] = c0 + mu * mu * sigma2;

    // Rows 1..=kk: γ_X(k), k ≥ 1.
    for k in 1..=kk {
        let r = k;
        a[(r, gx(k))] += 1.0;
        for i in 1..=p {
            a[(r, gx(k.abs_diff(i)))] -= th.a[i - 1];
        }
        for j in 1..=q {
            if j < k {
                a[(r, gx(k - j))] -= th.b[j - 1];
            } else {
                a[(r, gm(j - k))] -= th.b[j - 1];
            }
        }
    }

    // Rows kk+1..: γ_M(k), k ≥ 0.
    for k in 0..=kk {
        let r = nv + k;
        a[(r, gm(k))] += 1.0;
        for i in 1..=p {
            if i <= k {
                a[(r, gm(k - i))] -= th.a[i - 1];
            } else {
                a[(r, gx(i - k))] -= th.a[i - 1];
            }
        }
        for j in 1..=q {
            a[(r, gm(k.abs_diff(j)))] -= th.b[j - 1];
        }
    }

    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CmemError::Singular("in the autocovariance system".into()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(CmemError::Singular("in the autocovariance system".into()));
    }
    let gamma_x: Vec<f64> = (0..nv).map(|k| sol[gx(k)]).collect();
    let gamma_m: Vec<f64> = (0..nv).map(|k| sol[gm(k)]).collect();
    if gamma_x[0] <= 0.0 || gamma_m[0] < 0.0 {
        return Err(CmemError::NonStationary(format!(
            "autocovariance system yields V[X] = {}, V[M] = {}",
            gamma_x[0], gamma_m[0]
        )));
    }
    Ok((gamma_x, gamma_m))
}

fn second_moments(
    th: &ParamVector,
    mu: f64,
    sigma2: f64,
    c0: f64,
    c1: f64,
    max_lag: usize,
) -> Result<SecondMoments> {
    let kk = max_lag.max(th.p()).max(th.q());
    let (mut gamma_x, mut gamma_m) = solve_autocov(th, mu, sigma2, c0, c1, kk)?;
    gamma_x.truncate(max_lag + 1);
    gamma_m.truncate(max_lag + 1);
    let rho = gamma_x[1..].iter().map(|g| g / gamma_x[0]).collect();
    Ok(SecondMoments { var_x: gamma_x[0], var_m: gamma_m[0], gamma_x, gamma_m, rho })
}

/// Unconditional mean, variance and autocorrelations up to lag `max_lag`.
pub fn moment_summary(model: &ModelSpec, max_lag: usize) -> Result<MomentSummary> {
    model.validate()?;
    if model.mean.response != Response::Linear {
        return Err(CmemError::Unsupported(
            "moments are only available for the linear response".into(),
        ));
    }
    let mu = unconditional_mean(&model.mean)?;
    let sigma2 = model.sigma2();
    let th = &model.mean.params;
    if th.p() == 1 && th.q() == 1 {
        if let Ok(v1) = second_order_v1(&model.operator, sigma2) {
            if !check_second_order_stationarity_11(&model.mean, v1)? {
                return Err(CmemError::NonStationary(
                    "second-order stationarity condition fails".into(),
                ));
            }
        }
    }
    match expected_nu_coeffs(&model.operator, mu) {
        Some((c0, c1)) => {
            let sm = second_moments(th, mu, sigma2, c0, c1, max_lag)?;
            Ok(MomentSummary { mu, lower: sm.clone(), upper: sm, exact: true })
        }
        None => {
            let lower = second_moments(th, mu, sigma2, 0.0, 0.0, max_lag)?;
            let upper = second_moments(th, mu, sigma2, 0.25, 0.0, max_lag)?;
            Ok(MomentSummary { mu, lower, upper, exact: false })
        }
    }
}

/// Closed-form `ρ(k)` of an INGARCH(1,1) mean.
pub fn rho_11(a1: f64, b1: f64, k: usize) -> f64 {
    let s = a1 + b1;
    s.powi(k as i32 - 1) * a1 * (1.0 - b1 * s) / (1.0 - s * s + a1 * a1)
}

/// How the moment estimate was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MomentStatus {
    Exact,
    /// Heuristic fallback; the string says why.
    Fallback(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: MeanSpec,
    pub status: MomentStatus,
    pub rho1: f64,
    pub rho2: f64,
}

const MOM_A_MIN: f64 = 1e-4;
const MOM_MARGIN: f64 = 1e-3;

/// Method-of-moments INGARCH(1,1) estimate from `x̄`, `ρ̂(1)` and `ρ̂(2)`.
pub fn moment_estimate_11(series: &CountSeries) -> Result<MomentEstimate> {
    if series.len() < 3 {
        return Err(CmemError::InsufficientData(format!(
            "moment estimation needs n >= 3, got {}",
            series.len()
        )));
    }
    let xs = series.to_f64();
    let xbar = crate::series::mean(&xs);
    let acf = sample_acf(&xs, 2);
    let (r1, r2) = (acf[0], acf[1]);

    let mut status = MomentStatus::Exact;
    let (a1, s) = if r1 > 0.0 && r2 > 0.0 && r2 < r1 {
        let s = r2 / r1;
        match admissible_root(r1, s) {
            Some(a1) => (a1, s),
            None => {
                status = MomentStatus::Fallback("no admissible root of the moment equation".into());
                (r1 * (1.0 - s), s)
            }
        }
    } else {
        status = MomentStatus::Fallback(format!(
            "sample autocorrelations violate 0 < rho(2) < rho(1): ({r1:.4}, {r2:.4})"
        ));
        let s = if r1 > 0.0 { (r2 / r1).clamp(0.0, 1.0) } else { 0.0 };
        (r1 * (1.0 - s), s)
    };

    let a1c = a1.clamp(MOM_A_MIN, 1.0 - MOM_MARGIN);
    let b1c = (s - a1).max(0.0).min(1.0 - MOM_MARGIN - a1c);
    let sum = a1c + b1c;
    let a0 = (xbar * (1.0 - sum)).max(MOM_A_MIN);
    Ok(MomentEstimate {
        mean: MeanSpec::linear(a0, vec![a1c], vec![b1c]),
        status,
        rho1: r1,
        rho2: r2,
    })
}

/// Root `a₁ ∈ (0, s]` of `(ρ₁ − s)a² − (1 − s²)a + ρ₁(1 − s²) = 0`.
fn admissible_root(r1: f64, s: f64) -> Option<f64> {
    let qa = r1 - s;
    let qb = -(1.0 - s * s);
    let qc = r1 * (1.0 - s * s);
    let roots: Vec<f64> = if qa.abs() < 1e-14 {
        vec![-qc / qb]
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        vec![(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)]
    };
    roots
        .into_iter()
        .filter(|a| *a > 0.0 && *a <= s + 1e-12)
        .min_by(|x, y| x.total_cmp(y))
}
