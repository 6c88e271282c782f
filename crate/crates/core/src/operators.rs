//! Integer-valued multiplicative operators `α ⊙ ε` and the innovation laws `ε`.
//!
//! Every operator satisfies `E[α ⊙ ε | ε] = α·ε` and `V[α ⊙ ε | ε] = ν(α)·ε`.
//! Compounding operators sum `ε` i.i.d. counting-series draws with mean `α`;
//! the binomial multiplicative operator is `⌊α⌋·ε + Bin(ε, α − ⌊α⌋)`;
//! the ZIP operator draws from a zero-inflated Poisson law with mean `α·ε` and
//! variance `κ·α·ε`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{CmemError, Result};

/// Stop accumulating an infinite-support pmf once the remaining mass is below this.
pub const PMF_TAIL_MASS: f64 = 1e-12;
/// Hard cap on the number of pmf terms.
pub const PMF_MAX_TERMS: usize = 1_000_000;
/// Additionally require the last term past the mean to be negligible, so that
/// second-moment sums are not biased by the truncated tail.
const PMF_TERM_FLOOR: f64 = 1e-17;
/// Largest ZIP-operator Poisson rate we are willing to evaluate.
pub const ZIP_LAMBDA_CAP: f64 = 1e9;

/// Tolerance used when validating a user-supplied innovation pmf.
pub const EMPIRICAL_PMF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorSpec {
    /// `α • ε` with Poisson counting series, `ν(α) = α`.
    CompoundingPoisson,
    /// `α • ε` with geometric counting series `NB(1, 1/(1+α))`, `ν(α) = α(1+α)`.
    CompoundingNb,
    /// `α ⊗ ε = ⌊α⌋ε + Bin(ε, α − ⌊α⌋)`.
    BinomialMult,
    /// Conditionally ZIP with variance `κ` times the mean; `κ > 1`.
    CompoundingZip { kappa: f64 },
}

impl OperatorSpec {
    pub fn zip(kappa: f64) -> Result<Self> {
        let op = OperatorSpec::CompoundingZip { kappa };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        if let OperatorSpec::CompoundingZip { kappa } = *self {
            if !(kappa > 1.0 && kappa.is_finite()) {
                return Err(CmemError::InvalidSpec(format!(
                    "ZIP operator requires kappa > 1, got {kappa}"
                )));
            }
        }
        Ok(())
    }

    /// Short name used on the command line and in tables.
    pub fn short_name(&self) -> &'static str {
        match self {
            OperatorSpec::CompoundingPoisson => "poi",
            OperatorSpec::CompoundingNb => "nb",
            OperatorSpec::BinomialMult => "bin",
            OperatorSpec::CompoundingZip { .. } => "zip",
        }
    }

    /// `ν(α)` evaluated without the domain check; callers guarantee `α > 0`.
    pub(crate) fn nu_unchecked(&self, alpha: f64) -> f64 {
        match *self {
            OperatorSpec::CompoundingPoisson => alpha,
            OperatorSpec::CompoundingNb => alpha * (1.0 + alpha),
            OperatorSpec::BinomialMult => {
                let frac = alpha - alpha.floor();
                frac * (1.0 - frac)
            }
            OperatorSpec::CompoundingZip { kappa } => kappa * alpha,
        }
    }

    /// `(ν, ν', ν'')` at `m` for operators with a differentiable variance function.
    pub fn nu_derivatives(&self, m: f64) -> Option<(f64, f64, f64)> {
        match *self {
            OperatorSpec::CompoundingPoisson => Some((m, 1.0, 0.0)),
            OperatorSpec::CompoundingNb => Some((m * (1.0 + m), 1.0 + 2.0 * m, 2.0)),
            OperatorSpec::CompoundingZip { kappa } => Some((kappa * m, kappa, 0.0)),
            OperatorSpec::BinomialMult => None,
        }
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSpec::CompoundingZip { kappa } => write!(f, "zip:{kappa}"),
            other => f.write_str(other.short_name()),
        }
    }
}

impl FromStr for OperatorSpec {
    type Err = CmemError;

    /// Parses `poi`, `nb`, `bin`, `zip` (κ = 2) or `zip:<kappa>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "poi" | "poisson" => Ok(OperatorSpec::CompoundingPoisson),
            "nb" | "negbin" => Ok(OperatorSpec::CompoundingNb),
            "bin" | "binomial" => Ok(OperatorSpec::BinomialMult),
            "zip" => OperatorSpec::zip(2.0),
            other => {
                if let Some(k) = other.strip_prefix("zip:") {
                    let kappa: f64 = k.parse().map_err(|_| {
                        CmemError::InvalidSpec(format!("bad ZIP kappa '{k}'"))
                    })?;
                    OperatorSpec::zip(kappa)
                } else {
                    Err(CmemError::InvalidSpec(format!("unknown operator '{s}'")))
                }
            }
        }
    }
}

/// Law of the innovation `ε_t`; every variant has mean exactly one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InnovationSpec {
    /// `ε ≡ 1`.
    Degenerate,
    /// `ε ~ Poi(1)`.
    PoissonUnit,
    /// Range `{0, 1, 2}` with `p₀ = p₂`, `p₁ = 1 − 2p₂`.
    ThreePoint { p2: f64 },
    /// `ε ~ ZIP(1/(1−ω), ω)`.
    ZipUnit { omega: f64 },
    /// Arbitrary pmf over `{0, 1, 2, …}` with unit mean.
    EmpiricalPmf { pmf: Vec<f64> },
}

impl InnovationSpec {
    pub fn three_point(p2: f64) -> Result<Self> {
        let s = InnovationSpec::ThreePoint { p2 };
        s.validate()?;
        Ok(s)
    }

    pub fn zip_unit(omega: f64) -> Result<Self> {
        let s = InnovationSpec::ZipUnit { omega };
        s.validate()?;
        Ok(s)
    }

    pub fn empirical(pmf: Vec<f64>) -> Result<Self> {
        let s = InnovationSpec::EmpiricalPmf { pmf };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InnovationSpec::Degenerate | InnovationSpec::PoissonUnit => Ok(()),
            InnovationSpec::ThreePoint { p2 } => {
                if *p2 > 0.0 && *p2 < 0.5 {
                    Ok(())
                } else {
                    Err(CmemError::InvalidSpec(format!(
                        "three-point innovation needs p2 in (0, 0.5), got {p2}"
                    )))
                }
            }
            InnovationSpec::ZipUnit { omega } => {
                if *omega > 0.0 && *omega < 1.0 {
                    Ok(())
                } else {
                    Err(CmemError::InvalidSpec(format!(
                        "ZIP innovation needs omega in (0, 1), got {omega}"
                    )))
                }
            }
            InnovationSpec::EmpiricalPmf { pmf } => validate_empirical(pmf),
        }
    }

    /// `σ² = V[ε]`.
    pub fn variance(&self) -> f64 {
        match self {
            InnovationSpec::Degenerate => 0.0,
            InnovationSpec::PoissonUnit => 1.0,
            InnovationSpec::ThreePoint { p2 } => 2.0 * p2,
            // ZIP(λ, ω) with mean 1 has variance λ = 1/(1−ω).
            InnovationSpec::ZipUnit { omega } => 1.0 / (1.0 - omega),
            InnovationSpec::EmpiricalPmf { pmf } => {
                pmf.iter()
                    .enumerate()
                    .map(|(l, p)| (l * l) as f64 * p)
                    .sum::<f64>()
                    - 1.0
            }
        }
    }

    /// Probability mass function, truncated for infinite-support laws.
    pub fn pmf(&self) -> Vec<f64> {
        match self {
            InnovationSpec::Degenerate => vec![0.0, 1.0],
            InnovationSpec::PoissonUnit => poisson_pmf_vec(1.0),
            InnovationSpec::ThreePoint { p2 } => vec![*p2, 1.0 - 2.0 * p2, *p2],
            InnovationSpec::ZipUnit { omega } => zip_pmf_vec(1.0 / (1.0 - omega), *omega),
            InnovationSpec::EmpiricalPmf { pmf } => pmf.clone(),
        }
    }

    /// Probability generating function `E[v^ε]`.
    pub fn pgf(&self, v: f64) -> f64 {
        match self {
            InnovationSpec::Degenerate => v,
            InnovationSpec::PoissonUnit => (v - 1.0).exp(),
            InnovationSpec::ThreePoint { p2 } => p2 + (1.0 - 2.0 * p2) * v + p2 * v * v,
            InnovationSpec::ZipUnit { omega } => {
                omega + (1.0 - omega) * ((v - 1.0) / (1.0 - omega)).exp()
            }
            InnovationSpec::EmpiricalPmf { pmf } => {
                // Horner from the highest power down.
                pmf.iter().rev().fold(0.0, |acc, p| acc * v + p)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            InnovationSpec::Degenerate => 1,
            InnovationSpec::PoissonUnit => draw_poisson(1.0, rng),
            InnovationSpec::ThreePoint { p2 } => {
                let u: f64 = rng.random();
                if u < *p2 {
                    0
                } else if u < 2.0 * p2 {
                    2
                } else {
                    1
                }
            }
            InnovationSpec::ZipUnit { omega } => {
                if rng.random::<f64>() < *omega {
                    0
                } else {
                    draw_poisson(1.0 / (1.0 - omega), rng)
                }
            }
            InnovationSpec::EmpiricalPmf { pmf } => {
                let u: f64 = rng.random();
                let mut cum = 0.0;
                for (l, p) in pmf.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        return l as u64;
                    }
                }
                // Rounding left a sliver of mass; return the largest support point.
                pmf.iter().rposition(|&p| p > 0.0).unwrap_or(1) as u64
            }
        }
    }
}

fn validate_empirical(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() {
        return Err(CmemError::InvalidSpec("empty innovation pmf".into()));
    }
    if pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(CmemError::InvalidSpec(
            "innovation pmf entries must be finite and non-negative".into(),
        ));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > EMPIRICAL_PMF_TOL {
        return Err(CmemError::InvalidSpec(format!(
            "innovation pmf sums to {total}, not 1"
        )));
    }
    let mean: f64 = pmf.iter().enumerate().map(|(l, p)| l as f64 * p).sum();
    if (mean - 1.0).abs() > EMPIRICAL_PMF_TOL {
        return Err(CmemError::InvalidSpec(format!(
            "innovation pmf has mean {mean}, not 1"
        )));
    }
    let upper: f64 = pmf.iter().enumerate().skip(2).map(|(l, p)| l as f64 * p).sum();
    if upper >= 1.0 {
        return Err(CmemError::InvalidSpec(
            "innovation pmf violates sum_{l>=2} l p_l < 1".into(),
        ));
    }
    let implied_p0: f64 = pmf
        .iter()
        .enumerate()
        .skip(2)
        .map(|(l, p)| (l as f64 - 1.0) * p)
        .sum();
    if (pmf[0] - implied_p0).abs() > EMPIRICAL_PMF_TOL {
        return Err(CmemError::InvalidSpec(format!(
            "innovation pmf has p0 = {}, but unit mean requires {implied_p0}",
            pmf[0]
        )));
    }
    Ok(())
}

/// Three-point innovation with prescribed variance `σ² ∈ (0, 1)`.
pub fn three_point_from_sigma2(sigma2: f64) -> Result<InnovationSpec> {
    if !(sigma2 > 0.0 && sigma2 < 1.0) {
        return Err(CmemError::Domain(format!(
            "three-point innovation can only realise sigma2 in (0, 1), got {sigma2}"
        )));
    }
    InnovationSpec::three_point(sigma2 / 2.0)
}

pub fn innovation_variance(innov: &InnovationSpec) -> f64 {
    innov.variance()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(CmemError::Domain(format!("operator argument must be > 0, got {alpha}")))
    }
}

/// Conditional variance factor `ν(α)` with `V[α⊙ε | ε] = ν(α)·ε`.
pub fn nu(op: &OperatorSpec, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(op.nu_unchecked(alpha))
}

fn zip_params(kappa: f64, alpha: f64, eps: u64) -> Result<(f64, f64)> {
    let lambda = alpha * eps as f64 + kappa - 1.0;
    if lambda > ZIP_LAMBDA_CAP {
        return Err(CmemError::Domain(format!(
            "ZIP operator rate {lambda} exceeds cap {ZIP_LAMBDA_CAP}"
        )));
    }
    Ok((lambda, (kappa - 1.0) / lambda))
}

fn draw_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let d = Poisson::new(lambda).expect("positive finite Poisson rate");
    d.sample(rng) as u64
}

/// One draw of `α ⊙ eps`.
pub fn sample_operator<R: Rng + ?Sized>(
    op: &OperatorSpec,
    alpha: f64,
    eps: u64,
    rng: &mut R,
) -> Result<u64> {
    check_alpha(alpha)?;
    if eps == 0 {
        return Ok(0);
    }
    let value = match *op {
        OperatorSpec::CompoundingPoisson => draw_poisson(alpha * eps as f64, rng),
        OperatorSpec::CompoundingNb => {
            // NB(eps, 1/(1+α)) as a Poisson–Gamma mixture.
            let g = Gamma::new(eps as f64, alpha)
                .map_err(|e| CmemError::Numerical(format!("gamma mixing law: {e}")))?;
            draw_poisson(g.sample(rng), rng)
        }
        OperatorSpec::BinomialMult => {
            let whole = alpha.floor();
            let frac = alpha - whole;
            let base = whole as u64 * eps;
            if frac > 0.0 {
                let b = Binomial::new(eps, frac)
                    .map_err(|e| CmemError::Numerical(format!("binomial law: {e}")))?;
                base + b.sample(rng)
            } else {
                base
            }
        }
        OperatorSpec::CompoundingZip { kappa } => {
            let (lambda, omega) = zip_params(kappa, alpha, eps)?;
            if rng.random::<f64>() < omega {
                0
            } else {
                draw_poisson(lambda, rng)
            }
        }
    };
    Ok(value)
}

fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

fn poisson_ln_pmf(lambda: f64, k: u64) -> f64 {
    k as f64 * lambda.ln() - lambda - ln_factorial(k)
}

fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    poisson_ln_pmf(lambda, k).exp()
}

/// `NB(size, p)` pmf at `k`: `C(k+size−1, k) p^size (1−p)^k`.
fn negbin_pmf(size: u64, p: f64, k: u64) -> f64 {
    if size == 0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let (s, kf) = (size as f64, k as f64);
    (ln_gamma(kf + s) - ln_gamma(s) - ln_factorial(k) + s * p.ln() + kf * (1.0 - p).ln()).exp()
}

fn binomial_pmf(n: u64, prob: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if prob == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if prob == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let ln_choose = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
    (ln_choose + k as f64 * prob.ln() + (n - k) as f64 * (1.0 - prob).ln()).exp()
}

fn zip_pmf(lambda: f64, omega: f64, k: u64) -> f64 {
    let pois = poisson_pmf(lambda, k);
    if k == 0 {
        omega + (1.0 - omega) * pois
    } else {
        (1.0 - omega) * pois
    }
}

/// Accumulate `f(0), f(1), …` until the tail is negligible past `mean`.
fn truncated_pmf(mean: f64, f: impl Fn(u64) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut cum = 0.0;
    for k in 0..PMF_MAX_TERMS as u64 {
        let p = f(k);
        out.push(p);
        cum += p;
        if k as f64 > mean && 1.0 - cum < PMF_TAIL_MASS && p < PMF_TERM_FLOOR {
            break;
        }
    }
    out
}

fn poisson_pmf_vec(lambda: f64) -> Vec<f64> {
    truncated_pmf(lambda, |k| poisson_pmf(lambda, k))
}

fn zip_pmf_vec(lambda: f64, omega: f64) -> Vec<f64> {
    truncated_pmf(lambda, |k| zip_pmf(lambda, omega, k))
}

/// `P(α ⊙ eps = k)`.
pub fn conditional_pmf(op: &OperatorSpec, alpha: f64, eps: u64, k: u64) -> Result<f64> {
    check_alpha(alpha)?;
    let p = match *op {
        OperatorSpec::CompoundingPoisson => poisson_pmf(alpha * eps as f64, k),
        OperatorSpec::CompoundingNb => negbin_pmf(eps, 1.0 / (1.0 + alpha), k),
        OperatorSpec::BinomialMult => {
            let whole = alpha.floor() as u64;
            let frac = alpha - alpha.floor();
            let lo = whole * eps;
            if k < lo || k > lo + eps {
                0.0
            } else {
                binomial_pmf(eps, frac, k - lo)
            }
        }
        OperatorSpec::CompoundingZip { kappa } => {
            if eps == 0 {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                let (lambda, omega) = zip_params(kappa, alpha, eps)?;
                zip_pmf(lambda, omega, k)
            }
        }
    };
    Ok(p)
}

/// The conditional law of `α ⊙ eps` as a vector indexed from zero, truncated
/// for infinite-support kinds.
pub fn conditional_pmf_vec(op: &OperatorSpec, alpha: f64, eps: u64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if eps == 0 {
        return Ok(vec![1.0]);
    }
    let mean = alpha * eps as f64;
    let v = match *op {
        OperatorSpec::CompoundingPoisson => poisson_pmf_vec(mean),
        OperatorSpec::CompoundingNb => {
            let p = 1.0 / (1.0 + alpha);
            truncated_pmf(mean, |k| negbin_pmf(eps, p, k))
        }
        OperatorSpec::BinomialMult => {
            let hi = (alpha.floor() as u64 + 1) * eps;
            (0..=hi)
                .map(|k| conditional_pmf(op, alpha, eps, k))
                .collect::<Result<Vec<_>>>()?
        }
        OperatorSpec::CompoundingZip { kappa } => {
            let (lambda, omega) = zip_params(kappa, alpha, eps)?;
            zip_pmf_vec(lambda, omega)
        }
    };
    Ok(v)
}

/// Probability generating function of `α ⊙ ε` with `ε ~ innov`, for `u ∈ [0, 1]`.
pub fn operator_pgf(
    op: &OperatorSpec,
    alpha: f64,
    innov: &InnovationSpec,
    u: f64,
) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&u) {
        return Err(CmemError::Domain(format!("pgf argument must lie in [0, 1], got {u}")));
    }
    let value = match *op {
        OperatorSpec::CompoundingPoisson => innov.pgf((alpha * (u - 1.0)).exp()),
        OperatorSpec::CompoundingNb => innov.pgf(1.0 / (1.0 + alpha * (1.0 - u))),
        OperatorSpec::BinomialMult => {
            let whole = alpha.floor();
            let frac = alpha - whole;
            innov.pgf(u.powi(whole as i32) * (1.0 - frac + frac * u))
        }
        OperatorSpec::CompoundingZip { kappa } => {
            // Not a compounding law: mix the conditional ZIP pgfs over ε.
            let mut total = 0.0;
            for (l, p) in innov.pmf().into_iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let g = if l == 0 {
                    1.0
                } else {
                    let (lambda, omega) = zip_params(kappa, alpha, l as u64)?;
                    omega + (1.0 - omega) * (lambda * (u - 1.0)).exp()
                };
                total += p * g;
            }
            total
        }
    };
    Ok(value)
}
