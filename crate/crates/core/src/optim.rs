//! Quasi-Newton minimisation over the INGARCH parameter region.
//!
//! Parameters `(a₀, c₁…c_k)` with `a₀ > 0`, `c_i > 0` and `Σc_i < L` are mapped
//! to unconstrained `u`: `a₀ = e^{u₀}` and `c_i = L·e^{u_i} / (1 + Σ_j e^{u_j})`.
//! BFGS with Armijo backtracking runs on `u`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CmemError, Result};

/// Upper bound on `Σa_i + Σb_j` inside the optimiser.
pub const SIMPLEX_LIMIT: f64 = 1.0 - 1e-3;
/// Floor applied to starting coefficients so that the log map is defined.
const INIT_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    pub param_tol: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions { param_tol: 1e-8, grad_tol: 1e-6, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub theta: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub message: Option<String>,
}

fn to_theta(u: &[f64]) -> Vec<f64> {
    let mut th = Vec::with_capacity(u.len());
    th.push(u[0].exp());
    // Softmax-style map with an implicit zero logit for the slack, computed stably.
    let m = u[1..].iter().cloned().fold(0.0f64, f64::max);
    let denom = (-m).exp() + u[1..].iter().map(|v| (v - m).exp()).sum::<f64>();
    th.extend(u[1..].iter().map(|v| SIMPLEX_LIMIT * (v - m).exp() / denom));
    th
}

fn to_u(theta: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = theta[1..].iter().map(|v| v.max(INIT_FLOOR)).collect();
    let total: f64 = c.iter().sum();
    let cap = 0.98 * SIMPLEX_LIMIT;
    if total > cap {
        c.iter_mut().for_each(|v| *v *= cap / total);
    }
    let slack = SIMPLEX_LIMIT - c.iter().sum::<f64>();
    let mut u = Vec::with_capacity(theta.len());
    u.push(theta[0].max(INIT_FLOOR).ln());
    u.extend(c.iter().map(|v| v.ln() - slack.ln()));
    u
}

/// Chain rule from `∂f/∂θ` to `∂f/∂u`.
fn grad_u(theta: &[f64], g: &[f64]) -> DVector<f64> {
    let k = theta.len();
    let mut out = DVector::zeros(k);
    out[0] = g[0] * theta[0];
    let weighted: f64 = (1..k).map(|i| g[i] * theta[i]).sum::<f64>() / SIMPLEX_LIMIT;
    for j in 1..k {
        out[j] = theta[j] * (g[j] - weighted);
    }
    out
}

/// Minimise `f` (returning value and gradient in `θ`) from `theta0`.
pub fn minimize<F>(mut f: F, theta0: &[f64], opts: &OptimOptions) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let k = theta0.len();
    if k == 0 || !(theta0[0] > 0.0) || theta0.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(CmemError::InvalidSpec(format!("infeasible starting point {theta0:?}")));
    }
    if theta0[1..].iter().sum::<f64>() >= 1.0 {
        return Err(CmemError::InvalidSpec(format!(
            "starting point {theta0:?} violates the stationarity constraint"
        )));
    }

    let mut eval = |u: &[f64]| -> Option<(f64, Vec<f64>, DVector<f64>)> {
        let th = to_theta(u);
        match f(&th) {
            Ok((v, g)) if v.is_finite() && g.iter().all(|x| x.is_finite()) => {
                let gu = grad_u(&th, &g);
                Some((v, th, gu))
            }
            _ => None,
        }
    };

    let mut u = to_u(theta0);
    let (mut fx, mut th, mut g) = eval(&u).ok_or_else(|| {
        CmemError::Numerical("objective is not finite at the starting point".into())
    })?;
    let mut h = DMatrix::<f64>::identity(k, k);
    let mut first_step = true;
    let mut reset_used = false;
    let mut iterations = 0;
    let mut message = None;
    let mut converged = false;

    while iterations < opts.max_iter {
        let gnorm = g.norm();
        if gnorm < opts.grad_tol * 1e-3 {
            converged = true;
            break;
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h = DMatrix::identity(k, k);
            d = -g.clone();
            slope = g.dot(&d);
        }
        // Keep the very first trial step modest in u.
        let dmax = d.amax();
        let mut step = if dmax > 2.0 { 2.0 / dmax } else { 1.0 };

        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(d.iter()).map(|(a, b)| a + step * b).collect();
            if let Some((ft, tht, gt)) = eval(&trial) {
                if ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft, tht, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;

        let Some((un, fn_, thn, gn)) = accepted else {
            if gnorm < opts.grad_tol {
                converged = true;
                break;
            }
            if !reset_used {
                reset_used = true;
                h = DMatrix::identity(k, k);
                first_step = true;
                continue;
            }
            message = Some(format!("line search failed with gradient norm {gnorm:.3e}"));
            break;
        };

        let dtheta = thn.iter().zip(&th).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let s = DVector::from_iterator(k, un.iter().zip(&u).map(|(a, b)| a - b));
        let y = &gn - &g;
        let sy = s.dot(&y);
        u = un;
        fx = fn_;
        th = thn;
        g = gn;

        if dtheta < opts.param_tol && g.norm() < opts.grad_tol {
            converged = true;
            break;
        }

        if sy > 1e-12 * s.norm() * y.norm() {
            if first_step {
                h *= sy / y.dot(&y);
                first_step = false;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ, expanded.
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
    }
    if !converged && message.is_none() {
        message = Some(format!("iteration cap {} reached", opts.max_iter));
    }
    Ok(OptimResult {
        theta: th,
        value: fx,
        grad_norm: g.norm(),
        iterations,
        converged,
        message,
    })
}
