//! Logistic regression with overlapping cost-weighted group ℓ∞ penalties,
//! solved by ADMM consensus splitting.
//!
//! Each group k gets its own copy z_k of the coordinates it covers, tied to
//! β by z_k = β|S_k. The z-updates are independent ℓ∞ proxes and the
//! β-update is a smooth problem (loss plus a diagonal quadratic).

use super::fista::{accelerated, Logistic};
use super::logistic::logistic_loss;
use super::prox::prox_linf;
use super::{Dataset, Diagnostics, FitConfig, FitOutput, SolverError};
use crate::regularizer::{relaxed_penalty, GroupSpec};
use ndarray::ArrayView1;

const INNER_MAX_ITERS: usize = 1000;
const BALANCE_EVERY: usize = 10;
const BALANCE_RATIO: f64 = 10.0;

struct WeightedGroup {
    indices: Vec<usize>,
    weight: f64,
}

/// Minimizes `loss(β, b) + Σ_c λ_c Σ_k C_k ‖β_{S_k}‖∞`.
///
/// Groups with zero weight impose nothing and are skipped; without any
/// positive-weight group this is a plain smooth fit. Stops when primal and
/// dual residuals meet the absolute/relative tolerance `cfg.tol`.
pub fn fit_group(data: &Dataset, specs: &[GroupSpec], cfg: &FitConfig) -> Result<FitOutput, SolverError> {
    cfg.check()?;
    let p = data.n_features();
    let mut groups = Vec::new();
    for spec in specs {
        if !(spec.lambda >= 0.0) || !spec.lambda.is_finite() {
            return Err(SolverError::BadConfig(format!(
                "lambda must be finite and nonnegative, got {}",
                spec.lambda
            )));
        }
        for g in &spec.groups {
            if let Some(&j) = g.indices.iter().find(|&&j| j >= p) {
                return Err(SolverError::Shape(format!(
                    "group '{}' index {j} out of range for {p} columns",
                    g.node_id
                )));
            }
            let weight = spec.lambda * g.cost;
            if weight > 0.0 {
                groups.push(WeightedGroup {
                    indices: g.indices.clone(),
                    weight,
                });
            }
        }
    }

    let obj = Logistic {
        x: data.x.view(),
        y: &data.y,
        fit_intercept: cfg.fit_intercept,
    };
    let lipschitz = obj.lipschitz();

    if groups.is_empty() {
        let out = accelerated(
            |th, g| obj.eval(th, g),
            |_, _| {},
            vec![0.0; p + 1],
            1.0 / lipschitz,
            cfg.max_iters,
            cfg.tol,
        )?;
        return Ok(FitOutput {
            beta: out.x[..p].to_vec(),
            intercept: out.x[p],
            diagnostics: Diagnostics {
                iterations: out.iterations,
                inner_iterations: 0,
                converged: out.converged,
                primal_residual: out.residual,
                dual_residual: 0.0,
                rho: None,
                objective: obj.eval(&out.x, None) + relaxed_penalty(&out.x[..p], specs),
            },
        });
    }

    let mut count = vec![0.0f64; p];
    for g in &groups {
        for &j in &g.indices {
            count[j] += 1.0;
        }
    }
    let max_count = count.iter().copied().fold(0.0, f64::max);
    let stacked: usize = groups.iter().map(|g| g.indices.len()).sum();

    let mut theta = vec![0.0; p + 1];
    let mut z: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.indices.len()]).collect();
    let mut u: Vec<Vec<f64>> = z.clone();
    let mut rho = cfg.admm_rho;
    let mut inner_tol = 1e-3f64.max(cfg.tol);
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;
    let mut inner_iterations = 0;
    let mut target = vec![0.0; p];

    for it in 1..=cfg.max_iters {
        iterations = it;
        // β-update: loss + ρ/2 Σ_k ‖β_S − z_k + u_k‖²
        target.iter_mut().for_each(|t| *t = 0.0);
        for (k, g) in groups.iter().enumerate() {
            for (slot, &j) in g.indices.iter().enumerate() {
                target[j] += z[k][slot] - u[k][slot];
            }
        }
        let smooth = |th: &[f64], grad: Option<&mut [f64]>| {
            let mut quad = 0.0;
            for j in 0..p {
                quad += 0.5 * rho * count[j] * th[j] * th[j] - rho * target[j] * th[j];
            }
            match grad {
                None => obj.eval(th, None) + quad,
                Some(gr) => {
                    let v = obj.eval(th, Some(&mut *gr));
                    for j in 0..p {
                        gr[j] += rho * (count[j] * th[j] - target[j]);
                    }
                    v + quad
                }
            }
        };
        let inner = accelerated(
            smooth,
            |_, _| {},
            theta.clone(),
            1.0 / (lipschitz + rho * max_count),
            INNER_MAX_ITERS,
            inner_tol,
        )
        .map_err(|_| SolverError::Diverged { iteration: it })?;
        inner_iterations += inner.iterations;
        theta = inner.x;
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Diverged { iteration: it });
        }

        // z- and u-updates
        let mut r_sq = 0.0;
        let mut beta_sq = 0.0;
        let mut z_sq = 0.0;
        let mut dz = vec![0.0; p];
        let mut u_sum = vec![0.0; p];
        for (k, g) in groups.iter().enumerate() {
            let v: Vec<f64> = g.indices.iter().enumerate().map(|(s, &j)| theta[j] + u[k][s]).collect();
            let fresh = prox_linf(&v, g.weight / rho);
            for (s, &j) in g.indices.iter().enumerate() {
                dz[j] += fresh[s] - z[k][s];
                u[k][s] += theta[j] - fresh[s];
                let diff = theta[j] - fresh[s];
                r_sq += diff * diff;
                beta_sq += theta[j] * theta[j];
                z_sq += fresh[s] * fresh[s];
                u_sum[j] += u[k][s];
            }
            z[k] = fresh;
        }
        r_norm = r_sq.sqrt();
        s_norm = rho * dz.iter().map(|d| d * d).sum::<f64>().sqrt();
        let eps_pri = (stacked as f64).sqrt() * cfg.tol + cfg.tol * beta_sq.sqrt().max(z_sq.sqrt());
        let eps_dual = (p as f64).sqrt() * cfg.tol + cfg.tol * rho * u_sum.iter().map(|d| d * d).sum::<f64>().sqrt();
        if r_norm <= eps_pri && s_norm <= eps_dual {
            converged = true;
            break;
        }

        inner_tol = (0.1 * r_norm.max(s_norm)).clamp(0.1 * cfg.tol, 1e-3);
        if cfg.residual_balancing && it % BALANCE_EVERY == 0 {
            let scale = if r_norm > BALANCE_RATIO * s_norm {
                2.0
            } else if s_norm > BALANCE_RATIO * r_norm {
                0.5
            } else {
                1.0
            };
            if scale != 1.0 {
                rho *= scale;
                for uk in &mut u {
                    uk.iter_mut().for_each(|x| *x /= scale);
                }
            }
        }
    }

    // Read β off the group copies: a group the prox zeroed zeroes its
    // coordinates; covered coordinates otherwise average their copies.
    let mut beta = theta[..p].to_vec();
    let mut sum = vec![0.0; p];
    let mut zeroed = vec![false; p];
    for (k, g) in groups.iter().enumerate() {
        let all_zero = z[k].iter().all(|&x| x == 0.0);
        for (s, &j) in g.indices.iter().enumerate() {
            sum[j] += z[k][s];
            zeroed[j] |= all_zero;
        }
    }
    for j in 0..p {
        if zeroed[j] {
            beta[j] = 0.0;
        } else if count[j] > 0.0 {
            beta[j] = sum[j] / count[j];
        }
    }
    let intercept = if cfg.fit_intercept { theta[p] } else { 0.0 };
    let objective = group_objective(data, &beta, intercept, specs);
    Ok(FitOutput {
        beta,
        intercept,
        diagnostics: Diagnostics {
            iterations,
            inner_iterations,
            converged,
            primal_residual: r_norm,
            dual_residual: s_norm,
            rho: Some(rho),
            objective,
        },
    })
}

/// `loss + relaxed_penalty`.
pub fn group_objective(data: &Dataset, beta: &[f64], intercept: f64, specs: &[GroupSpec]) -> f64 {
    logistic_loss(data.x.view(), &data.y, ArrayView1::from(beta), intercept) + relaxed_penalty(beta, specs)
}
