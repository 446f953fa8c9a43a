//! Accelerated proximal gradient with backtracking and adaptive restart, and
//! the ℓ1 / scaled-ℓ1 logistic fits built on it.

use super::logistic::logistic_loss_grad;
use super::prox::soft_threshold;
use super::{Dataset, Diagnostics, FitConfig, FitOutput, SolverError};
use ndarray::{ArrayView1, ArrayView2};

pub(crate) struct Accelerated {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Last gradient-mapping norm (∞-norm), a stationarity measure.
    pub residual: f64,
}

/// Minimizes `smooth(x) + g(x)` where `prox(x, t)` applies the prox of `t·g`
/// in place. `smooth` returns the value and, when asked, writes the gradient.
///
/// Stops when the gradient mapping drops to `tol` in the ∞-norm.
pub(crate) fn accelerated<F, P>(
    mut smooth: F,
    prox: P,
    x0: Vec<f64>,
    step0: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Accelerated, SolverError>
where
    F: FnMut(&[f64], Option<&mut [f64]>) -> f64,
    P: Fn(&mut [f64], f64),
{
    let d = x0.len();
    let mut x = x0.clone();
    let mut y = x0;
    let mut grad = vec![0.0; d];
    let mut next = vec![0.0; d];
    let mut momentum = 1.0f64;
    let mut step = step0;
    let mut residual = f64::INFINITY;

    for it in 1..=max_iters {
        let fy = smooth(&y, Some(&mut grad));
        if !fy.is_finite() {
            return Err(SolverError::Diverged { iteration: it });
        }
        loop {
            for k in 0..d {
                next[k] = y[k] - step * grad[k];
            }
            prox(&mut next, step);
            let f_next = smooth(&next, None);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for k in 0..d {
                let dk = next[k] - y[k];
                lin += grad[k] * dk;
                sq += dk * dk;
            }
            if f_next <= fy + lin + sq / (2.0 * step) + 1e-12 * fy.abs() || step < 1e-20 {
                break;
            }
            step *= 0.5;
        }
        residual = y.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / step;

        // restart momentum when it points uphill
        let uphill: f64 = (0..d).map(|k| (y[k] - next[k]) * (next[k] - x[k])).sum();
        if uphill > 0.0 {
            momentum = 1.0;
            y.copy_from_slice(&next);
        } else {
            let m_next = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
            let beta = (momentum - 1.0) / m_next;
            for k in 0..d {
                y[k] = next[k] + beta * (next[k] - x[k]);
            }
            momentum = m_next;
        }
        x.copy_from_slice(&next);
        if residual <= tol {
            return Ok(Accelerated {
                x,
                iterations: it,
                converged: true,
                residual,
            });
        }
    }
    Ok(Accelerated {
        x,
        iterations: max_iters,
        converged: false,
        residual,
    })
}

/// Logistic loss over a parameter vector `[β, b]` (intercept last).
pub(crate) struct Logistic<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: &'a [f64],
    pub fit_intercept: bool,
}

impl Logistic<'_> {
    pub fn eval(&self, theta: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let p = self.x.ncols();
        let beta = ArrayView1::from(&theta[..p]);
        let b = if self.fit_intercept { theta[p] } else { 0.0 };
        match grad {
            None => super::logistic::logistic_loss(self.x, self.y, beta, b),
            Some(g) => {
                let lg = logistic_loss_grad(self.x, self.y, beta, b);
                g[..p].copy_from_slice(lg.grad.as_slice().expect("contiguous"));
                g[p] = if self.fit_intercept { lg.grad_intercept } else { 0.0 };
                lg.loss
            }
        }
    }

    /// Estimate of the gradient's Lipschitz constant, `λmax(X̃ᵀX̃) / 4N`.
    pub fn lipschitz(&self) -> f64 {
        let p = self.x.ncols();
        let n = self.x.nrows().max(1) as f64;
        let mut v = ndarray::Array1::<f64>::ones(p + 1);
        let mut lambda = 1.0;
        for _ in 0..50 {
            let beta = v.slice(ndarray::s![..p]);
            let b = if self.fit_intercept { v[p] } else { 0.0 };
            let xv = self.x.dot(&beta) + b;
            let mut w = ndarray::Array1::<f64>::zeros(p + 1);
            w.slice_mut(ndarray::s![..p]).assign(&self.x.t().dot(&xv));
            w[p] = if self.fit_intercept { xv.sum() } else { 0.0 };
            let norm = w.dot(&w).sqrt();
            if norm == 0.0 {
                break;
            }
            lambda = norm;
            v = w / norm;
        }
        (lambda / (4.0 * n)).max(1e-12)
    }
}

/// ℓ1-penalized logistic regression, `λ‖β‖₁`.
pub fn fit_l1(data: &Dataset, lambda: f64, cfg: &FitConfig) -> Result<FitOutput, SolverError> {
    let ones = vec![1.0; data.n_features()];
    fit_scaled_l1(data, lambda, &ones, cfg)
}

/// Scaled ℓ1-penalized logistic regression, `λ Σ s_i |β_i|`.
pub fn fit_scaled_l1(data: &Dataset, lambda: f64, scale: &[f64], cfg: &FitConfig) -> Result<FitOutput, SolverError> {
    cfg.check()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(SolverError::BadConfig(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    let p = data.n_features();
    if scale.len() != p {
        return Err(SolverError::Shape(format!("{} scales for {p} features", scale.len())));
    }
    if let Some(s) = scale.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(SolverError::BadConfig(format!("scales must be positive, got {s}")));
    }
    let obj = Logistic {
        x: data.x.view(),
        y: &data.y,
        fit_intercept: cfg.fit_intercept,
    };
    let prox = |theta: &mut [f64], t: f64| {
        for (k, v) in theta[..p].iter_mut().enumerate() {
            *v = soft_threshold(*v, t * lambda * scale[k]);
        }
    };
    let out = accelerated(
        |th, g| obj.eval(th, g),
        prox,
        vec![0.0; p + 1],
        1.0 / obj.lipschitz(),
        cfg.max_iters,
        cfg.tol,
    )?;
    let loss = obj.eval(&out.x, None);
    let penalty: f64 = out.x[..p].iter().zip(scale).map(|(b, s)| lambda * s * b.abs()).sum();
    Ok(FitOutput {
        beta: out.x[..p].to_vec(),
        intercept: out.x[p],
        diagnostics: Diagnostics {
            iterations: out.iterations,
            inner_iterations: 0,
            converged: out.converged,
            primal_residual: out.residual,
            dual_residual: 0.0,
            rho: None,
            objective: loss + penalty,
        },
    })
}

/// `loss + λ Σ s_i |β_i|`.
pub fn l1_objective(data: &Dataset, beta: &[f64], intercept: f64, lambda: f64, scale: &[f64]) -> f64 {
    let loss = super::logistic::logistic_loss(data.x.view(), &data.y, ArrayView1::from(beta), intercept);
    loss + beta.iter().zip(scale).map(|(b, s)| lambda * s * b.abs()).sum::<f64>()
}
