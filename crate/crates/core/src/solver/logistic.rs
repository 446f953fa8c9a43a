//! Logistic loss with labels in {−1, +1}.

use ndarray::{Array1, ArrayView1, ArrayView2};

/// `log(1 + exp(z))` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Loss value and gradients at `(beta, intercept)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Array1<f64>,
    pub grad_intercept: f64,
}

/// `(1/N) Σ log(1 + exp(−y_i (x_iᵀβ + b)))`.
pub fn logistic_loss(x: ArrayView2<f64>, y: &[f64], beta: ArrayView1<f64>, intercept: f64) -> f64 {
    let margins = x.dot(&beta);
    let n = y.len().max(1) as f64;
    margins
        .iter()
        .zip(y)
        .map(|(&m, &yi)| softplus(-yi * (m + intercept)))
        .sum::<f64>()
        / n
}

pub fn logistic_loss_grad(x: ArrayView2<f64>, y: &[f64], beta: ArrayView1<f64>, intercept: f64) -> LossGrad {
    let margins = x.dot(&beta);
    let n = y.len().max(1) as f64;
    let mut loss = 0.0;
    let mut residual = Array1::zeros(y.len());
    for (i, (&m, &yi)) in margins.iter().zip(y).enumerate() {
        let z = -yi * (m + intercept);
        loss += softplus(z);
        residual[i] = -yi * sigmoid(z) / n;
    }
    LossGrad {
        loss: loss / n,
        grad: transpose_times(x, &residual),
        grad_intercept: residual.sum(),
    }
}

/// `xᵀ r`, accumulated row by row; much faster than ndarray's strided
/// transpose product on row-major data.
fn transpose_times(x: ArrayView2<f64>, r: &Array1<f64>) -> Array1<f64> {
    let mut g = vec![0.0; x.ncols()];
    for (row, &w) in x.rows().into_iter().zip(r.iter()) {
        match row.as_slice() {
            Some(a) => g.iter_mut().zip(a).for_each(|(gj, aj)| *gj += w * aj),
            None => g.iter_mut().zip(row.iter()).for_each(|(gj, aj)| *gj += w * aj),
        }
    }
    Array1::from(g)
}
