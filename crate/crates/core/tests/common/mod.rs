//! Reference fits shared by the integration tests.

use costwise::solver::Dataset;

/// Unregularized logistic regression by Newton steps, as `(beta, intercept)`.
pub fn newton_reference(d: &Dataset) -> (Vec<f64>, f64) {
    let (n, p) = (d.n_samples(), d.n_features());
    let mut theta = vec![0.0; p + 1];
    for _ in 0..100 {
        let mut grad = vec![0.0; p + 1];
        let mut hess = vec![vec![0.0; p + 1]; p + 1];
        for i in 0..n {
            let row: Vec<f64> = (0..p).map(|j| d.x[[i, j]]).chain([1.0]).collect();
            let m: f64 = row.iter().zip(&theta).map(|(a, b)| a * b).sum();
            let s = 1.0 / (1.0 + (d.y[i] * m).exp());
            let w = s * (1.0 - s);
            for a in 0..=p {
                grad[a] += -d.y[i] * s * row[a] / n as f64;
                for b in 0..=p {
                    hess[a][b] += w * row[a] * row[b] / n as f64;
                }
            }
        }
        let step = solve(hess, grad.clone());
        for (t, s) in theta.iter_mut().zip(&step) {
            *t -= s;
        }
        if grad.iter().all(|g| g.abs() < 1e-13) {
            break;
        }
    }
    (theta[..p].to_vec(), theta[p])
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}
