//! Proximal operators and projections.

/// `sign(x) * max(|x| - t, 0)`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Euclidean projection of `v` onto the ℓ1 ball of radius `r`.
///
/// Uses the sort-based water-filling threshold; a nonpositive radius projects
/// onto the origin.
pub fn project_l1(v: &[f64], r: f64) -> Vec<f64> {
    if r <= 0.0 {
        return vec![0.0; v.len()];
    }
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= r {
        return v.to_vec();
    }
    let theta = l1_threshold(v, r);
    v.iter().map(|&x| soft_threshold(x, theta)).collect()
}

/// The θ with `Σ max(|v_i| - θ, 0) = r`, for `‖v‖₁ > r > 0`.
fn l1_threshold(v: &[f64], r: f64) -> f64 {
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - r) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta.max(0.0)
}

/// `argmin_x ½‖x − v‖² + τ‖x‖∞`, via `v − project_l1(v, τ)`.
///
/// When `‖v‖₁ ≤ τ` the result is exactly zero.
pub fn prox_linf(v: &[f64], tau: f64) -> Vec<f64> {
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if tau > 0.0 && norm <= tau {
        return vec![0.0; v.len()];
    }
    let p = project_l1(v, tau);
    v.iter().zip(&p).map(|(a, b)| a - b).collect()
}
