/// Whether `a` dominates `b`: no worse in every objective and strictly better
/// in one. `maximize[k]` gives the direction of objective `k`.
pub fn dominates(a: &[f64], b: &[f64], maximize: &[bool]) -> bool {
    let mut strictly = false;
    for k in 0..maximize.len() {
        let (x, y) = if maximize[k] { (a[k], b[k]) } else { (-a[k], -b[k]) };
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the points no other point dominates, ascending.
pub fn pareto_frontier(points: &[Vec<f64>], maximize: &[bool]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates(q, &points[i], maximize)))
        .collect()
}
