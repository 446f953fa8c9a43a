use super::EvalError;
use crate::data::Patient;
use crate::solver::FittedModel;

/// Risk per window, restricted to windows before the onset for patients with
/// an event.
pub fn patient_scores(model: &FittedModel, patient: &Patient, feature_names: &[String]) -> Result<Vec<f64>, EvalError> {
    let n = patient
        .event_window
        .map_or(patient.n_windows(), |e| e.min(patient.n_windows()));
    let rows = patient.windows.slice(ndarray::s![..n, ..]);
    Ok(model.probabilities(rows, feature_names)?)
}

/// Highest risk along a trajectory.
pub fn trajectory_score(trajectory: &[f64]) -> Result<f64, EvalError> {
    trajectory
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(EvalError::EmptyTrajectory)
}

/// Whether the trajectory ever rises above `threshold`.
pub fn identify(trajectory: &[f64], threshold: f64) -> Result<bool, EvalError> {
    Ok(trajectory_score(trajectory)? > threshold)
}

fn check(pos: &[f64], neg: &[f64]) -> Result<(), EvalError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::EmptyClass);
    }
    if pos.iter().chain(neg).any(|s| s.is_nan()) {
        return Err(EvalError::NanScore);
    }
    Ok(())
}

/// `(FPR, TPR)` for every distinct score used as a `≥` threshold, from the
/// strictest down, starting at (0, 0) and ending at (1, 1).
pub fn roc_curve(pos: &[f64], neg: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    check(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        while i < all.len() && all[i].0 == s {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / nn, tp as f64 / np));
    }
    Ok(points)
}

/// Area under a piecewise-linear curve.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half (Mann–Whitney via midranks).
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64, EvalError> {
    check(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j share their mean
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Largest TPR among ROC points whose specificity is at least `specificity`.
pub fn sensitivity_at_specificity(pos: &[f64], neg: &[f64], specificity: f64) -> Result<f64, EvalError> {
    let max_fpr = 1.0 - specificity + 1e-12;
    Ok(roc_curve(pos, neg)?
        .into_iter()
        .filter(|p| p.0 <= max_fpr)
        .map(|p| p.1)
        .fold(0.0, f64::max))
}
