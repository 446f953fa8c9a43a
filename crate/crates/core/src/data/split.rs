use super::{Cohort, DataError};
use crate::solver::Dataset;
use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Window `s` is positive iff `onset − horizon ≤ s < onset`.
pub fn window_labels(n_windows: usize, event_window: Option<usize>, horizon: usize) -> Vec<bool> {
    (0..n_windows)
        .map(|s| match event_window {
            Some(onset) => s < onset && s + horizon >= onset,
            None => false,
        })
        .collect()
}

/// Patient-level split, stratified by whether the patient has an event.
/// `round(train_frac · n)` patients of each class go to the training side;
/// both sides keep cohort order.
pub fn split(cohort: &Cohort, train_frac: f64, seed: u64) -> Result<(Cohort, Cohort), DataError> {
    if !(0.0..=1.0).contains(&train_frac) {
        return Err(DataError::BadConfig(format!(
            "train fraction {train_frac} outside [0, 1]"
        )));
    }
    if cohort.patients.is_empty() {
        return Err(DataError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; cohort.patients.len()];
    for positive in [true, false] {
        let mut members: Vec<usize> = (0..cohort.patients.len())
            .filter(|&i| cohort.patients[i].is_positive() == positive)
            .collect();
        members.shuffle(&mut rng);
        let take = (train_frac * members.len() as f64).round() as usize;
        for &i in &members[..take] {
            in_train[i] = true;
        }
    }
    let side = |train: bool| Cohort {
        feature_names: cohort.feature_names.clone(),
        patients: cohort
            .patients
            .iter()
            .zip(&in_train)
            .filter(|(_, &t)| t == train)
            .map(|(p, _)| p.clone())
            .collect(),
        truth: cohort.truth.clone(),
    };
    Ok((side(true), side(false)))
}

/// Window-level samples with classes balanced by subsampling the majority
/// class without replacement. Rows keep cohort order.
pub fn make_training_set(cohort: &Cohort, seed: u64) -> Result<Dataset, DataError> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (pi, p) in cohort.patients.iter().enumerate() {
        for (w, &label) in p.labels.iter().enumerate() {
            if label {
                pos.push((pi, w));
            } else {
                neg.push((pi, w));
            }
        }
    }
    if pos.is_empty() {
        return Err(DataError::NoPositives);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (keep_n, majority) = if neg.len() > pos.len() {
        (pos.len(), &mut neg)
    } else {
        (neg.len(), &mut pos)
    };
    let mut chosen = index::sample(&mut rng, majority.len(), keep_n).into_vec();
    chosen.sort_unstable();
    *majority = chosen.into_iter().map(|i| majority[i]).collect();

    let mut rows: Vec<(usize, usize, bool)> = pos
        .into_iter()
        .map(|(p, w)| (p, w, true))
        .chain(neg.into_iter().map(|(p, w)| (p, w, false)))
        .collect();
    rows.sort_unstable();
    let n_feat = cohort.feature_names.len();
    let x = Array2::from_shape_fn((rows.len(), n_feat), |(i, k)| {
        let (p, w, _) = rows[i];
        cohort.patients[p].windows[[w, k]]
    });
    let y = rows.iter().map(|r| if r.2 { 1.0 } else { -1.0 }).collect();
    Dataset::new(x, y, cohort.feature_names.clone()).map_err(|e| DataError::Csv(e.to_string()))
}
