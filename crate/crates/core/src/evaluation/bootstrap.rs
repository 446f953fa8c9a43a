use super::{roc::auc, EvalError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Redraws allowed per replicate when a resample misses a class.
const MAX_REDRAWS: usize = 100;

/// Range (min, max) of the AUC over `b` patient resamples drawn with
/// replacement. Ten replicates cannot support percentile intervals, so the
/// full spread is reported.
pub fn bootstrap_auc(scores: &[f64], labels: &[bool], b: usize, seed: u64) -> Result<(f64, f64), EvalError> {
    if b < 2 {
        return Err(EvalError::BadBootstrap(format!("need at least 2 replicates, got {b}")));
    }
    if scores.len() != labels.len() {
        return Err(EvalError::BadBootstrap(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if !labels.iter().any(|&l| l) || labels.iter().all(|&l| l) {
        return Err(EvalError::EmptyClass);
    }
    let n = scores.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut pos = Vec::with_capacity(n);
    let mut neg = Vec::with_capacity(n);
    for _ in 0..b {
        let mut redraws = 0;
        loop {
            pos.clear();
            neg.clear();
            for _ in 0..n {
                let i = rng.random_range(0..n);
                if labels[i] {
                    pos.push(scores[i]);
                } else {
                    neg.push(scores[i]);
                }
            }
            if !pos.is_empty() && !neg.is_empty() {
                break;
            }
            redraws += 1;
            if redraws > MAX_REDRAWS {
                return Err(EvalError::BadBootstrap(format!(
                    "{MAX_REDRAWS} consecutive resamples lacked a class"
                )));
            }
        }
        let a = auc(&pos, &neg)?;
        lo = lo.min(a);
        hi = hi.max(a);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation_has_no_spread() {
        let scores = [0.9, 0.9, 0.9, 0.1, 0.1, 0.1];
        let labels = [true, true, true, false, false, false];
        assert_eq!(bootstrap_auc(&scores, &labels, 10, 3).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn deterministic_and_redraws_degenerate_resamples() {
        // one positive among many: most resamples need a redraw or two
        let mut scores: Vec<f64> = (0..12).map(|i| i as f64 / 12.0).collect();
        scores.push(0.5);
        let mut labels = vec![false; 12];
        labels.push(true);
        let a = bootstrap_auc(&scores, &labels, 10, 42).unwrap();
        assert_eq!(a, bootstrap_auc(&scores, &labels, 10, 42).unwrap());
        assert!(a.0 <= a.1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(bootstrap_auc(&[0.1, 0.2], &[true, false], 1, 0).is_err());
        assert!(matches!(
            bootstrap_auc(&[0.1, 0.2], &[true, true], 10, 0),
            Err(EvalError::EmptyClass)
        ));
    }
}
