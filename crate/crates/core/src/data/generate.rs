use super::{split::window_labels, Cohort, DataError, GroundTruth, Patient};
use crate::circuit::CostCircuit;
use crate::dnf::{reduce, ReductionOptions};
use crate::regularizer::{cost_report, summed_cost, FeatureSelection, IndexEntry};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::BTreeMap;

/// Which features carry signal in the event hazard.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Planting {
    /// Zero-cost features carry most of the signal. Costly features add a
    /// smaller increment, with the dearer tests weighted more. Buying tests
    /// improves accuracy a little, at a steep price.
    CostSpanning,
    /// Only zero-cost features carry weight.
    RoutineOnly,
}

/// Synthetic cohort parameters. Window and stay lengths are stand-ins; no
/// clinical time scale is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_pos: usize,
    pub n_neg: usize,
    /// Windows before onset labeled positive.
    pub horizon: usize,
    pub seed: u64,
    pub min_stay: usize,
    pub max_stay: usize,
    /// AR(1) coefficient of each latent feature trajectory.
    pub ar_coef: f64,
    /// Standard deviation of the per-patient latent offset.
    pub offset_sd: f64,
    /// Standard deviation of observation noise on top of the latent state.
    pub noise: f64,
    /// Hazard logit at a zero latent state.
    pub base_logit: f64,
    pub planting: Planting,
    /// Σβ*² over zero-cost features and over costly features.
    pub routine_signal: f64,
    pub costly_signal: f64,
    /// Patients drawn per requested patient before giving up.
    pub max_attempts_factor: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_pos: 300,
            n_neg: 1700,
            horizon: 12,
            seed: 0,
            min_stay: 8,
            max_stay: 40,
            ar_coef: 0.9,
            offset_sd: 1.0,
            noise: 0.5,
            base_logit: -5.0,
            planting: Planting::CostSpanning,
            routine_signal: 6.0,
            costly_signal: 0.5,
            max_attempts_factor: 200,
        }
    }
}

impl GeneratorConfig {
    fn check(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::BadConfig(m.to_string()));
        if self.n_pos + self.n_neg == 0 {
            return bad("at least one patient must be requested");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least one window");
        }
        if self.min_stay == 0 || self.min_stay > self.max_stay {
            return bad("stay lengths must satisfy 1 <= min_stay <= max_stay");
        }
        if !(self.ar_coef.abs() < 1.0) {
            return bad("ar_coef must lie in (-1, 1)");
        }
        for v in [self.offset_sd, self.noise, self.routine_signal, self.costly_signal] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad("standard deviations and signal levels must be finite and nonnegative");
            }
        }
        if !self.base_logit.is_finite() {
            return bad("base_logit must be finite");
        }
        Ok(())
    }
}

/// Cohort with default parameters apart from the given ones.
pub fn generate(
    circuit: &CostCircuit,
    n_pos: usize,
    n_neg: usize,
    horizon: usize,
    seed: u64,
) -> Result<Cohort, DataError> {
    generate_with(
        circuit,
        &GeneratorConfig {
            n_pos,
            n_neg,
            horizon,
            seed,
            ..GeneratorConfig::default()
        },
    )
}

/// Draws patients until both class quotas are filled.
///
/// Each feature follows a latent AR(1) trajectory around a patient offset.
/// In every window the event fires with probability σ(b₀ + β*ᵀ latent); the
/// stay ends at the event, or after its drawn length. Observed values are the
/// latent state plus noise.
pub fn generate_with(circuit: &CostCircuit, cfg: &GeneratorConfig) -> Result<Cohort, DataError> {
    cfg.check()?;
    let features: Vec<String> = circuit.feature_ids().into_iter().map(String::from).collect();
    let beta_star = plant(circuit, &features, cfg)?;
    let weights: Vec<f64> = features
        .iter()
        .map(|f| beta_star.get(f).copied().unwrap_or(0.0))
        .collect();
    let p = features.len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let innovation = (1.0 - cfg.ar_coef * cfg.ar_coef).sqrt();
    let max_attempts = cfg.max_attempts_factor * (cfg.n_pos + cfg.n_neg);
    let (mut pos, mut neg) = (0usize, 0usize);
    let mut patients = Vec::with_capacity(cfg.n_pos + cfg.n_neg);
    let mut attempts = 0;

    while pos < cfg.n_pos || neg < cfg.n_neg {
        if attempts == max_attempts {
            return Err(DataError::QuotaUnmet {
                attempts,
                positives: pos,
                negatives: neg,
            });
        }
        attempts += 1;
        let stay = rng.random_range(cfg.min_stay..=cfg.max_stay);
        let offset: Vec<f64> = (0..p).map(|_| cfg.offset_sd * normal(&mut rng)).collect();
        let mut state: Vec<f64> = (0..p).map(|_| normal(&mut rng)).collect();
        let mut rows: Vec<f64> = Vec::with_capacity(stay * p);
        let mut event = None;
        for t in 0..stay {
            if t > 0 {
                for s in state.iter_mut() {
                    *s = cfg.ar_coef * *s + innovation * normal(&mut rng);
                }
            }
            let mut logit = cfg.base_logit;
            for k in 0..p {
                let latent = offset[k] + state[k];
                logit += weights[k] * latent;
                rows.push(latent + cfg.noise * normal(&mut rng));
            }
            if rng.random::<f64>() < crate::solver::sigmoid(logit) {
                event = Some(t + 1);
                break;
            }
        }
        let wanted = match event {
            Some(_) => pos < cfg.n_pos,
            None => neg < cfg.n_neg,
        };
        if !wanted {
            continue;
        }
        if event.is_some() {
            pos += 1;
        } else {
            neg += 1;
        }
        let n = rows.len() / p.max(1);
        let windows = Array2::from_shape_vec((n, p), rows).expect("row-major windows");
        let labels = window_labels(n, event, cfg.horizon);
        patients.push(Patient {
            id: format!("p{:05}", patients.len()),
            windows,
            labels,
            event_window: event,
        });
    }

    Ok(Cohort {
        feature_names: features,
        patients,
        truth: Some(GroundTruth {
            seed: cfg.seed,
            horizon: cfg.horizon,
            noise: cfg.noise,
            base_logit: cfg.base_logit,
            beta_star,
        }),
    })
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Planted coefficients, keyed by feature.
///
/// Zero-cost features: every other one (by id) gets an equal weight with
/// alternating sign. Costly features: every other one gets a weight
/// proportional to `1 + sqrt(cost / max cost)`, alternating sign. Each part
/// is scaled to its configured Σβ².
fn plant(
    circuit: &CostCircuit,
    features: &[String],
    cfg: &GeneratorConfig,
) -> Result<BTreeMap<String, f64>, DataError> {
    let form = reduce(circuit, ReductionOptions::default())?;
    let mut free = Vec::new();
    let mut costly = Vec::new();
    for f in features {
        let cheapest = form
            .ways_of(f)
            .iter()
            .map(|w| {
                let sel = FeatureSelection::from_ways(
                    &form,
                    vec![IndexEntry {
                        feature: f.clone(),
                        way: w.index,
                    }],
                );
                summed_cost(&cost_report(&sel, circuit), circuit)
            })
            .fold(f64::INFINITY, f64::min);
        if cheapest == 0.0 {
            free.push(f.clone());
        } else if cheapest.is_finite() {
            costly.push((f.clone(), cheapest));
        }
    }

    let mut beta = BTreeMap::new();
    let free_pick: Vec<&String> = free.iter().step_by(2).collect();
    let scale = (cfg.routine_signal / free_pick.len().max(1) as f64).sqrt();
    for (k, f) in free_pick.into_iter().enumerate() {
        beta.insert(f.clone(), if k % 2 == 0 { scale } else { -scale });
    }

    if cfg.planting == Planting::CostSpanning {
        let max_cost = costly.iter().map(|c| c.1).fold(0.0, f64::max);
        let picked: Vec<(&String, f64)> = costly
            .iter()
            .step_by(2)
            .map(|(f, c)| (f, 1.0 + (c / max_cost).sqrt()))
            .collect();
        let norm = picked.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            let scale = cfg.costly_signal.sqrt() / norm;
            for (k, (f, w)) in picked.into_iter().enumerate() {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                beta.insert(f.clone(), sign * w * scale);
            }
        }
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::fixtures;

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            n_pos: 20,
            n_neg: 40,
            seed,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn same_seed_same_cohort() {
        let c = fixtures::icu();
        let a = generate_with(&c, &small(7)).unwrap();
        let b = generate_with(&c, &small(7)).unwrap();
        assert_eq!(a, b);
        let other = generate_with(&c, &small(8)).unwrap();
        assert_ne!(a.patients, other.patients);
    }

    #[test]
    fn quotas_and_shapes() {
        let c = fixtures::icu();
        let cohort = generate_with(&c, &small(1)).unwrap();
        assert_eq!(cohort.n_positive(), 20);
        assert_eq!(cohort.n_negative(), 40);
        assert_eq!(cohort.feature_names.len(), c.feature_ids().len());
        for p in &cohort.patients {
            assert_eq!(p.windows.ncols(), cohort.feature_names.len());
            assert_eq!(p.labels.len(), p.n_windows());
            match p.event_window {
                Some(e) => assert_eq!(e, p.n_windows()),
                None => assert!(p.n_windows() >= 8 && p.labels.iter().all(|&l| !l)),
            }
        }
    }

    #[test]
    fn all_negative_cohort() {
        let c = fixtures::icu();
        let cohort = generate(&c, 0, 15, 6, 3).unwrap();
        assert_eq!(cohort.n_positive(), 0);
        assert_eq!(cohort.patients.len(), 15);
    }

    #[test]
    fn planting_spans_costs() {
        let c = fixtures::icu();
        let cohort = generate_with(&c, &small(2)).unwrap();
        let beta = &cohort.truth.unwrap().beta_star;
        assert!(beta.contains_key("f_hr_mean") || beta.contains_key("f_hr_max"));
        assert!(beta
            .keys()
            .any(|f| f == "f_lactate" || f == "f_ph" || f == "f_wbc" || f == "f_creatinine"));

        let routine = generate_with(
            &c,
            &GeneratorConfig {
                planting: Planting::RoutineOnly,
                ..small(2)
            },
        )
        .unwrap();
        let rb = routine.truth.unwrap().beta_star;
        let total: f64 = rb.values().map(|b| b * b).sum();
        assert!((total - GeneratorConfig::default().routine_signal).abs() < 1e-12);
    }

    #[test]
    fn impossible_quota_errors() {
        let c = fixtures::icu();
        let cfg = GeneratorConfig {
            n_pos: 5,
            n_neg: 0,
            base_logit: -60.0,
            max_attempts_factor: 3,
            ..GeneratorConfig::default()
        };
        assert!(matches!(generate_with(&c, &cfg), Err(DataError::QuotaUnmet { .. })));
        let bad = GeneratorConfig { horizon: 0, ..small(0) };
        assert!(matches!(generate_with(&c, &bad), Err(DataError::BadConfig(_))));
    }
}
