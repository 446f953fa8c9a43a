use super::{deployment, evaluate_model, EvalError, EvalOptions, EvalReport, Table};
use crate::circuit::{filter_by_wait, CostCircuit};
use crate::data::{make_training_set, split, Cohort};
use crate::dnf::{reduce, ReductionOptions, ThreeLayerForm};
use crate::solver::{train, Diagnostics, FitConfig, Method};
use rayon::prelude::*;
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// `(λ_financial, λ_time)` pairs. Base-feature methods only use the
    /// first component and are fitted once per distinct value.
    pub lambda_grid: Vec<(f64, f64)>,
    pub wait_caps: Vec<f64>,
    pub methods: Vec<Method>,
    /// Solver settings; its lambdas are overridden per point.
    pub fit: FitConfig,
    pub train_frac: f64,
    pub seed: u64,
    pub eval: EvalOptions,
    pub workers: usize,
    pub reduction: ReductionOptions,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let grid = log_grid(1e-7, 1e-3, 9);
        SweepConfig {
            lambda_grid: lambda_pairs(&grid, None),
            wait_caps: vec![0.0, 10.0, 50.0],
            methods: Method::ALL.to_vec(),
            fit: FitConfig::default(),
            train_frac: 0.75,
            seed: 0,
            eval: EvalOptions::default(),
            workers: 1,
            reduction: ReductionOptions::default(),
        }
    }
}

/// `k` logarithmically spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let (a, b) = (min.ln(), max.ln());
            (0..k)
                .map(|i| {
                    if i == 0 {
                        min
                    } else if i == k - 1 {
                        max
                    } else {
                        (a + (b - a) * i as f64 / (k - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Every combination of grid values, or the grid paired with a fixed
/// `λ_time`.
pub fn lambda_pairs(grid: &[f64], fixed_time: Option<f64>) -> Vec<(f64, f64)> {
    match fixed_time {
        Some(t) => grid.iter().map(|&f| (f, t)).collect(),
        None => grid.iter().flat_map(|&f| grid.iter().map(move |&t| (f, t))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub report: EvalReport,
    pub features: Vec<String>,
    pub tests: Vec<String>,
    pub activities: Vec<String>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub wait_cap: f64,
    pub method: Method,
    pub lambda_financial: f64,
    pub lambda_time: f64,
    pub result: Result<PointResult, String>,
}

struct Job {
    cap_index: usize,
    method: Method,
    lambdas: (f64, f64),
}

/// Fits and evaluates every (W, method, λ) point.
///
/// The cohort is split once; the balanced training set and the held-out
/// patients are shared by all points. For each wait cap the circuit is
/// filtered and reduced once. A point that fails is recorded with its error
/// and the sweep continues. Output order follows the configuration (caps,
/// then methods, then grid), independent of the worker count.
pub fn sweep(cohort: &Cohort, circuit: &CostCircuit, cfg: &SweepConfig) -> Result<Vec<SweepPoint>, EvalError> {
    if cfg.lambda_grid.is_empty() || cfg.wait_caps.is_empty() || cfg.methods.is_empty() {
        return Err(EvalError::BadSweep(
            "grid, wait caps and methods must be nonempty".into(),
        ));
    }
    if let Some(bad) = cfg
        .lambda_grid
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .chain(cfg.wait_caps.iter().copied())
        .find(|v| !(*v >= 0.0) || !v.is_finite())
    {
        return Err(EvalError::BadSweep(format!(
            "values must be finite and nonnegative, got {bad}"
        )));
    }
    let (train_side, test_side) = split(cohort, cfg.train_frac, cfg.seed)?;
    let train_set = make_training_set(&train_side, cfg.seed)?;

    let forms: Vec<Result<(CostCircuit, ThreeLayerForm), String>> = cfg
        .wait_caps
        .iter()
        .map(|&w| {
            let filtered = filter_by_wait(circuit, w).map_err(|e| e.to_string())?;
            let form = reduce(&filtered, cfg.reduction).map_err(|e| e.to_string())?;
            Ok((filtered, form))
        })
        .collect();

    let mut jobs = Vec::new();
    for cap_index in 0..cfg.wait_caps.len() {
        for &method in &cfg.methods {
            let mut seen = BTreeSet::new();
            for &(lf, lt) in &cfg.lambda_grid {
                let lambdas = match method {
                    Method::Group => (lf, lt),
                    Method::L1 | Method::ScaledL1 => (lf, 0.0),
                };
                if seen.insert((lambdas.0.to_bits(), lambdas.1.to_bits())) {
                    jobs.push(Job {
                        cap_index,
                        method,
                        lambdas,
                    });
                }
            }
        }
    }

    let run = |job: &Job| -> SweepPoint {
        let w = cfg.wait_caps[job.cap_index];
        let result = forms[job.cap_index]
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|(filtered, form)| {
                run_point(&train_set, &test_side, circuit, filtered, form, job, w, cfg).map_err(|e| e.to_string())
            });
        SweepPoint {
            wait_cap: w,
            method: job.method,
            lambda_financial: job.lambdas.0,
            lambda_time: job.lambdas.1,
            result,
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| EvalError::BadSweep(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(run).collect()))
}

#[allow(clippy::too_many_arguments)]
fn run_point(
    train_set: &crate::solver::Dataset,
    test: &Cohort,
    circuit: &CostCircuit,
    filtered: &CostCircuit,
    form: &ThreeLayerForm,
    job: &Job,
    wait_cap: f64,
    cfg: &SweepConfig,
) -> Result<PointResult, EvalError> {
    let fit = FitConfig {
        lambda_financial: job.lambdas.0,
        lambda_time: job.lambdas.1,
        ..cfg.fit.clone()
    };
    let model = train(job.method, train_set, form, filtered, &fit, Some(wait_cap))?;
    let model_ref = format!(
        "{}/W={}/lf={}/lt={}",
        job.method, wait_cap, job.lambdas.0, job.lambdas.1
    );
    // costs are read off the unfiltered circuit, which carries every annotation
    let report = evaluate_model(&model, test, form, circuit, &cfg.eval, &model_ref)?;
    let d = deployment(&model, form, circuit);
    Ok(PointResult {
        report,
        features: d.features,
        tests: d.tests,
        activities: d.activities,
        diagnostics: model.diagnostics,
    })
}

/// One row per sweep point. Lists are `;`-separated; failed points carry
/// their error and empty metric cells.
pub fn sweep_table(points: &[SweepPoint], circuit: &CostCircuit, specificity: f64) -> Table {
    let sens_key = specificity.to_string();
    let mut header: Vec<String> = [
        "wait_cap",
        "method",
        "lambda_financial",
        "lambda_time",
        "status",
        "auc",
        "auc_low",
        "auc_high",
    ]
    .map(String::from)
    .to_vec();
    header.push(format!("sensitivity_at_{sens_key}"));
    for ch in circuit.channels() {
        header.push(format!("cost_{}", ch.name));
    }
    for h in [
        "n_features",
        "tests",
        "activities",
        "features",
        "iterations",
        "converged",
        "error",
    ] {
        header.push(h.to_string());
    }

    let rows = points
        .iter()
        .map(|p| {
            let mut row = vec![
                p.wait_cap.to_string(),
                p.method.to_string(),
                p.lambda_financial.to_string(),
                p.lambda_time.to_string(),
            ];
            match &p.result {
                Ok(r) => {
                    row.push("ok".into());
                    row.push(r.report.auc.to_string());
                    row.push(r.report.auc_ci.0.to_string());
                    row.push(r.report.auc_ci.1.to_string());
                    row.push(
                        r.report
                            .sensitivity_at_spec
                            .get(&sens_key)
                            .map(f64::to_string)
                            .unwrap_or_default(),
                    );
                    for ch in circuit.channels() {
                        row.push(r.report.costs.get(&ch.name).map(f64::to_string).unwrap_or_default());
                    }
                    row.push(r.features.len().to_string());
                    row.push(r.tests.join(";"));
                    row.push(r.activities.join(";"));
                    row.push(r.features.join(";"));
                    row.push(r.diagnostics.iterations.to_string());
                    row.push(r.diagnostics.converged.to_string());
                    row.push(String::new());
                }
                Err(e) => {
                    row.push("error".into());
                    row.resize(header.len() - 1, String::new());
                    row.push(e.clone());
                }
            }
            row
        })
        .collect();
    Table { header, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shapes() {
        let g = log_grid(1e-7, 1e-3, 9);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 1e-7);
        assert_eq!(g[8], 1e-3);
        assert!((g[4] - 1e-5).abs() < 1e-18);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(lambda_pairs(&g, None).len(), 81);
        assert_eq!(
            lambda_pairs(&g[..3], Some(0.5)),
            vec![(g[0], 0.5), (g[1], 0.5), (g[2], 0.5)]
        );
        assert_eq!(log_grid(1.0, 2.0, 1), vec![1.0]);
    }
}
