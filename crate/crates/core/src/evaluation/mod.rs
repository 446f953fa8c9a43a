//! Patient-level evaluation, hyperparameter sweeps and Pareto frontiers.

mod bootstrap;
mod pareto;
mod roc;
mod sweep;
mod table;

pub use bootstrap::bootstrap_auc;
pub use pareto::{dominates, pareto_frontier};
pub use roc::{auc, identify, patient_scores, roc_curve, sensitivity_at_specificity, trajectory_score, trapezoid_area};
pub use sweep::{lambda_pairs, log_grid, sweep, sweep_table, PointResult, SweepConfig, SweepPoint};
pub use table::Table;

use crate::circuit::{Aggregation, CircuitError, CostCircuit};
use crate::data::{Cohort, DataError};
use crate::dnf::{ReductionError, ThreeLayerForm};
use crate::regularizer::cost_report;
use crate::solver::{FittedModel, SolverError};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Specificity at which sensitivity is reported by default.
pub const DEFAULT_SPECIFICITY: f64 = 0.85;
pub const DEFAULT_BOOTSTRAP: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty risk trajectory")]
    EmptyTrajectory,
    #[error("both classes need at least one patient")]
    EmptyClass,
    #[error("scores contain NaN")]
    NanScore,
    #[error("bootstrap: {0}")]
    BadBootstrap(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("invalid sweep: {0}")]
    BadSweep(String),
    #[error("frontier: {0}")]
    Frontier(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_ref: String,
    /// `(FPR, TPR)` points.
    pub roc: Vec<(f64, f64)>,
    pub auc: f64,
    /// Min and max AUC over bootstrap resamples of the patients.
    pub auc_ci: (f64, f64),
    /// Keyed by the specificity target as written, e.g. "0.85".
    pub sensitivity_at_spec: BTreeMap<String, f64>,
    pub costs: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub bootstrap: usize,
    pub seed: u64,
    pub specificities: Vec<f64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            bootstrap: DEFAULT_BOOTSTRAP,
            seed: 0,
            specificities: vec![DEFAULT_SPECIFICITY],
        }
    }
}

/// What deploying a model takes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub features: Vec<String>,
    /// Selection-layer nodes.
    pub tests: Vec<String>,
    /// Cost-bearing nodes of SUM channels anchored below the selection layer.
    pub activities: Vec<String>,
    pub costs: BTreeMap<String, f64>,
}

/// Deployment needs of `model`, whose form may come from a wait-filtered
/// circuit; costs are read off `circuit`.
pub fn deployment(model: &FittedModel, form: &ThreeLayerForm, circuit: &CostCircuit) -> Deployment {
    let selection = model.selection(form, circuit);
    let activities: BTreeSet<String> = circuit
        .channels()
        .iter()
        .filter(|c| c.aggregation == Aggregation::Sum && c.anchor_layer > circuit.selection_layer())
        .flat_map(|c| selection.channel_nodes.get(&c.name).cloned().unwrap_or_default())
        .collect();
    Deployment {
        costs: cost_report(&selection, circuit),
        features: selection.features,
        tests: selection.selection_nodes.into_iter().collect(),
        activities: activities.into_iter().collect(),
    }
}

/// Highest pre-onset risk of each patient, with event labels.
pub fn cohort_scores(model: &FittedModel, cohort: &Cohort) -> Result<(Vec<f64>, Vec<bool>), EvalError> {
    let mut scores = Vec::with_capacity(cohort.patients.len());
    for p in &cohort.patients {
        let traj = patient_scores(model, p, &cohort.feature_names)?;
        scores.push(trajectory_score(&traj)?);
    }
    Ok((scores, cohort.patients.iter().map(|p| p.is_positive()).collect()))
}

/// Scores every patient of `cohort` and reports ROC, AUC with its bootstrap
/// range, sensitivities and the model's deployment cost.
pub fn evaluate_model(
    model: &FittedModel,
    cohort: &Cohort,
    form: &ThreeLayerForm,
    circuit: &CostCircuit,
    opts: &EvalOptions,
    model_ref: &str,
) -> Result<EvalReport, EvalError> {
    let (scores, labels) = cohort_scores(model, cohort)?;
    let pos: Vec<f64> = scores
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| l)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| !l)
        .map(|(&s, _)| s)
        .collect();
    let mut sensitivity_at_spec = BTreeMap::new();
    for &spec in &opts.specificities {
        sensitivity_at_spec.insert(spec.to_string(), sensitivity_at_specificity(&pos, &neg, spec)?);
    }
    Ok(EvalReport {
        model_ref: model_ref.to_string(),
        roc: roc_curve(&pos, &neg)?,
        auc: auc(&pos, &neg)?,
        auc_ci: bootstrap_auc(&scores, &labels, opts.bootstrap, opts.seed)?,
        sensitivity_at_spec,
        costs: cost_report(&model.selection(form, circuit), circuit),
    })
}

/// Rows of `table` on the Pareto frontier of the named objectives
/// (`true` = maximize), computed separately within each combination of the
/// `group_by` columns. Rows whose `status` column is not `ok`, or whose
/// objective cells are not numbers, are left out. Row order is kept.
pub fn frontier_table(table: &Table, objectives: &[(String, bool)], group_by: &[String]) -> Result<Table, EvalError> {
    let col = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| EvalError::Frontier(format!("no column '{name}'")))
    };
    let obj_cols = objectives.iter().map(|(n, _)| col(n)).collect::<Result<Vec<_>, _>>()?;
    let group_cols = group_by.iter().map(|n| col(n)).collect::<Result<Vec<_>, _>>()?;
    let maximize: Vec<bool> = objectives.iter().map(|o| o.1).collect();
    let status = table.column("status");

    let mut groups: BTreeMap<Vec<&str>, Vec<(usize, Vec<f64>)>> = BTreeMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        if status.is_some_and(|s| row[s] != "ok") {
            continue;
        }
        let values: Option<Vec<f64>> = obj_cols
            .iter()
            .map(|&c| row[c].parse::<f64>().ok().filter(|v| !v.is_nan()))
            .collect();
        if let Some(values) = values {
            let key = group_cols.iter().map(|&c| row[c].as_str()).collect();
            groups.entry(key).or_default().push((i, values));
        }
    }
    let mut keep = Vec::new();
    for members in groups.values() {
        let points: Vec<Vec<f64>> = members.iter().map(|m| m.1.clone()).collect();
        keep.extend(pareto_frontier(&points, &maximize).into_iter().map(|k| members[k].0));
    }
    keep.sort_unstable();
    Ok(Table {
        header: table.header.clone(),
        rows: keep.into_iter().map(|i| table.rows[i].clone()).collect(),
    })
}
