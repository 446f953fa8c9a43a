//! Trained models: standardization, method dispatch, prediction and
//! serialization.

use super::{extend_design, fit_group, fit_l1, fit_scaled_l1, Dataset, Diagnostics, FitConfig, SolverError};
use crate::circuit::CostCircuit;
use crate::dnf::ThreeLayerForm;
use crate::regularizer::{
    build_all_groups, cheapest_selection, feature_scales, ExtendedIndex, ExtendedModel, FeatureSelection,
};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Cost-weighted group ℓ∞ penalty over the extended (feature, way) vector.
    Group,
    L1,
    /// ℓ1 with each feature weighted by its cheapest financial cost.
    ScaledL1,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Group, Method::L1, Method::ScaledL1];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Group => "group",
            Method::L1 => "l1",
            Method::ScaledL1 => "scaled-l1",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "group" => Ok(Method::Group),
            "l1" => Ok(Method::L1),
            "scaled-l1" => Ok(Method::ScaledL1),
            _ => Err(format!("unknown method '{s}' (expected group, l1 or scaled-l1)")),
        }
    }
}

/// Per-column z-scoring fitted on a training split. Constant columns keep a
/// unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub features: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Self {
        let n = data.n_samples().max(1) as f64;
        let mut mean = Vec::with_capacity(data.n_features());
        let mut std = Vec::with_capacity(data.n_features());
        for col in data.x.columns() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            std.push(if s > 1e-12 { s } else { 1.0 });
        }
        Standardizer {
            features: data.feature_names.clone(),
            mean,
            std,
        }
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset, SolverError> {
        let base = data.select_columns(&self.features)?;
        let mut x = base.x;
        for (k, mut col) in x.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| (v - self.mean[k]) / self.std[k]);
        }
        Ok(Dataset { x, ..base })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub method: Method,
    pub wait_cap: Option<f64>,
    pub config: FitConfig,
    #[serde(flatten)]
    pub model: ExtendedModel,
    pub standardizer: Standardizer,
    pub diagnostics: Diagnostics,
}

impl FittedModel {
    /// Total coefficient on each standardized base feature.
    pub fn base_weights(&self) -> Vec<f64> {
        self.standardizer
            .features
            .iter()
            .map(|f| match self.model.index.range(f) {
                Some(r) => r.map(|j| self.model.beta[j]).sum(),
                None => 0.0,
            })
            .collect()
    }

    /// Linear predictor for rows whose columns are named by `names`.
    pub fn logits(&self, x: ArrayView2<f64>, names: &[String]) -> Result<Vec<f64>, SolverError> {
        let cols = self
            .standardizer
            .features
            .iter()
            .map(|f| {
                names
                    .iter()
                    .position(|n| n == f)
                    .ok_or_else(|| SolverError::MissingFeature(f.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let weights = self.base_weights();
        let s = &self.standardizer;
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                let mut z = self.model.intercept;
                for (k, &c) in cols.iter().enumerate() {
                    if weights[k] != 0.0 {
                        z += weights[k] * (row[c] - s.mean[k]) / s.std[k];
                    }
                }
                z
            })
            .collect())
    }

    pub fn probabilities(&self, x: ArrayView2<f64>, names: &[String]) -> Result<Vec<f64>, SolverError> {
        Ok(self.logits(x, names)?.into_iter().map(super::sigmoid).collect())
    }

    /// What the model needs at deployment. Group models use their active
    /// ways; base-feature models get the cheapest ways for their features.
    pub fn selection(&self, form: &ThreeLayerForm, circuit: &CostCircuit) -> FeatureSelection {
        match self.method {
            Method::Group => self.model.collapse(form),
            Method::L1 | Method::ScaledL1 => cheapest_selection(form, circuit, &self.model.active_features()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Fits `method` on `data`, which holds unstandardized base-feature columns.
///
/// Only features feasible in `form` are used; they are z-scored on `data`.
pub fn train(
    method: Method,
    data: &Dataset,
    form: &ThreeLayerForm,
    circuit: &CostCircuit,
    cfg: &FitConfig,
    wait_cap: Option<f64>,
) -> Result<FittedModel, SolverError> {
    cfg.check()?;
    let base = data.select_columns(&form.features)?;
    let standardizer = Standardizer::fit(&base);
    let z = standardizer.apply(&base)?;
    let (index, out) = match method {
        Method::Group => {
            let specs = build_all_groups(form, circuit, |ch| cfg.lambda_for(ch))?;
            let ext = extend_design(&z, form)?;
            (ExtendedIndex::from_form(form), fit_group(&ext, &specs, cfg)?)
        }
        Method::L1 => (
            ExtendedIndex::base(&form.features),
            fit_l1(&z, cfg.lambda_financial, cfg)?,
        ),
        Method::ScaledL1 => {
            let scale = feature_scales(form, circuit, "financial", &form.features);
            (
                ExtendedIndex::base(&form.features),
                fit_scaled_l1(&z, cfg.lambda_financial, &scale, cfg)?,
            )
        }
    };
    Ok(FittedModel {
        method,
        wait_cap,
        config: cfg.clone(),
        model: ExtendedModel::new(index, out.beta, out.intercept),
        standardizer,
        diagnostics: out.diagnostics,
    })
}

/// Rows of `x` standardized by `s`, for callers holding a raw matrix.
pub fn standardize_matrix(s: &Standardizer, x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for (k, mut col) in out.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|v| (v - s.mean[k]) / s.std[k]);
    }
    out
}
