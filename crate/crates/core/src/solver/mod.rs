//! Penalized logistic regression: the cost-weighted group ℓ∞ fit and the
//! ℓ1 / scaled-ℓ1 baselines.

mod admm;
mod fista;
mod logistic;
mod model;
mod prox;

pub use admm::{fit_group, group_objective};
pub use fista::{fit_l1, fit_scaled_l1, l1_objective};
pub use logistic::{logistic_loss, logistic_loss_grad, sigmoid, softplus, LossGrad};
pub use model::{standardize_matrix, train, FittedModel, Method, Standardizer};
pub use prox::{project_l1, prox_linf, soft_threshold};

use crate::dnf::ThreeLayerForm;
use crate::regularizer::RegularizerError;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("data has no column for feature '{0}'")]
    MissingFeature(String),
    #[error("labels must be -1 or +1, got {0}")]
    BadLabel(f64),
    #[error("design matrix contains a non-finite value")]
    NonFinite,
    #[error("diverged at iteration {iteration}: non-finite loss")]
    Diverged { iteration: usize },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Regularizer(#[from] RegularizerError),
}

/// Samples over named columns with labels in {−1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<f64>, feature_names: Vec<String>) -> Result<Self, SolverError> {
        if x.nrows() != y.len() {
            return Err(SolverError::Shape(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        if x.ncols() != feature_names.len() {
            return Err(SolverError::Shape(format!(
                "{} columns but {} feature names",
                x.ncols(),
                feature_names.len()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(SolverError::BadLabel(bad));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite);
        }
        Ok(Dataset { x, y, feature_names })
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// The named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<Dataset, SolverError> {
        let cols = names
            .iter()
            .map(|n| self.column(n).ok_or_else(|| SolverError::MissingFeature(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let x = Array2::from_shape_fn((self.n_samples(), cols.len()), |(i, k)| self.x[[i, cols[k]]]);
        Ok(Dataset {
            x,
            y: self.y.clone(),
            feature_names: names.to_vec(),
        })
    }
}

/// One column per (feature, way), copying the feature's column. Columns are
/// named `<feature>#<way>`.
pub fn extend_design(data: &Dataset, form: &ThreeLayerForm) -> Result<Dataset, SolverError> {
    let cols = form
        .ways
        .iter()
        .map(|w| {
            data.column(&w.feature_id)
                .ok_or_else(|| SolverError::MissingFeature(w.feature_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let x = Array2::from_shape_fn((data.n_samples(), cols.len()), |(i, k)| data.x[[i, cols[k]]]);
    let names = form
        .ways
        .iter()
        .map(|w| format!("{}#{}", w.feature_id, w.index))
        .collect();
    Ok(Dataset {
        x,
        y: data.y.clone(),
        feature_names: names,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda_financial: f64,
    pub lambda_time: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub admm_rho: f64,
    pub seed: u64,
    pub fit_intercept: bool,
    pub residual_balancing: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda_financial: 0.0,
            lambda_time: 0.0,
            max_iters: 5000,
            tol: 1e-6,
            admm_rho: 1.0,
            seed: 0,
            fit_intercept: true,
            residual_balancing: true,
        }
    }
}

impl FitConfig {
    pub fn with_lambdas(lambda_financial: f64, lambda_time: f64) -> Self {
        FitConfig {
            lambda_financial,
            lambda_time,
            ..FitConfig::default()
        }
    }

    /// λ for a cost channel: the financial channel uses `lambda_financial`,
    /// every other SUM channel `lambda_time`.
    pub fn lambda_for(&self, channel: &str) -> f64 {
        if channel == "financial" {
            self.lambda_financial
        } else {
            self.lambda_time
        }
    }

    pub(crate) fn check(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::BadConfig(msg));
        for (name, v) in [
            ("lambda_financial", self.lambda_financial),
            ("lambda_time", self.lambda_time),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.admm_rho > 0.0) || !self.admm_rho.is_finite() {
            return bad(format!("admm_rho must be positive, got {}", self.admm_rho));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Gradient steps spent in inner solves (ADMM only).
    #[serde(default)]
    pub inner_iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Final ADMM penalty parameter; absent for proximal-gradient fits.
    pub rho: Option<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub beta: Vec<f64>,
    pub intercept: f64,
    pub diagnostics: Diagnostics,
}
