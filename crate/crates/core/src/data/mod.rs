//! Patient cohorts: synthetic generation, splitting, balancing and CSV I/O.
//!
//! A cohort is a list of patients, each a sequence of equally spaced windows
//! with one value per circuit feature. A positive patient's stay ends with an
//! event (onset) right after its last window; a window is labeled positive
//! when the onset falls within the next `horizon` windows.

mod csv;
mod generate;
mod split;

pub use self::csv::{read_csv, write_csv};
pub use generate::{generate, generate_with, GeneratorConfig, Planting};
pub use split::{make_training_set, split, window_labels};

use crate::dnf::ReductionError;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid generator configuration: {0}")]
    BadConfig(String),
    #[error(
        "could not fill the requested classes after {attempts} patients ({positives} positive, {negatives} negative)"
    )]
    QuotaUnmet {
        attempts: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("training split has no positive windows")]
    NoPositives,
    #[error("cohort has no patients")]
    Empty,
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patient {
    pub id: String,
    /// One row per window, columns in cohort feature order.
    pub windows: Array2<f64>,
    pub labels: Vec<bool>,
    /// Window index of the event onset; equals `windows.nrows()` since the
    /// stay is cut at the event. `None` for patients without an event.
    pub event_window: Option<usize>,
}

impl Patient {
    pub fn is_positive(&self) -> bool {
        self.event_window.is_some()
    }

    pub fn n_windows(&self) -> usize {
        self.windows.nrows()
    }
}

/// Parameters a synthetic cohort was drawn with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub horizon: usize,
    pub noise: f64,
    pub base_logit: f64,
    pub beta_star: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub feature_names: Vec<String>,
    pub patients: Vec<Patient>,
    pub truth: Option<GroundTruth>,
}

impl Cohort {
    pub fn n_positive(&self) -> usize {
        self.patients.iter().filter(|p| p.is_positive()).count()
    }

    pub fn n_negative(&self) -> usize {
        self.patients.len() - self.n_positive()
    }

    pub fn n_windows(&self) -> usize {
        self.patients.iter().map(Patient::n_windows).sum()
    }

    /// Same patients, without generation metadata.
    pub fn without_truth(&self) -> Cohort {
        Cohort {
            truth: None,
            ..self.clone()
        }
    }
}
