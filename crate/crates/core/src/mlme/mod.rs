//! Calibration, plausibility labeling and active learning of a surrogate
//! classifier over model parameterizations.

mod al;
mod criterion;
mod ga;
mod nn;
mod pool;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simkit::SimError;

pub use al::{active_learn, AlConfig, AlOutcome, AlRound};
pub use criterion::{fitness, label, Criterion, Envelope, Problem};
pub use ga::{evolve, ga_calibrate, GaConfig, GaOutcome};
pub use pool::Pool;
pub use nn::{fit, predict, train_classifier, uncertainty, Classifier, Layer, TrainConfig, TrainReport, WEIGHTS_FORMAT, WEIGHTS_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Plausible,
    Implausible,
}

impl Class {
    pub(crate) fn target(self) -> f64 {
        match self {
            Class::Plausible => 1.0,
            Class::Implausible => 0.0,
        }
    }
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Class::Plausible => "plausible",
            Class::Implausible => "implausible",
        })
    }
}

pub type LabeledSet = Vec<(Vec<f64>, Class)>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlmeError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Config(String),
    #[error("envelope for `{variable}`: {reason}")]
    Envelope { variable: String, reason: String },
    #[error("envelope time {time} for `{variable}` is not an output time of the simulation")]
    GridOffOutput { variable: String, time: f64 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("parameter `{0}` needs bounds to be calibrated")]
    MissingBounds(String),
    #[error("no free parameters to explore")]
    NoFreeParameters,
    #[error("no plausible individual found (best fitness {best})")]
    NoPlausibleFound { best: f64, curve: Vec<f64> },
    #[error("training data contains only {0} points")]
    SingleClassData(Class),
    #[error("pool exhausted before the classes balanced ({plausible} plausible, {implausible} implausible)")]
    PoolExhausted { plausible: usize, implausible: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error("classifier weights: {0}")]
    Weights(String),
}
