use std::path::Path;

use serde_json::{json, Value};
use sskr_forge_core::cma::{PlanFailure, ReplayError};
use sskr_forge_core::mlme::MlmeError;
use sskr_forge_core::simkit::SimError;
use sskr_forge_core::sskr::LoadError;
use sskr_forge_core::transform::TransformError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Invalid = 1,
    Planning = 2,
    Numerical = 3,
    Usage = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
    pub detail: Option<Value>,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> CliError {
        CliError { exit, message: message.into(), detail: None }
    }

    pub fn usage(message: impl Into<String>) -> CliError {
        CliError::new(Exit::Usage, message)
    }

    pub fn invalid(message: impl Into<String>) -> CliError {
        CliError::new(Exit::Invalid, message)
    }

    pub fn with_detail(mut self, detail: Value) -> CliError {
        self.detail = Some(detail);
        self
    }
}

/// What a command prints: text for people, a JSON value for `--json`.
pub struct Outcome {
    pub exit: Exit,
    pub text: String,
    pub json: Value,
}

impl Outcome {
    pub fn ok(text: impl Into<String>, json: Value) -> Outcome {
        Outcome { exit: Exit::Success, text: text.into(), json }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, content: &str, inputs: &[&Path]) -> Result<(), CliError> {
    for input in inputs {
        if same_file(path, input) {
            return Err(CliError::usage(format!("refusing to overwrite input {}", input.display())));
        }
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, content).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io { .. } => CliError::usage(e.to_string()),
            LoadError::Schema { .. } => CliError::invalid(e.to_string()),
        }
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        let detail = match &e {
            TransformError::ValidationFailed(r) | TransformError::InvalidInput { report: r, .. } => {
                Some(serde_json::to_value(r).expect("report serializes"))
            }
            _ => None,
        };
        CliError { exit: Exit::Invalid, message: e.to_string(), detail }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let exit = match e {
            SimError::NumericalBlowup { .. } | SimError::ComplexValue { .. } | SimError::Eval { .. } => Exit::Numerical,
            _ => Exit::Invalid,
        };
        CliError::new(exit, e.to_string())
    }
}

impl From<PlanFailure> for CliError {
    fn from(e: PlanFailure) -> Self {
        let detail = match &e {
            PlanFailure::UntransformedStatements(v) => json!({ "untransformed_statements": v }),
            PlanFailure::UnreachableFrameworks(m) => {
                json!({ "unreachable": m.iter().map(|(f, why)| (f.to_string(), json!(why))).collect::<serde_json::Map<_, _>>() })
            }
        };
        CliError::new(Exit::Planning, e.to_string()).with_detail(detail)
    }
}

impl From<ReplayError> for CliError {
    fn from(e: ReplayError) -> Self {
        CliError::new(Exit::Planning, e.to_string())
    }
}

impl From<MlmeError> for CliError {
    fn from(e: MlmeError) -> Self {
        match e {
            MlmeError::Sim(s) => s.into(),
            MlmeError::NoPlausibleFound { best, ref curve } => {
                CliError::new(Exit::Numerical, e.to_string()).with_detail(json!({ "best": best, "curve": curve }))
            }
            MlmeError::PoolExhausted { .. } => CliError::new(Exit::Numerical, e.to_string()),
            other => CliError::invalid(other.to_string()),
        }
    }
}
