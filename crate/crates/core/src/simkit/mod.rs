//! Compiled right-hand sides, fixed-step integration and simulation documents.

mod compile;
mod document;
mod solve;

use thiserror::Error;

use crate::cma::Framework;

pub use compile::{compile, ExecutableModel};
pub use document::emit_simulation_document;
pub use solve::{simulate, ConfigError, SimConfig, Solver, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("`{0}` has spatial terms; PDE solving is not supported")]
    UnsupportedPde(String),
    #[error("parameter `{0}` has no value")]
    UnresolvedParameter(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("{0} models cannot be simulated")]
    UnsupportedFramework(Framework),
    #[error("term `{term}` of d{variable}/dt: {reason}")]
    BadTerm { variable: String, term: String, reason: String },
    #[error("d{variable}/dt evaluated to the complex value {value}")]
    ComplexValue { variable: String, value: num_complex::Complex64 },
    #[error("d{variable}/dt: {reason}")]
    Eval { variable: String, reason: String },
    #[error("numerical blowup at step {step} in `{variable}`")]
    NumericalBlowup { step: usize, variable: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}
