use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::compile::ExecutableModel;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Solver {
    Euler,
    #[serde(rename = "RK2")]
    Rk2,
    #[serde(rename = "RK4")]
    Rk4,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Euler => "Euler",
            Solver::Rk2 => "RK2",
            Solver::Rk4 => "RK4",
        })
    }
}

impl std::str::FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Solver::Euler),
            "rk2" => Ok(Solver::Rk2),
            "rk4" => Ok(Solver::Rk4),
            _ => Err(format!("unknown solver `{s}` (expected euler, rk2 or rk4)")),
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub solver: Solver,
    pub dt: f64,
    pub t_end: f64,
    pub initial: BTreeMap<String, f64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Output every `stride`-th step; the final time is always output.
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub knockout: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("dt must be a positive number, got {0}")]
    BadStep(f64),
    #[error("t_end must be a positive number, got {0}")]
    BadEnd(f64),
    #[error("dt {dt} exceeds t_end {t_end}")]
    StepExceedsEnd { dt: f64, t_end: f64 },
    #[error("stride must be at least 1")]
    BadStride,
    #[error("no initial condition for `{0}`")]
    MissingInitial(String),
    #[error("initial condition for unknown variable `{0}`")]
    UnknownInitial(String),
    #[error("initial condition for `{0}` is not finite")]
    NonFiniteInitial(String),
    #[error("knockout of unknown variable `{0}`")]
    UnknownKnockout(String),
}

impl SimConfig {
    pub fn new(solver: Solver, dt: f64, t_end: f64, initial: BTreeMap<String, f64>) -> SimConfig {
        SimConfig { solver, dt, t_end, initial, params: BTreeMap::new(), stride: 1, knockout: BTreeSet::new() }
    }

    pub fn validate(&self, variables: &[String]) -> Result<(), ConfigError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ConfigError::BadStep(self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(ConfigError::BadEnd(self.t_end));
        }
        if self.dt > self.t_end {
            return Err(ConfigError::StepExceedsEnd { dt: self.dt, t_end: self.t_end });
        }
        if self.stride == 0 {
            return Err(ConfigError::BadStride);
        }
        for v in variables {
            match self.initial.get(v) {
                None => return Err(ConfigError::MissingInitial(v.clone())),
                Some(x) if !x.is_finite() => return Err(ConfigError::NonFiniteInitial(v.clone())),
                Some(_) => {}
            }
        }
        let known = |id: &String| variables.contains(id);
        if let Some(v) = self.initial.keys().find(|v| !known(v)) {
            return Err(ConfigError::UnknownInitial(v.clone()));
        }
        if let Some(v) = self.knockout.iter().find(|v| !known(v)) {
            return Err(ConfigError::UnknownKnockout(v.clone()));
        }
        Ok(())
    }

    /// Number of integration steps; the last one may be shorter than `dt`.
    pub fn steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }

    fn time_at(&self, step: usize, steps: usize) -> f64 {
        if step == steps {
            self.t_end
        } else {
            step as f64 * self.dt
        }
    }

    fn is_output(&self, step: usize, steps: usize) -> bool {
        step.is_multiple_of(self.stride) || step == steps
    }

    /// The times `simulate` reports, in order.
    pub fn output_times(&self) -> Vec<f64> {
        let steps = self.steps();
        (0..=steps).filter(|&i| self.is_output(i, steps)).map(|i| self.time_at(i, steps)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub variables: Vec<String>,
    pub times: Vec<f64>,
    /// One row per output time.
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, variable: &str) -> Option<Vec<f64>> {
        let i = self.variables.iter().position(|v| v == variable)?;
        Some(self.states.iter().map(|row| row[i]).collect())
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.states.last().map(Vec::as_slice)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for v in &self.variables {
            out.push(',');
            out.push_str(v);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.states) {
            write!(out, "{t:.16e}").unwrap();
            for x in row {
                write!(out, ",{x:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

const BLOWUP: f64 = 1e12;

struct Stepper<'a> {
    m: &'a ExecutableModel,
    knocked: Vec<bool>,
    k: [Vec<f64>; 4],
    scratch: Vec<f64>,
}

impl Stepper<'_> {
    fn eval(&mut self, stage: usize, y: &[f64], t: f64, step: usize) -> Result<(), SimError> {
        let out = &mut self.k[stage];
        self.m.rhs_into(y, t, out).map_err(|f| f.into_error(self.m, step))?;
        for (d, &ko) in out.iter_mut().zip(&self.knocked) {
            if ko {
                *d = 0.0;
            }
        }
        Ok(())
    }

    fn offset(&mut self, y: &[f64], stage: usize, h: f64) {
        for ((s, &yi), &ki) in self.scratch.iter_mut().zip(y).zip(&self.k[stage]) {
            *s = yi + h * ki;
        }
    }

    fn advance(&mut self, solver: Solver, y: &mut [f64], t: f64, h: f64, step: usize) -> Result<(), SimError> {
        match solver {
            Solver::Euler => {
                self.eval(0, y, t, step)?;
                for (yi, ki) in y.iter_mut().zip(&self.k[0]) {
                    *yi += h * ki;
                }
            }
            Solver::Rk2 => {
                self.eval(0, y, t, step)?;
                self.offset(y, 0, h / 2.0);
                let mid = std::mem::take(&mut self.scratch);
                self.eval(1, &mid, t + h / 2.0, step)?;
                self.scratch = mid;
                for (yi, ki) in y.iter_mut().zip(&self.k[1]) {
                    *yi += h * ki;
                }
            }
            Solver::Rk4 => {
                self.eval(0, y, t, step)?;
                for (stage, frac) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
                    self.offset(y, stage - 1, frac * h);
                    let probe = std::mem::take(&mut self.scratch);
                    self.eval(stage, &probe, t + frac * h, step)?;
                    self.scratch = probe;
                }
                let [k1, k2, k3, k4] = &self.k;
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        for (i, yi) in y.iter_mut().enumerate() {
            if self.knocked[i] {
                *yi = 0.0;
            } else if !yi.is_finite() || yi.abs() > BLOWUP {
                return Err(SimError::NumericalBlowup { step, variable: self.m.variables[i].clone() });
            }
        }
        Ok(())
    }
}

/// Fixed-step integration from t = 0 to `cfg.t_end`.
///
/// Knocked-out variables start at 0 and have their derivative clamped to
/// 0 in every stage, so their column is exactly zero throughout.
pub fn simulate(m: &ExecutableModel, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    cfg.validate(&m.variables)?;
    let overridden;
    let m = if cfg.params.is_empty() {
        m
    } else {
        overridden = m.with_params(&cfg.params)?;
        &overridden
    };
    let n = m.dimension();
    let knocked: Vec<bool> = m.variables.iter().map(|v| cfg.knockout.contains(v)).collect();
    let mut y: Vec<f64> = m
        .variables
        .iter()
        .zip(&knocked)
        .map(|(v, &ko)| if ko { 0.0 } else { cfg.initial[v] })
        .collect();
    let mut stepper = Stepper { m, knocked, k: std::array::from_fn(|_| vec![0.0; n]), scratch: vec![0.0; n] };

    let steps = cfg.steps();
    let mut traj = Trajectory { variables: m.variables.clone(), times: vec![0.0], states: vec![y.clone()] };
    for step in 1..=steps {
        let t = cfg.time_at(step - 1, steps);
        let next = cfg.time_at(step, steps);
        stepper.advance(cfg.solver, &mut y, t, next - t, step)?;
        if cfg.is_output(step, steps) {
            traj.times.push(next);
            traj.states.push(y.clone());
        }
    }
    Ok(traj)
}
