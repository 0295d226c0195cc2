use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Class, MlmeError};
use crate::cma::spec_from_sskr;
use crate::simkit::{compile, simulate, ExecutableModel, SimConfig, Trajectory};
use crate::sskr::Sskr;

/// Pointwise band for one variable on a fixed time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub variable: String,
    pub times: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Envelope {
    pub fn new(variable: impl Into<String>, times: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Envelope, MlmeError> {
        let e = Envelope { variable: variable.into(), times, lower, upper };
        e.check()?;
        Ok(e)
    }

    fn check(&self) -> Result<(), MlmeError> {
        let bad = |why: String| Err(MlmeError::Envelope { variable: self.variable.clone(), reason: why });
        let n = self.times.len();
        if n == 0 {
            return bad("empty time grid".into());
        }
        if self.lower.len() != n || self.upper.len() != n {
            return bad("bounds and grid differ in length".into());
        }
        if self.times.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("grid times must be strictly increasing".into());
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return bad(format!("row {}: lower {lo} exceeds upper {hi}", i + 1));
            }
        }
        Ok(())
    }

    /// Reads `t,lower,upper` rows; `inf` and `-inf` are accepted.
    pub fn from_csv(variable: impl Into<String>, text: &str) -> Result<Envelope, MlmeError> {
        let variable = variable.into();
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| MlmeError::Csv(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "lower", "upper"] {
            return Err(MlmeError::Csv(format!("envelope header must be `t,lower,upper`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let (mut times, mut lower, mut upper) = (Vec::new(), Vec::new(), Vec::new());
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| MlmeError::Csv(e.to_string()))?;
            let num = |j: usize| -> Result<f64, MlmeError> {
                record[j].parse().map_err(|_| MlmeError::Csv(format!("line {}: `{}` is not a number", i + 2, &record[j])))
            };
            times.push(num(0)?);
            lower.push(num(1)?);
            upper.push(num(2)?);
        }
        Envelope::new(variable, times, lower, upper)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,lower,upper\n");
        for i in 0..self.times.len() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", self.times[i], self.lower[i], self.upper[i]));
        }
        out
    }

    /// The band `x(t)·(1 ± rel)` around a trajectory column at the given times.
    pub fn around(traj: &Trajectory, variable: &str, times: &[f64], rel: f64) -> Result<Envelope, MlmeError> {
        let col = traj.column(variable).ok_or_else(|| MlmeError::UnknownVariable(variable.to_string()))?;
        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        for &t in times {
            let i = time_index(&traj.times, t).ok_or(MlmeError::GridOffOutput { variable: variable.to_string(), time: t })?;
            let (a, b) = (col[i] * (1.0 - rel), col[i] * (1.0 + rel));
            lower.push(a.min(b));
            upper.push(a.max(b));
        }
        Envelope::new(variable, times.to_vec(), lower, upper)
    }
}

fn time_index(times: &[f64], t: f64) -> Option<usize> {
    let tol = 1e-9 * t.abs().max(1.0);
    let i = times.partition_point(|&x| x < t - tol);
    (i < times.len() && (times[i] - t).abs() <= tol).then_some(i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub observables: Vec<Envelope>,
    /// Fraction of grid points allowed outside the band.
    #[serde(default)]
    pub violation_fraction: f64,
}

impl Criterion {
    pub fn new(observables: Vec<Envelope>) -> Criterion {
        Criterion { observables, violation_fraction: 0.0 }
    }

    /// `[-inf, inf]` for each variable on the given grid.
    pub fn unbounded(variables: &[&str], times: &[f64]) -> Criterion {
        let n = times.len();
        let observables = variables
            .iter()
            .map(|v| Envelope {
                variable: v.to_string(),
                times: times.to_vec(),
                lower: vec![f64::NEG_INFINITY; n],
                upper: vec![f64::INFINITY; n],
            })
            .collect();
        Criterion::new(observables)
    }
}

/// Simulation plus envelope: the plausibility oracle for one model structure.
#[derive(Debug, Clone)]
pub struct Problem {
    model: ExecutableModel,
    pub parameters: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    pub criterion: Criterion,
    pub sim: SimConfig,
    /// Per observable: trajectory column plus output row for each grid time.
    lookup: Vec<(usize, Vec<usize>)>,
}

impl Problem {
    pub fn new(
        model: ExecutableModel,
        free: Vec<(String, (f64, f64))>,
        criterion: Criterion,
        sim: SimConfig,
    ) -> Result<Problem, MlmeError> {
        if free.is_empty() {
            return Err(MlmeError::NoFreeParameters);
        }
        sim.validate(&model.variables).map_err(|e| MlmeError::Sim(e.into()))?;
        if !(0.0..=1.0).contains(&criterion.violation_fraction) {
            return Err(MlmeError::Config(format!("violation fraction {} is outside [0,1]", criterion.violation_fraction)));
        }
        for (id, (lo, hi)) in &free {
            if model.parameter(id).is_none() {
                return Err(MlmeError::Sim(crate::simkit::SimError::UnknownParameter(id.clone())));
            }
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(MlmeError::Config(format!("bounds of `{id}` are not a finite interval")));
            }
        }
        let out_times = sim.output_times();
        let mut lookup = Vec::new();
        for env in &criterion.observables {
            env.check()?;
            let col = model.index_of(&env.variable).ok_or_else(|| MlmeError::UnknownVariable(env.variable.clone()))?;
            let rows = env
                .times
                .iter()
                .map(|&t| time_index(&out_times, t).ok_or(MlmeError::GridOffOutput { variable: env.variable.clone(), time: t }))
                .collect::<Result<Vec<_>, _>>()?;
            lookup.push((col, rows));
        }
        let (parameters, bounds) = free.into_iter().unzip();
        Ok(Problem { model, parameters, bounds, criterion, sim, lookup })
    }

    /// Uses every non-fixed, non-computed parameter of `s`; each needs bounds.
    pub fn from_sskr(s: &Sskr, criterion: Criterion, sim: SimConfig) -> Result<Problem, MlmeError> {
        let spec = spec_from_sskr(s).map_err(|e| MlmeError::Config(e.to_string()))?;
        let model = compile(&spec, &sim.params)?;
        let mut free = Vec::new();
        for p in s.parameters.iter().filter(|p| !p.fixed && p.computed.is_none()) {
            let b = p.bounds.ok_or_else(|| MlmeError::MissingBounds(p.id.clone()))?;
            free.push((p.id.clone(), (b[0], b[1])));
        }
        Problem::new(model, free, criterion, sim)
    }

    pub fn dimension(&self) -> usize {
        self.parameters.len()
    }

    pub fn in_bounds(&self, x: &[f64]) -> bool {
        x.len() == self.bounds.len() && x.iter().zip(&self.bounds).all(|(v, (lo, hi))| (lo..=hi).contains(&v))
    }

    pub fn simulate(&self, x: &[f64]) -> Result<Trajectory, MlmeError> {
        let overrides: BTreeMap<String, f64> = self.parameters.iter().cloned().zip(x.iter().copied()).collect();
        let m = self.model.with_params(&overrides)?;
        let mut sim = self.sim.clone();
        sim.params.clear();
        Ok(simulate(&m, &sim)?)
    }

    /// Zero inside the envelope (up to the allowed violation fraction),
    /// else the sum of squared distances to the band, each scaled by the
    /// band width. Blowups and out-of-bounds points score `+inf`.
    pub fn fitness(&self, x: &[f64]) -> f64 {
        if !self.in_bounds(x) {
            return f64::INFINITY;
        }
        match self.simulate(x) {
            Ok(traj) => self.distance(&traj),
            Err(_) => f64::INFINITY,
        }
    }

    /// Envelope distance of a trajectory produced under `self.sim`.
    pub fn distance(&self, traj: &Trajectory) -> f64 {
        let (mut total, mut points, mut outside) = (0.0, 0usize, 0usize);
        for (env, (col, rows)) in self.criterion.observables.iter().zip(&self.lookup) {
            for (i, &r) in rows.iter().enumerate() {
                let (lo, hi, v) = (env.lower[i], env.upper[i], traj.states[r][*col]);
                points += 1;
                let gap = if v < lo {
                    lo - v
                } else if v > hi {
                    v - hi
                } else {
                    continue;
                };
                outside += 1;
                let width = hi - lo;
                let scale = if width.is_finite() && width > 0.0 { width } else { 1.0 };
                total += (gap / scale).powi(2);
            }
        }
        if outside as f64 <= self.criterion.violation_fraction * points as f64 {
            0.0
        } else if total == 0.0 {
            f64::MIN_POSITIVE
        } else {
            total
        }
    }

    pub fn label(&self, x: &[f64]) -> Class {
        if self.fitness(x) == 0.0 {
            Class::Plausible
        } else {
            Class::Implausible
        }
    }
}

pub fn fitness(problem: &Problem, x: &[f64]) -> f64 {
    problem.fitness(x)
}

pub fn label(problem: &Problem, x: &[f64]) -> Class {
    problem.label(x)
}
