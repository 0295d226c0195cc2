//! Experiment config files for `calibrate` and `learn`.
//!
//! Paths inside an experiment are relative to the experiment file. Seeds
//! come from the command line only, so blocks must not carry one.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;
use sskr_forge_core::mlme::{AlConfig, Class, Criterion, Envelope, GaConfig, Pool, Problem};
use sskr_forge_core::simkit::SimConfig;
use sskr_forge_core::sskr::{self, validate};

use crate::report::{read, CliError};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Observable {
    variable: String,
    envelope: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriterionFile {
    #[serde(default)]
    violation_fraction: f64,
    observables: Vec<Observable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum PoolSpec {
    /// CSV of points, optionally labelled.
    Csv(PathBuf),
    /// Uniform random points inside the parameter bounds.
    Random(usize),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    model: Option<PathBuf>,
    simulation: Option<SimConfig>,
    criterion: Option<CriterionFile>,
    ga: Option<Value>,
    al: Option<Value>,
}

pub struct Experiment {
    dir: PathBuf,
    file: ExperimentFile,
}

fn with_seed<T: serde::de::DeserializeOwned>(block: &Value, what: &str, seed: u64, nested: &[&str]) -> Result<T, CliError> {
    let mut block = block.clone();
    let obj = block.as_object_mut().ok_or_else(|| CliError::invalid(format!("`{what}` must be an object")))?;
    if obj.contains_key("seed") {
        return Err(CliError::invalid(format!("`{what}` must not set a seed; pass --seed")));
    }
    obj.insert("seed".into(), seed.into());
    for key in nested {
        if let Some(inner) = obj.get_mut(*key).and_then(Value::as_object_mut) {
            if inner.contains_key("seed") {
                return Err(CliError::invalid(format!("`{what}.{key}` must not set a seed; pass --seed")));
            }
            inner.insert("seed".into(), seed.into());
        }
    }
    serde_json::from_value(block).map_err(|e| CliError::invalid(format!("`{what}`: {e}")))
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Experiment, CliError> {
        let file: ExperimentFile =
            serde_json::from_str(&read(path)?).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        Ok(Experiment { dir: path.parent().unwrap_or(Path::new(".")).to_path_buf(), file })
    }

    fn path(&self, p: &Path) -> PathBuf {
        self.dir.join(p)
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = self.file.model.iter().map(|p| self.path(p)).collect();
        if let Some(c) = &self.file.criterion {
            out.extend(c.observables.iter().map(|o| self.path(&o.envelope)));
        }
        out
    }

    pub fn has_model(&self) -> bool {
        self.file.model.is_some()
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let missing = |k: &str| CliError::invalid(format!("experiment needs `{k}`"));
        let model_path = self.path(self.file.model.as_ref().ok_or_else(|| missing("model"))?);
        let s = sskr::load(&model_path)?;
        let report = validate(&s);
        if report.has_errors() {
            return Err(CliError::invalid(format!("{} does not validate:\n{report}", model_path.display())));
        }
        let sim = self.file.simulation.clone().ok_or_else(|| missing("simulation"))?;
        let c = self.file.criterion.as_ref().ok_or_else(|| missing("criterion"))?;
        let mut observables = Vec::new();
        for o in &c.observables {
            observables.push(Envelope::from_csv(&o.variable, &read(&self.path(&o.envelope))?)?);
        }
        let criterion = Criterion { observables, violation_fraction: c.violation_fraction };
        Ok(Problem::from_sskr(&s, criterion, sim)?)
    }

    pub fn ga(&self, seed: u64) -> Result<GaConfig, CliError> {
        let block = self.file.ga.as_ref().ok_or_else(|| CliError::invalid("experiment needs a `ga` block"))?;
        with_seed(block, "ga", seed, &[])
    }

    /// The AL config and its pool description.
    pub fn al(&self, seed: u64) -> Result<(AlConfig, PoolSpec), CliError> {
        let block = self.file.al.as_ref().ok_or_else(|| CliError::invalid("experiment needs an `al` block"))?;
        let mut block = block.clone();
        let pool = block
            .as_object_mut()
            .and_then(|o| o.remove("pool"))
            .ok_or_else(|| CliError::invalid("`al` needs a `pool`"))?;
        let pool: PoolSpec = serde_json::from_value(pool).map_err(|e| CliError::invalid(format!("`al.pool`: {e}")))?;
        let pool = match pool {
            PoolSpec::Csv(p) => PoolSpec::Csv(self.path(&p)),
            other => other,
        };
        Ok((with_seed(&block, "al", seed, &["train"])?, pool))
    }
}

/// Pool points and an oracle over pool indices.
pub struct LoadedPool {
    pub names: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub bounds: Vec<(f64, f64)>,
    pub labels: Option<Vec<Class>>,
}

pub fn load_pool(spec: &PoolSpec, problem: Option<&Problem>, seed: u64) -> Result<LoadedPool, CliError> {
    match spec {
        PoolSpec::Csv(path) => {
            let pool = Pool::from_csv(&read(path)?)?;
            let bounds = match problem {
                Some(p) => {
                    if pool.names != p.parameters {
                        return Err(CliError::invalid(format!(
                            "pool columns {:?} do not match the free parameters {:?}",
                            pool.names, p.parameters
                        )));
                    }
                    p.bounds.clone()
                }
                None => pool.bounds(),
            };
            if pool.labels.is_none() && problem.is_none() {
                return Err(CliError::invalid("an unlabelled pool needs a model to label it"));
            }
            Ok(LoadedPool { names: pool.names, points: pool.points, bounds, labels: pool.labels })
        }
        PoolSpec::Random(n) => {
            let p = problem.ok_or_else(|| CliError::invalid("a random pool needs a model"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x706f_6f6c);
            let points = (0..*n)
                .map(|_| p.bounds.iter().map(|&(lo, hi)| if lo < hi { rng.gen_range(lo..=hi) } else { lo }).collect())
                .collect();
            Ok(LoadedPool { names: p.parameters.clone(), points, bounds: p.bounds.clone(), labels: None })
        }
    }
}
