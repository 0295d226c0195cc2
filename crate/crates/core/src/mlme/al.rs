use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nn::{check_classes, fit, uncertainty, Classifier, TrainConfig};
use super::{Class, LabeledSet, MlmeError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlConfig {
    /// Random draws continue until each class has at least this many
    /// members (or as many as the seed ensemble, if larger).
    pub initial_per_class: usize,
    pub batch: usize,
    pub max_rounds: usize,
    pub stop_accuracy: f64,
    #[serde(default = "default_held_out")]
    pub held_out_fraction: f64,
    pub seed: u64,
    pub train: TrainConfig,
}

fn default_held_out() -> f64 {
    0.2
}

impl AlConfig {
    pub fn validate(&self) -> Result<(), MlmeError> {
        if self.initial_per_class == 0 || self.batch == 0 || self.max_rounds == 0 {
            return Err(MlmeError::Config("initial_per_class, batch and max_rounds must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.stop_accuracy) {
            return Err(MlmeError::Config(format!("stop accuracy {} is outside [0,1]", self.stop_accuracy)));
        }
        if !(self.held_out_fraction > 0.0 && self.held_out_fraction < 1.0) {
            return Err(MlmeError::Config(format!("held-out fraction {} is outside (0,1)", self.held_out_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlRound {
    pub round: usize,
    pub labels_used: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlOutcome {
    pub classifier: Classifier,
    /// Oracle calls on training points; held-out labels are counted apart.
    pub labels_used: usize,
    pub held_out_labels: usize,
    pub curve: Vec<AlRound>,
    /// Pool indices labeled for training, in labeling order.
    pub labeled: Vec<usize>,
}

/// Active learning over `pool`, where `oracle(i)` labels pool entry `i`.
///
/// A seeded share of the pool is held out to measure accuracy. The
/// training set starts from `ensemble` (known plausible points) plus
/// random pool draws until both classes reach the initial count, then
/// each round labels the `batch` most uncertain unlabeled points.
pub fn active_learn(
    pool: &[Vec<f64>],
    bounds: &[(f64, f64)],
    ensemble: &[Vec<f64>],
    oracle: impl Fn(usize) -> Class + Sync,
    al: &AlConfig,
) -> Result<AlOutcome, MlmeError> {
    al.validate()?;
    if pool.is_empty() {
        return Err(MlmeError::Config("the pool is empty".into()));
    }
    let label_all = |idx: &[usize]| -> Vec<Class> { idx.par_iter().map(|&i| oracle(i)).collect() };

    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(al.seed));
    let n_held = ((pool.len() as f64 * al.held_out_fraction).round() as usize).clamp(1, pool.len() - 1);
    let (held_idx, rest) = order.split_at(n_held);
    let held: LabeledSet = held_idx.iter().map(|&i| pool[i].clone()).zip(label_all(held_idx)).collect();

    let mut train: LabeledSet = ensemble.iter().map(|x| (x.clone(), Class::Plausible)).collect();
    let mut counts = [train.len(), 0];
    let target = al.initial_per_class.max(ensemble.len());
    let mut labeled = Vec::new();
    let mut draws = rest.iter().copied();
    while counts[0] < target || counts[1] < target {
        let Some(i) = draws.next() else {
            return Err(MlmeError::PoolExhausted { plausible: counts[0], implausible: counts[1] });
        };
        let c = oracle(i);
        counts[usize::from(c == Class::Implausible)] += 1;
        labeled.push(i);
        train.push((pool[i].clone(), c));
    }
    check_classes(&train)?;

    let mut is_labeled = vec![false; pool.len()];
    for &i in held_idx.iter().chain(&labeled) {
        is_labeled[i] = true;
    }
    let mut classifier = Classifier::new(bounds.to_vec(), &al.train.hidden, al.train.seed);
    let mut curve = Vec::new();
    for round in 1..=al.max_rounds {
        fit(&mut classifier, &train, &al.train);
        let accuracy = classifier.accuracy(&held);
        curve.push(AlRound { round, labels_used: labeled.len(), accuracy });
        if accuracy >= al.stop_accuracy || round == al.max_rounds {
            break;
        }
        let candidates: Vec<usize> = (0..pool.len()).filter(|&i| !is_labeled[i]).collect();
        if candidates.is_empty() {
            break;
        }
        let scores: Vec<f64> = candidates.par_iter().map(|&i| uncertainty(&classifier, &pool[i])).collect();
        let mut ranked: Vec<usize> = (0..candidates.len()).collect();
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(candidates[a].cmp(&candidates[b])));
        let batch: Vec<usize> = ranked.iter().take(al.batch).map(|&r| candidates[r]).collect();
        for (&i, c) in batch.iter().zip(label_all(&batch)) {
            is_labeled[i] = true;
            labeled.push(i);
            train.push((pool[i].clone(), c));
        }
    }
    Ok(AlOutcome { classifier, labels_used: labeled.len(), held_out_labels: held.len(), curve, labeled })
}
