use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::criterion::Problem;
use super::MlmeError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Mutation standard deviation as a fraction of each bound's width.
    pub mutation_sigma: f64,
    pub elitism: usize,
    pub seed: u64,
}

impl GaConfig {
    pub fn new(population: usize, generations: usize, seed: u64) -> GaConfig {
        GaConfig {
            population,
            generations,
            tournament: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            mutation_sigma: 0.1,
            elitism: 2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), MlmeError> {
        let bad = |m: String| Err(MlmeError::Config(m));
        for (name, rate) in
            [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate), ("mutation_sigma", self.mutation_sigma)]
        {
            if !(0.0..=1.0).contains(&rate) {
                return bad(format!("{name} {rate} is outside [0,1]"));
            }
        }
        if self.population == 0 || self.generations == 0 || self.tournament == 0 {
            return bad("population, generations and tournament size must be at least 1".into());
        }
        if self.elitism > self.population {
            return bad(format!("elitism {} exceeds the population {}", self.elitism, self.population));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    /// Distinct fitness-0 individuals in order of first evaluation.
    pub ensemble: Vec<Vec<f64>>,
    /// Best fitness of the initial population, then of each generation.
    pub curve: Vec<f64>,
    pub evaluations: usize,
}

fn key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

fn better(fit: &[f64], a: usize, b: usize) -> usize {
    match fit[a].total_cmp(&fit[b]) {
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal if b < a => b,
        _ => a,
    }
}

/// Genetic search over a box, minimizing `fitness`. Evaluations run in
/// parallel and are reduced in population order.
pub fn evolve(
    bounds: &[(f64, f64)],
    fitness: impl Fn(&[f64]) -> f64 + Sync,
    ga: &GaConfig,
) -> Result<GaOutcome, MlmeError> {
    ga.validate()?;
    if bounds.is_empty() {
        return Err(MlmeError::NoFreeParameters);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ga.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let evaluate = |pop: &[Vec<f64>]| -> Vec<f64> { pop.par_iter().map(|x| fitness(x)).collect() };

    let mut pop: Vec<Vec<f64>> = (0..ga.population)
        .map(|_| bounds.iter().map(|&(lo, hi)| if lo < hi { rng.gen_range(lo..=hi) } else { lo }).collect())
        .collect();
    let mut fit = evaluate(&pop);
    let mut out = GaOutcome { ensemble: Vec::new(), curve: Vec::new(), evaluations: pop.len() };
    let mut seen = HashSet::new();
    let mut record = |pop: &[Vec<f64>], fit: &[f64], out: &mut GaOutcome| {
        for (x, f) in pop.iter().zip(fit) {
            if *f == 0.0 && seen.insert(key(x)) {
                out.ensemble.push(x.clone());
            }
        }
        out.curve.push(fit.iter().copied().fold(f64::INFINITY, f64::min));
    };
    record(&pop, &fit, &mut out);

    for _ in 0..ga.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(a.cmp(&b)));
        let mut next: Vec<Vec<f64>> = order[..ga.elitism].iter().map(|&i| pop[i].clone()).collect();
        let elite_fit: Vec<f64> = order[..ga.elitism].iter().map(|&i| fit[i]).collect();

        let tournament = |rng: &mut ChaCha8Rng| {
            let mut best = rng.gen_range(0..pop.len());
            for _ in 1..ga.tournament {
                best = better(&fit, best, rng.gen_range(0..pop.len()));
            }
            best
        };
        let mut children = Vec::with_capacity(ga.population - ga.elitism);
        while children.len() < ga.population - ga.elitism {
            let (a, b) = (tournament(&mut rng), tournament(&mut rng));
            let (mut c1, mut c2) = (pop[a].clone(), pop[b].clone());
            if rng.gen::<f64>() < ga.crossover_rate {
                for g in 0..bounds.len() {
                    if rng.gen::<bool>() {
                        std::mem::swap(&mut c1[g], &mut c2[g]);
                    }
                }
            }
            for child in [&mut c1, &mut c2] {
                for (g, &(lo, hi)) in bounds.iter().enumerate() {
                    if rng.gen::<f64>() < ga.mutation_rate {
                        let z: f64 = unit.sample(&mut rng);
                        child[g] = (child[g] + z * ga.mutation_sigma * (hi - lo)).clamp(lo, hi);
                    }
                }
            }
            children.push(c1);
            if children.len() < ga.population - ga.elitism {
                children.push(c2);
            }
        }
        let child_fit = evaluate(&children);
        out.evaluations += children.len();
        next.extend(children);
        pop = next;
        fit = elite_fit.into_iter().chain(child_fit).collect();
        record(&pop, &fit, &mut out);
    }
    Ok(out)
}

/// GA calibration of `problem`. An empty plausible ensemble is an error
/// carrying the best fitness reached.
pub fn ga_calibrate(problem: &Problem, ga: &GaConfig) -> Result<GaOutcome, MlmeError> {
    let out = evolve(&problem.bounds, |x| problem.fitness(x), ga)?;
    if out.ensemble.is_empty() {
        let best = out.curve.last().copied().unwrap_or(f64::INFINITY);
        return Err(MlmeError::NoPlausibleFound { best, curve: out.curve });
    }
    Ok(out)
}
