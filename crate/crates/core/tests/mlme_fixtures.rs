mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::{fixture, model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sskr_forge_core::mlme::{
    active_learn, ga_calibrate, predict, train_classifier, AlConfig, Class, Criterion, Envelope, GaConfig, LabeledSet,
    MlmeError, Pool, Problem, TrainConfig,
};
use sskr_forge_core::simkit::{SimConfig, Solver};

fn sir_sim() -> SimConfig {
    let mut cfg = SimConfig::new(Solver::Rk4, 0.1, 100.0, BTreeMap::from([("S".into(), 0.99), ("I".into(), 0.01), ("R".into(), 0.0)]));
    cfg.stride = 10;
    cfg
}

fn grid() -> Vec<f64> {
    (1..=20).map(|i| 5.0 * i as f64).collect()
}

/// Envelope of the ground-truth run (beta 0.3, gamma 0.1), ±10%.
fn sir_problem(criterion: Option<Criterion>) -> Problem {
    let s = model("sir.sskr.json");
    let unbounded = Criterion::unbounded(&["I"], &grid());
    let p = Problem::from_sskr(&s, unbounded, sir_sim()).unwrap();
    let crit = criterion.unwrap_or_else(|| {
        let truth = p.simulate(&[0.3, 0.1]).unwrap();
        Criterion::new(vec![
            Envelope::around(&truth, "I", &grid(), 0.1).unwrap(),
            Envelope::around(&truth, "R", &grid(), 0.1).unwrap(),
        ])
    });
    Problem::from_sskr(&s, crit, sir_sim()).unwrap()
}

#[test]
fn ground_truth_is_plausible() {
    let p = sir_problem(None);
    assert_eq!(p.parameters, ["beta", "gamma"]);
    assert_eq!(p.fitness(&[0.3, 0.1]), 0.0);
    assert_eq!(p.label(&[0.3, 0.1]), Class::Plausible);
    assert_eq!(p.label(&[0.0, 0.0]), Class::Implausible);
    assert!(p.fitness(&[0.9, 0.1]) > 0.0);
    assert_eq!(p.fitness(&[1.5, 0.1]), f64::INFINITY);
}

#[test]
fn midline_trajectory_scores_zero() {
    let p0 = sir_problem(None);
    let truth = p0.simulate(&[0.3, 0.1]).unwrap();
    let mid = Envelope::around(&truth, "I", &grid(), 0.0).unwrap();
    let widened = Envelope::new("I", mid.times.clone(), mid.lower.iter().map(|v| v - 1e-3).collect(), mid.upper.iter().map(|v| v + 1e-3).collect()).unwrap();
    let p = sir_problem(Some(Criterion::new(vec![widened])));
    assert_eq!(p.fitness(&[0.3, 0.1]), 0.0);
}

#[test]
fn violation_fraction_tolerates_a_few_points() {
    let p0 = sir_problem(None);
    let truth = p0.simulate(&[0.3, 0.1]).unwrap();
    let mut env = Envelope::around(&truth, "I", &grid(), 0.1).unwrap();
    env.upper[3] = env.lower[3] - 1e-9;
    env.lower[3] -= 1.0;
    let strict = sir_problem(Some(Criterion::new(vec![env.clone()])));
    assert!(strict.fitness(&[0.3, 0.1]) > 0.0);
    let lenient = sir_problem(Some(Criterion { observables: vec![env], violation_fraction: 0.05 }));
    assert_eq!(lenient.fitness(&[0.3, 0.1]), 0.0);
}

#[test]
fn blowup_is_an_infinite_sentinel() {
    let mut s = model("sir.sskr.json");
    s.parameters[0].bounds = Some([-50.0, 50.0]);
    let crit = Criterion::unbounded(&["I"], &grid());
    let p = Problem::from_sskr(&s, crit, sir_sim()).unwrap();
    assert_eq!(p.label(&[0.3, 0.1]), Class::Plausible);
    let mut s2 = s.clone();
    s2.parameters[1].bounds = Some([-50.0, 50.0]);
    let p = Problem::from_sskr(&s2, Criterion::unbounded(&["I"], &grid()), sir_sim()).unwrap();
    assert_eq!(p.fitness(&[0.0, -50.0]), f64::INFINITY);
    assert_eq!(p.label(&[0.0, -50.0]), Class::Implausible);
}

#[test]
fn ga_finds_plausible_ensemble() {
    let p = sir_problem(None);
    let out = ga_calibrate(&p, &GaConfig::new(32, 50, 1)).unwrap();
    assert!(!out.ensemble.is_empty());
    assert!(out.curve.windows(2).all(|w| w[1] <= w[0]));
    assert!(out.ensemble.iter().all(|x| p.fitness(x) == 0.0 && p.in_bounds(x)));
    assert_eq!(ga_calibrate(&p, &GaConfig::new(32, 50, 1)).unwrap(), out);
}

#[test]
fn unbounded_envelope_accepts_the_whole_population() {
    let p = sir_problem(Some(Criterion::unbounded(&["S", "I"], &grid())));
    let out = ga_calibrate(&p, &GaConfig::new(16, 2, 4)).unwrap();
    assert!(out.ensemble.len() >= 16);
}

#[test]
fn infeasible_envelope_finds_nothing() {
    let n = grid().len();
    let env = Envelope::new("I", grid(), vec![2.0; n], vec![3.0; n]).unwrap();
    let p = sir_problem(Some(Criterion::new(vec![env])));
    match ga_calibrate(&p, &GaConfig::new(8, 3, 2)) {
        Err(MlmeError::NoPlausibleFound { best, curve }) => {
            assert!(best > 0.0);
            assert_eq!(curve.len(), 4);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn oracle_agrees_with_fitness() {
    let p = sir_problem(None);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let x = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        assert_eq!(p.label(&x) == Class::Plausible, p.fitness(&x) == 0.0);
    }
}

/// Uniform points in the unit square, skipping those within `gap` of the
/// boundary `score = 0`.
fn synthetic(n: usize, seed: u64, gap: f64, score: impl Fn(f64, f64) -> f64) -> LabeledSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (a, b) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let s = score(a, b);
        if s.abs() >= gap {
            out.push((vec![a, b], if s > 0.0 { Class::Plausible } else { Class::Implausible }));
        }
    }
    out
}

#[test]
fn separable_set_is_learned() {
    let line = |a: f64, b: f64| a + 0.5 * b - 0.7;
    let data = synthetic(200, 1, 0.05, line);
    let held = synthetic(200, 2, 0.05, line);
    let (c, report) = train_classifier(&data, &held, vec![(0.0, 1.0); 2], &TrainConfig::new(2000, 0.5, 3)).unwrap();
    assert!(report.held_out_accuracy.unwrap() >= 0.98, "{:?}", report.held_out_accuracy);
    assert!(report.loss_curve.last() < report.loss_curve.first());
    let (x, _) = data.iter().find(|(x, _)| predict(&c, x).1 > 0.99).expect("a confident point");
    let (class, p) = predict(&c, x);
    assert_eq!(class, Class::Plausible);
    assert!(p > 0.99 && p < 1.0);
}

#[test]
fn xor_needs_hidden_layers() {
    let xor = |a: f64, b: f64| -(a - 0.5) * (b - 0.5);
    let data = synthetic(400, 4, 0.0, xor);
    let held = synthetic(400, 5, 0.0, xor);
    let (_, report) = train_classifier(&data, &held, vec![(0.0, 1.0); 2], &TrainConfig::new(2000, 0.5, 6)).unwrap();
    assert!(report.held_out_accuracy.unwrap() >= 0.95, "{:?}", report.held_out_accuracy);
}

#[test]
fn predictions_are_fast_and_repeatable() {
    let c = sskr_forge_core::mlme::Classifier::new(vec![(0.0, 1.0); 2], &[32, 32], 1);
    let first = predict(&c, &[0.2, 0.8]);
    let start = Instant::now();
    for _ in 0..100 {
        assert_eq!(predict(&c, &[0.2, 0.8]), first);
    }
    assert!(start.elapsed().as_secs_f64() / 100.0 < 1e-3);
}

fn pool() -> Pool {
    Pool::from_csv(&std::fs::read_to_string(fixture("al_pool.csv")).unwrap()).unwrap()
}

pub fn al_config(seed: u64) -> AlConfig {
    AlConfig {
        initial_per_class: 10,
        batch: 20,
        max_rounds: 20,
        stop_accuracy: 0.9,
        held_out_fraction: 0.2,
        seed,
        train: TrainConfig::new(300, 0.5, seed),
    }
}

#[test]
fn active_learning_on_the_pool() {
    let pool = pool();
    let labels = pool.labels.clone().unwrap();
    assert_eq!(pool.points.len(), 2000);
    let out = active_learn(&pool.points, &pool.bounds(), &[], |i| labels[i], &al_config(1)).unwrap();
    let final_round = out.curve.last().unwrap();
    assert!(final_round.accuracy >= 0.9, "{:?}", out.curve);
    assert!(out.labels_used <= 400, "{}", out.labels_used);
    assert_eq!(out.held_out_labels, 400);
    let mut seen = out.labeled.clone();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), out.labeled.len());
}

#[test]
fn zero_stop_accuracy_ends_after_one_round() {
    let pool = pool();
    let labels = pool.labels.clone().unwrap();
    let mut al = al_config(2);
    al.stop_accuracy = 0.0;
    let out = active_learn(&pool.points, &pool.bounds(), &[], |i| labels[i], &al).unwrap();
    assert_eq!(out.curve.len(), 1);
}

#[test]
fn constant_oracle_exhausts_the_pool() {
    let pool = pool();
    assert!(matches!(
        active_learn(&pool.points, &pool.bounds(), &[], |_| Class::Implausible, &al_config(3)),
        Err(MlmeError::PoolExhausted { plausible: 0, .. })
    ));
}

#[test]
fn ensemble_seeds_the_training_set() {
    let pool = pool();
    let labels = pool.labels.clone().unwrap();
    let ensemble = vec![vec![0.5, 0.5], vec![0.45, 0.55]];
    let mut al = al_config(4);
    al.max_rounds = 1;
    let out = active_learn(&pool.points, &pool.bounds(), &ensemble, |i| labels[i], &al).unwrap();
    let drawn_plausible = out.labeled.iter().filter(|&&i| labels[i] == Class::Plausible).count();
    assert!(drawn_plausible + 2 >= 10);
    assert!(out.labeled.iter().filter(|&&i| labels[i] == Class::Implausible).count() >= 10);
}

#[test]
fn shipped_envelopes_match_ground_truth() {
    let p = sir_problem(None);
    for (i, name) in ["sir_I_envelope.csv", "sir_R_envelope.csv"].into_iter().enumerate() {
        let env = &p.criterion.observables[i];
        let path = fixture(name);
        if std::env::var_os("SSKR_FORGE_BLESS").is_some() {
            std::fs::write(&path, env.to_csv()).unwrap();
        }
        let shipped = Envelope::from_csv(&env.variable, &std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(&shipped, env);
    }
}
