//! Functional equivalence by random sampling over identical bindings.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use super::eval::{default_registry, eval, Env, EvalError};
use super::{Expr, Leaf};

impl Serialize for Leaf {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Per-leaf sampling intervals; leaves without an entry use the default.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub default: (f64, f64),
    pub overrides: BTreeMap<Leaf, (f64, f64)>,
}

impl Default for Domain {
    fn default() -> Self {
        Domain { default: (-10.0, 10.0), overrides: BTreeMap::new() }
    }
}

impl Domain {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        Domain { default: (lo, hi), overrides: BTreeMap::new() }
    }

    pub fn with(mut self, leaf: Leaf, lo: f64, hi: f64) -> Self {
        self.overrides.insert(leaf, (lo, hi));
        self
    }

    fn interval(&self, leaf: &Leaf) -> (f64, f64) {
        self.overrides.get(leaf).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Zero-based index of the first disagreeing sample.
    pub sample: usize,
    pub bindings: Vec<(Leaf, f64)>,
    pub left: Complex64,
    pub right: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", content = "witness")]
pub enum Outcome {
    Equivalent,
    Differs(Witness),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceVerdict {
    pub outcome: Outcome,
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub rejections: usize,
}

impl EquivalenceVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self.outcome, Outcome::Equivalent)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.outcome {
            Outcome::Differs(w) => Some(w),
            Outcome::Equivalent => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquivError {
    #[error("expressions use different symbols (only left: {only_left:?}, only right: {only_right:?})")]
    SymbolMismatch { only_left: Vec<String>, only_right: Vec<String> },
    #[error("gave up after {rejections} singular samples")]
    ExhaustedSamples { rejections: usize },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("invalid interval [{lo}, {hi}] for `{leaf}`")]
    BadInterval { leaf: String, lo: f64, hi: f64 },
    #[error(transparent)]
    Eval(EvalError),
}

/// Absolute floor under the relative tolerance.
pub const ABSOLUTE_FLOOR: f64 = 1e-12;

fn disagree(a: Complex64, b: Complex64, tol: f64) -> bool {
    let scale = 1f64.max(a.norm()).max(b.norm());
    (a - b).norm() > (tol * scale).max(ABSOLUTE_FLOOR)
}

/// Draws `n` points uniformly from `domain` and evaluates both
/// expressions at each. Points where either side is singular or
/// non-finite are redrawn, at most `10 n` times in total.
///
/// Bindings are drawn for the sorted leaf set, so swapping `a` and `b`
/// visits the same points and yields the same outcome.
pub fn equivalent(
    a: &Expr,
    b: &Expr,
    domain: &Domain,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<EquivalenceVerdict, EquivError> {
    if n == 0 {
        return Err(EquivError::NoSamples);
    }
    let left: BTreeSet<Leaf> = a.free_symbols().into_iter().collect();
    let right: BTreeSet<Leaf> = b.free_symbols().into_iter().collect();
    if left != right {
        return Err(EquivError::SymbolMismatch {
            only_left: left.difference(&right).map(|l| l.to_string()).collect(),
            only_right: right.difference(&left).map(|l| l.to_string()).collect(),
        });
    }
    let leaves: Vec<Leaf> = left.into_iter().collect();
    let samplers = leaves
        .iter()
        .map(|leaf| {
            let (lo, hi) = domain.interval(leaf);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(EquivError::BadInterval { leaf: leaf.to_string(), lo, hi });
            }
            Ok(Uniform::new_inclusive(lo, hi))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = Env::with_registry(default_registry());
    let mut point = vec![0.0; leaves.len()];
    let max_rejections = 10 * n;
    let mut rejections = 0;

    for sample in 0..n {
        let (va, vb) = loop {
            for (slot, sampler) in point.iter_mut().zip(&samplers) {
                *slot = sampler.sample(&mut rng);
            }
            for (leaf, &x) in leaves.iter().zip(&point) {
                env.bind_leaf(leaf, x);
            }
            let outputs = (eval(a, &env), eval(b, &env));
            let singular = match &outputs {
                (Ok(x), Ok(y)) => !(x.re.is_finite() && x.im.is_finite() && y.re.is_finite() && y.im.is_finite()),
                (Err(e), _) | (_, Err(e)) if e.is_singular() => true,
                (Err(e), _) | (_, Err(e)) => return Err(EquivError::Eval(e.clone())),
            };
            if !singular {
                break (outputs.0.unwrap(), outputs.1.unwrap());
            }
            rejections += 1;
            if rejections > max_rejections {
                return Err(EquivError::ExhaustedSamples { rejections });
            }
        };
        if disagree(va, vb, tol) {
            let bindings = leaves.iter().cloned().zip(point.iter().copied()).collect();
            return Ok(EquivalenceVerdict {
                outcome: Outcome::Differs(Witness { sample, bindings, left: va, right: vb }),
                samples: n,
                tolerance: tol,
                seed,
                rejections,
            });
        }
    }
    Ok(EquivalenceVerdict { outcome: Outcome::Equivalent, samples: n, tolerance: tol, seed, rejections })
}
