use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Class, LabeledSet, MlmeError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `outputs × inputs`, row-major.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

pub const WEIGHTS_FORMAT: &str = "sskr-forge-mlp";
pub const WEIGHTS_VERSION: u32 = 1;

/// Feed-forward network: tanh hidden layers, one sigmoid output. Inputs
/// are scaled to [0,1] by the parameter bounds before the first layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub format: String,
    pub version: u32,
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub momentum: f64,
    pub seed: u64,
}

fn default_hidden() -> Vec<usize> {
    vec![32, 32]
}

impl TrainConfig {
    pub fn new(epochs: usize, learning_rate: f64, seed: u64) -> TrainConfig {
        TrainConfig { hidden: default_hidden(), epochs, learning_rate, momentum: 0.9, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub loss_curve: Vec<f64>,
    pub held_out_accuracy: Option<f64>,
}

const P_FLOOR: f64 = 1e-15;

fn sigmoid(z: f64) -> f64 {
    (1.0 / (1.0 + (-z).exp())).clamp(P_FLOOR, 1.0 - P_FLOOR)
}

/// Binary cross-entropy computed from the logit, stable for large |z|.
fn bce(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl Classifier {
    /// Glorot-uniform weights, zero biases.
    pub fn new(bounds: Vec<(f64, f64)>, hidden: &[usize], seed: u64) -> Classifier {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = bounds.len();
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Layer {
                    weights: (0..w[1]).map(|_| (0..w[0]).map(|_| rng.gen_range(-limit..limit)).collect()).collect(),
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Classifier {
            format: WEIGHTS_FORMAT.into(),
            version: WEIGHTS_VERSION,
            inputs,
            hidden: hidden.to_vec(),
            bounds,
            seed,
            layers,
        }
    }

    pub fn from_json(text: &str) -> Result<Classifier, MlmeError> {
        let c: Classifier = serde_json::from_str(text).map_err(|e| MlmeError::Weights(e.to_string()))?;
        if c.format != WEIGHTS_FORMAT || c.version != WEIGHTS_VERSION {
            return Err(MlmeError::Weights(format!("expected {WEIGHTS_FORMAT} v{WEIGHTS_VERSION}, got {} v{}", c.format, c.version)));
        }
        let mut fan_in = c.inputs;
        for (i, l) in c.layers.iter().enumerate() {
            let expect = c.hidden.get(i).copied().unwrap_or(1);
            if l.weights.len() != expect || l.bias.len() != expect || l.weights.iter().any(|r| r.len() != fan_in) {
                return Err(MlmeError::Weights(format!("layer {} has the wrong shape", i + 1)));
            }
            fan_in = expect;
        }
        if c.layers.len() != c.hidden.len() + 1 || c.bounds.len() != c.inputs {
            return Err(MlmeError::Weights("layer count or bounds do not match the architecture".into()));
        }
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("weights serialize");
        s.push('\n');
        s
    }

    fn scale(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.inputs, "input dimension");
        x.iter()
            .zip(&self.bounds)
            .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    /// Activations of every layer, input first; the last entry is the logit.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![self.scale(x)];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let input = acts.last().unwrap();
            let out: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, b)| {
                    let z = b + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
                    if i == last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.forward(x).last().unwrap()[0])
    }

    /// Mean cross-entropy over a labeled set.
    pub fn loss(&self, data: &[(Vec<f64>, Class)]) -> f64 {
        data.iter().map(|(x, c)| bce(self.forward(x).last().unwrap()[0], c.target())).sum::<f64>() / data.len() as f64
    }

    /// Gradient of `loss` for every weight and bias, shaped like `layers`.
    pub fn gradient(&self, data: &[(Vec<f64>, Class)]) -> Vec<Layer> {
        let mut grad: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer { weights: vec![vec![0.0; l.weights[0].len()]; l.weights.len()], bias: vec![0.0; l.bias.len()] })
            .collect();
        let n = data.len() as f64;
        for (x, c) in data {
            let acts = self.forward(x);
            let z = acts.last().unwrap()[0];
            let mut delta = vec![(1.0 / (1.0 + (-z).exp()) - c.target()) / n];
            for li in (0..self.layers.len()).rev() {
                let input = &acts[li];
                for (j, d) in delta.iter().enumerate() {
                    grad[li].bias[j] += d;
                    for (k, a) in input.iter().enumerate() {
                        grad[li].weights[j][k] += d * a;
                    }
                }
                if li == 0 {
                    break;
                }
                let layer = &self.layers[li];
                delta = (0..input.len())
                    .map(|k| {
                        let back: f64 = delta.iter().enumerate().map(|(j, d)| d * layer.weights[j][k]).sum();
                        back * (1.0 - input[k] * input[k])
                    })
                    .collect();
            }
        }
        grad
    }

    pub fn accuracy(&self, data: &[(Vec<f64>, Class)]) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        data.iter().filter(|(x, c)| predict(self, x).0 == *c).count() as f64 / data.len() as f64
    }

    pub fn weights_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().flatten().chain(l.bias.iter_mut()))
    }
}

pub(crate) fn check_classes(data: &[(Vec<f64>, Class)]) -> Result<(), MlmeError> {
    if data.is_empty() {
        return Err(MlmeError::Config("training set is empty".into()));
    }
    let first = data[0].1;
    if data.iter().all(|(_, c)| *c == first) {
        return Err(MlmeError::SingleClassData(first));
    }
    Ok(())
}

/// Continues full-batch gradient descent from the classifier's weights.
pub fn fit(c: &mut Classifier, data: &[(Vec<f64>, Class)], cfg: &TrainConfig) -> Vec<f64> {
    let mut velocity: Vec<Layer> = c.gradient(&[]);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        curve.push(c.loss(data));
        let grad = c.gradient(data);
        for ((layer, g), v) in c.layers.iter_mut().zip(&grad).zip(&mut velocity) {
            let rows = layer.weights.iter_mut().zip(&g.weights).zip(&mut v.weights);
            for ((w_row, g_row), v_row) in rows {
                for ((w, gw), vw) in w_row.iter_mut().zip(g_row).zip(v_row) {
                    *vw = cfg.momentum * *vw - cfg.learning_rate * gw;
                    *w += *vw;
                }
            }
            for ((b, gb), vb) in layer.bias.iter_mut().zip(&g.bias).zip(&mut v.bias) {
                *vb = cfg.momentum * *vb - cfg.learning_rate * gb;
                *b += *vb;
            }
        }
    }
    curve.push(c.loss(data));
    curve
}

/// Trains a fresh network on `data`; `held_out` only feeds the report.
pub fn train_classifier(
    data: &[(Vec<f64>, Class)],
    held_out: &LabeledSet,
    bounds: Vec<(f64, f64)>,
    cfg: &TrainConfig,
) -> Result<(Classifier, TrainReport), MlmeError> {
    check_classes(data)?;
    if cfg.epochs == 0 || !(cfg.learning_rate > 0.0) || !(0.0..1.0).contains(&cfg.momentum) || cfg.hidden.contains(&0) {
        return Err(MlmeError::Config("epochs ≥ 1, learning rate > 0, momentum in [0,1) and non-empty layers are required".into()));
    }
    let mut c = Classifier::new(bounds, &cfg.hidden, cfg.seed);
    let loss_curve = fit(&mut c, data, cfg);
    let held_out_accuracy = (!held_out.is_empty()).then(|| c.accuracy(held_out));
    Ok((c, TrainReport { loss_curve, held_out_accuracy }))
}

/// `0.5 − |p − 0.5|`: largest where the classifier is least sure.
pub fn uncertainty(c: &Classifier, x: &[f64]) -> f64 {
    0.5 - (c.probability(x) - 0.5).abs()
}

pub fn predict(c: &Classifier, x: &[f64]) -> (Class, f64) {
    let p = c.probability(x);
    (if p >= 0.5 { Class::Plausible } else { Class::Implausible }, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize, seed: u64) -> LabeledSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
                let c = if x[0] + x[1] > 1.0 { Class::Plausible } else { Class::Implausible };
                (x, c)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = separable(12, 5);
        let mut c = Classifier::new(vec![(0.0, 1.0); 2], &[4, 3], 9);
        let grad: Vec<f64> = c.gradient(&data).iter().flat_map(|l| l.weights.iter().flatten().chain(&l.bias).copied().collect::<Vec<_>>()).collect();
        let count = c.weights_mut().count();
        for i in 0..count {
            let h = 1e-5;
            let orig = *c.weights_mut().nth(i).unwrap();
            *c.weights_mut().nth(i).unwrap() = orig + h;
            let up = c.loss(&data);
            *c.weights_mut().nth(i).unwrap() = orig - h;
            let down = c.loss(&data);
            *c.weights_mut().nth(i).unwrap() = orig;
            let numeric = (up - down) / (2.0 * h);
            let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-8);
            assert!(rel <= 1e-4, "weight {i}: {numeric} vs {}", grad[i]);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let data: LabeledSet = vec![(vec![0.1], Class::Plausible), (vec![0.2], Class::Plausible)];
        assert_eq!(
            train_classifier(&data, &vec![], vec![(0.0, 1.0)], &TrainConfig::new(10, 0.1, 0)).unwrap_err(),
            MlmeError::SingleClassData(Class::Plausible)
        );
    }

    #[test]
    fn uncertainty_peaks_at_one_half() {
        let mut c = Classifier::new(vec![(0.0, 1.0)], &[2], 0);
        for w in c.weights_mut() {
            *w = 0.0;
        }
        assert_eq!(uncertainty(&c, &[0.3]), 0.5);
        assert_eq!(predict(&c, &[0.3]), (Class::Plausible, 0.5));
        c.layers[1].bias[0] = 40.0;
        let u = uncertainty(&c, &[0.3]);
        assert!((0.0..1e-12).contains(&u));
        let p = c.probability(&[0.3]);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn weights_round_trip() {
        let c = Classifier::new(vec![(0.0, 2.0); 3], &[5, 4], 7);
        assert_eq!(Classifier::from_json(&c.to_json()).unwrap(), c);
        let mut broken = c.clone();
        broken.layers[1].weights.pop();
        assert!(Classifier::from_json(&broken.to_json()).is_err());
    }
}
