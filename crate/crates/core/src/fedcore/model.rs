use super::FlError;
use crate::datagen::Sample;
use crate::simnet::SimTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Fixed framing overhead added to every serialized model.
pub const MODEL_HEADER_BYTES: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelVector {
    pub weights: Vec<f64>,
    pub timestamp: SimTime,
    payload_override: Option<u64>,
}

impl ModelVector {
    pub fn new(weights: Vec<f64>) -> ModelVector {
        ModelVector {
            weights,
            timestamp: SimTime::ZERO,
            payload_override: None,
        }
    }

    pub fn zeros(dim: usize) -> ModelVector {
        ModelVector::new(vec![0.0; dim])
    }

    /// Pretend the model serializes to `bytes` regardless of its dimension.
    pub fn with_payload_override(mut self, bytes: Option<u64>) -> ModelVector {
        self.payload_override = bytes;
        self
    }

    pub fn payload_override(&self) -> Option<u64> {
        self.payload_override
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    pub fn serialized_bytes(&self) -> u64 {
        serialize_model(self)
    }

    pub fn distance(&self, other: &ModelVector) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn check_dim(&self, other: &ModelVector) -> Result<(), FlError> {
        if self.dim() != other.dim() {
            return Err(FlError::DimMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

/// Transmission size: eight bytes per weight plus the header, unless the
/// scenario overrides it.
pub fn serialize_model(m: &ModelVector) -> u64 {
    m.payload_override
        .unwrap_or(m.weights.len() as u64 * 8 + MODEL_HEADER_BYTES)
}

/// A differentiable per-sample loss over a flat weight vector.
pub trait Model: Send + Sync {
    fn dim(&self) -> usize;

    fn init(&self, seed: u64) -> Vec<f64>;

    /// Adds the gradient of the loss at `s` into `grad` and returns the loss.
    fn accumulate_grad(&self, w: &[f64], s: &Sample, grad: &mut [f64]) -> f64;

    fn loss(&self, w: &[f64], s: &Sample) -> f64;

    fn predict(&self, w: &[f64], x: &[f64]) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Logistic,
    Mlp,
    /// logistic regression whose transfer size comes from the payload override
    SyntheticPayload,
}

pub fn build_model(kind: ModelKind, features: usize, classes: usize, hidden: usize) -> Box<dyn Model> {
    match kind {
        ModelKind::Logistic | ModelKind::SyntheticPayload => Box::new(Logistic::new(features, classes)),
        ModelKind::Mlp => Box::new(Mlp::new(features, hidden, classes)),
    }
}

/// Cross-entropy of logits `z` against `label`. Leaves `z` holding the
/// gradient with respect to the logits, softmax minus one-hot.
fn cross_entropy(z: &mut [f64], label: usize) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let zl = z[label];
    // measured from the label logit so that tiny losses keep full precision
    let loss = if zl >= m {
        z.iter()
            .enumerate()
            .filter(|(c, _)| *c != label)
            .map(|(_, v)| (v - zl).exp())
            .sum::<f64>()
            .ln_1p()
    } else {
        m - zl + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    };
    let lse = zl + loss;
    for (c, v) in z.iter_mut().enumerate() {
        *v = if c == label { (-loss).exp_m1() } else { (*v - lse).exp() };
    }
    loss
}

fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = i;
        }
    }
    best
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Multinomial logistic regression. Layout: `W` (classes x features,
/// row-major) followed by the bias vector.
#[derive(Debug, Clone)]
pub struct Logistic {
    pub features: usize,
    pub classes: usize,
}

impl Logistic {
    pub fn new(features: usize, classes: usize) -> Logistic {
        Logistic { features, classes }
    }

    fn logits(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        let d = self.features;
        let bias = &w[self.classes * d..];
        (0..self.classes)
            .map(|c| {
                let row = &w[c * d..(c + 1) * d];
                row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias[c]
            })
            .collect()
    }
}

impl Model for Logistic {
    fn dim(&self) -> usize {
        self.classes * (self.features + 1)
    }

    fn init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dim()).map(|_| 0.01 * rng.sample::<f64, _>(StandardNormal)).collect()
    }

    fn accumulate_grad(&self, w: &[f64], s: &Sample, grad: &mut [f64]) -> f64 {
        let d = self.features;
        let mut p = self.logits(w, &s.x);
        let loss = cross_entropy(&mut p, s.label);
        for c in 0..self.classes {
            let g = p[c];
            for (gw, xj) in grad[c * d..(c + 1) * d].iter_mut().zip(&s.x) {
                *gw += g * xj;
            }
            grad[self.classes * d + c] += g;
        }
        loss
    }

    fn loss(&self, w: &[f64], s: &Sample) -> f64 {
        cross_entropy(&mut self.logits(w, &s.x), s.label)
    }

    fn predict(&self, w: &[f64], x: &[f64]) -> usize {
        argmax(&self.logits(w, x))
    }
}

/// Two-layer perceptron with a softplus hidden layer. Layout: `W1` (hidden x
/// features), `b1`, `W2` (classes x hidden), `b2`.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub features: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Mlp {
    pub fn new(features: usize, hidden: usize, classes: usize) -> Mlp {
        Mlp {
            features,
            hidden,
            classes,
        }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.features;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.classes * self.hidden;
        (b1, w2, b2)
    }

    /// Returns (pre-activations, activations, logits).
    fn forward(&self, w: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (d, h) = (self.features, self.hidden);
        let (ob1, ow2, ob2) = self.offsets();
        let pre: Vec<f64> = (0..h)
            .map(|i| w[i * d..(i + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[ob1 + i])
            .collect();
        let act: Vec<f64> = pre.iter().map(|v| softplus(*v)).collect();
        let z = (0..self.classes)
            .map(|c| {
                w[ow2 + c * h..ow2 + (c + 1) * h]
                    .iter()
                    .zip(&act)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + w[ob2 + c]
            })
            .collect();
        (pre, act, z)
    }
}

impl Model for Mlp {
    fn dim(&self) -> usize {
        self.hidden * (self.features + 1) + self.classes * (self.hidden + 1)
    }

    fn init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ob1, ow2, ob2) = self.offsets();
        let s1 = (1.0 / self.features as f64).sqrt();
        let s2 = (1.0 / self.hidden as f64).sqrt();
        (0..self.dim())
            .map(|i| {
                let n: f64 = rng.sample(StandardNormal);
                if i < ob1 {
                    s1 * n
                } else if (ow2..ob2).contains(&i) {
                    s2 * n
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn accumulate_grad(&self, w: &[f64], s: &Sample, grad: &mut [f64]) -> f64 {
        let (d, h) = (self.features, self.hidden);
        let (ob1, ow2, ob2) = self.offsets();
        let (pre, act, mut p) = self.forward(w, &s.x);
        let loss = cross_entropy(&mut p, s.label);
        let mut back = vec![0.0; h];
        for c in 0..self.classes {
            let g = p[c];
            let row = ow2 + c * h;
            for i in 0..h {
                grad[row + i] += g * act[i];
                back[i] += g * w[row + i];
            }
            grad[ob2 + c] += g;
        }
        for i in 0..h {
            let g = back[i] * sigmoid(pre[i]);
            for (gw, xj) in grad[i * d..(i + 1) * d].iter_mut().zip(&s.x) {
                *gw += g * xj;
            }
            grad[ob1 + i] += g;
        }
        loss
    }

    fn loss(&self, w: &[f64], s: &Sample) -> f64 {
        cross_entropy(&mut self.forward(w, &s.x).2, s.label)
    }

    fn predict(&self, w: &[f64], x: &[f64]) -> usize {
        argmax(&self.forward(w, x).2)
    }
}

/// `f(w; x) = ||w - x||^2`; label ignored. Handy for closed-form checks.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    pub dim: usize,
}

impl Model for SquaredDistance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn init(&self, _seed: u64) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn accumulate_grad(&self, w: &[f64], s: &Sample, grad: &mut [f64]) -> f64 {
        for ((g, wi), xi) in grad.iter_mut().zip(w).zip(&s.x) {
            *g += 2.0 * (wi - xi);
        }
        self.loss(w, s)
    }

    fn loss(&self, w: &[f64], s: &Sample) -> f64 {
        w.iter().zip(&s.x).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    fn predict(&self, _w: &[f64], _x: &[f64]) -> usize {
        0
    }
}
