//! Comparison models fed the flattened window: a one-hidden-layer perceptron,
//! a hinge-loss linear classifier and a seeded coin flip.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_samples, uniform_fill, DirectionPredictor, RnnTrainConfig, WindowSample};
use crate::error::{Error, Result};
use crate::market::binarize;
use crate::sentiment::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    Mlp,
    LinearSvm,
    Rand,
}

/// Sigmoid hidden layer, sigmoid output, squared-error SGD on `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub input: usize,
    pub hidden: usize,
    /// `input × hidden`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Mlp {
    fn init(input: usize, hidden: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = uniform_fill(&mut rng, input * hidden, scale);
        let b1 = uniform_fill(&mut rng, hidden, scale);
        let w2 = uniform_fill(&mut rng, hidden, scale);
        let b2 = uniform_fill(&mut rng, 1, scale)[0];
        Self { input, hidden, w1, b1, w2, b2 }
    }

    fn hidden_layer(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.b1);
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.w1[i * self.hidden..(i + 1) * self.hidden];
            for (a, &w) in out.iter_mut().zip(row) {
                *a += xi * w;
            }
        }
        for a in out.iter_mut() {
            *a = sigmoid(*a);
        }
    }

    pub fn predict(&self, sample: &WindowSample) -> Result<f64> {
        if sample.inputs.len() != self.input {
            return Err(Error::DimensionMismatch {
                expected: self.input,
                actual: sample.inputs.len(),
            });
        }
        let mut h = Vec::new();
        self.hidden_layer(&sample.inputs, &mut h);
        Ok(sigmoid(h.iter().zip(&self.w2).map(|(a, b)| a * b).sum::<f64>() + self.b2))
    }

    fn sgd_step(&mut self, sample: &WindowSample, lr: f64, h: &mut Vec<f64>) {
        self.hidden_layer(&sample.inputs, h);
        let y = sigmoid(h.iter().zip(&self.w2).map(|(a, b)| a * b).sum::<f64>() + self.b2);
        let delta_out = (y - sample.target) * y * (1.0 - y);
        for (j, &hj) in h.iter().enumerate() {
            let delta_h = delta_out * self.w2[j] * hj * (1.0 - hj);
            self.w2[j] -= lr * delta_out * hj;
            self.b1[j] -= lr * delta_h;
            for (i, &xi) in sample.inputs.iter().enumerate() {
                self.w1[i * self.hidden + j] -= lr * delta_h * xi;
            }
        }
        self.b2 -= lr * delta_out;
    }
}

/// Linear classifier trained with hinge-loss SGD on labels mapped to ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn decision(&self, sample: &WindowSample) -> Result<f64> {
        if sample.inputs.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: sample.inputs.len(),
            });
        }
        Ok(sample.inputs.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>() + self.bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineModel {
    Mlp(Mlp),
    LinearSvm(LinearSvm),
    /// Fair coin flips from a fixed seed.
    Rand { seed: u64 },
}

impl DirectionPredictor for BaselineModel {
    fn predict_labels(&self, samples: &[WindowSample]) -> Result<Vec<u8>> {
        match self {
            BaselineModel::Mlp(m) => samples.iter().map(|s| m.predict(s).map(binarize)).collect(),
            BaselineModel::LinearSvm(m) => samples
                .iter()
                .map(|s| m.decision(s).map(|d| u8::from(d > 0.0)))
                .collect(),
            BaselineModel::Rand { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(samples.iter().map(|_| u8::from(rng.gen::<bool>())).collect())
            }
        }
    }
}

pub fn train_baseline(
    kind: BaselineKind,
    samples: &[WindowSample],
    cfg: &RnnTrainConfig,
) -> Result<BaselineModel> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d_in = samples[0].d_in;
    check_samples(samples, d_in, None)?;
    let width = samples[0].inputs.len();
    Ok(match kind {
        BaselineKind::Rand => BaselineModel::Rand { seed: cfg.seed },
        BaselineKind::Mlp => {
            let mut mlp = Mlp::init(width, cfg.hidden, cfg.init_scale, cfg.seed);
            if cfg.learning_rate > 0.0 {
                let mut h = Vec::new();
                for _ in 0..cfg.epochs {
                    for s in samples {
                        mlp.sgd_step(s, cfg.learning_rate, &mut h);
                    }
                }
            }
            BaselineModel::Mlp(mlp)
        }
        BaselineKind::LinearSvm => {
            let mut svm = LinearSvm {
                weights: vec![0.0; width],
                bias: 0.0,
            };
            for _ in 0..cfg.epochs {
                for s in samples {
                    let y = if s.label == 1 { 1.0 } else { -1.0 };
                    if y * svm.decision(s)? < 1.0 {
                        for (w, &x) in svm.weights.iter_mut().zip(&s.inputs) {
                            *w += cfg.learning_rate * y * x;
                        }
                        svm.bias += cfg.learning_rate * y;
                    }
                }
            }
            BaselineModel::LinearSvm(svm)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(inputs: Vec<f64>, target: f64, label: u8) -> WindowSample {
        WindowSample::new(inputs, 1, target, label).unwrap()
    }

    #[test]
    fn rand_is_seeded_and_fair() {
        let samples: Vec<_> = (0..10_000).map(|i| sample(vec![0.0], 0.5, (i % 2) as u8)).collect();
        let cfg = RnnTrainConfig { seed: 17, ..Default::default() };
        let m = train_baseline(BaselineKind::Rand, &samples[..1], &cfg).unwrap();
        let a = m.predict_labels(&samples).unwrap();
        assert_eq!(a, m.predict_labels(&samples).unwrap());
        let ones = a.iter().filter(|&&l| l == 1).count() as f64 / a.len() as f64;
        assert!((ones - 0.5).abs() < 0.02);
    }

    #[test]
    fn svm_separates_separable_windows() {
        let samples: Vec<_> = (0..40)
            .map(|i| {
                let up = i % 2 == 0;
                let x = if up { 0.6 + 0.01 * i as f64 } else { 0.4 - 0.01 * i as f64 };
                sample(vec![x, 1.0 - x, 0.5], x, u8::from(up))
            })
            .collect();
        let cfg = RnnTrainConfig { k: 3, learning_rate: 0.1, epochs: 200, ..Default::default() };
        let m = train_baseline(BaselineKind::LinearSvm, &samples, &cfg).unwrap();
        let labels = m.predict_labels(&samples).unwrap();
        assert!(labels.iter().zip(&samples).all(|(&p, s)| p == s.label));
    }

    #[test]
    fn mlp_with_zero_rate_keeps_init() {
        let samples = vec![sample(vec![0.1, 0.9], 0.3, 0)];
        let cfg = RnnTrainConfig { k: 2, learning_rate: 0.0, seed: 4, ..Default::default() };
        let BaselineModel::Mlp(m) = train_baseline(BaselineKind::Mlp, &samples, &cfg).unwrap() else {
            panic!("expected mlp")
        };
        assert_eq!(m, Mlp::init(2, 25, 0.5, 4));
    }

    #[test]
    fn mlp_fits_a_simple_map() {
        let samples: Vec<_> = (0..20)
            .map(|i| {
                let x = i as f64 / 19.0;
                sample(vec![x, x], 0.2 + 0.6 * x, u8::from(x > 0.5))
            })
            .collect();
        let cfg = RnnTrainConfig { k: 2, learning_rate: 0.5, epochs: 400, seed: 1, ..Default::default() };
        let m = train_baseline(BaselineKind::Mlp, &samples, &cfg).unwrap();
        let labels = m.predict_labels(&samples).unwrap();
        let hits = labels.iter().zip(&samples).filter(|(&p, s)| p == s.label).count();
        assert!(hits >= 18, "{hits}");
    }
}
