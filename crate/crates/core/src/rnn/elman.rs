//! Elman network with sigmoid hidden and output units, trained by
//! backpropagation through the whole window on `½ (ŷ - target)²`.
//!
//! ```text
//! h_s = σ(x_s W1 + h_{s-1} W2 + B1),   h_0 = 0,   s = 1..k
//! ŷ   = σ(h_k W3 + B2)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_samples, uniform_fill, DirectionPredictor, RnnTrainConfig, WindowSample};
use crate::error::{Error, Result};
use crate::market::binarize;
use crate::sentiment::sigmoid;

/// Weight matrices are row-major: `w1[i * hidden + j]` connects input `i` to
/// hidden unit `j`, `w2[i * hidden + j]` previous hidden `i` to hidden `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    pub hidden: usize,
    pub d_in: usize,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: f64,
}

/// Gradients, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnGrads {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: f64,
}

impl RnnGrads {
    fn zeros_like(m: &RnnModel) -> Self {
        Self {
            w1: vec![0.0; m.w1.len()],
            w2: vec![0.0; m.w2.len()],
            w3: vec![0.0; m.w3.len()],
            b1: vec![0.0; m.b1.len()],
            b2: 0.0,
        }
    }

    fn clear(&mut self) {
        self.w1.fill(0.0);
        self.w2.fill(0.0);
        self.w3.fill(0.0);
        self.b1.fill(0.0);
        self.b2 = 0.0;
    }

    pub fn blocks(&self) -> [&[f64]; 5] {
        [&self.w1, &self.w2, &self.w3, &self.b1, std::slice::from_ref(&self.b2)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub prediction: f64,
    /// `k × hidden`, row `s` is the state after step `s`.
    pub hidden_states: Vec<f64>,
}

impl RnnModel {
    pub fn zeros(d_in: usize, hidden: usize) -> Self {
        Self {
            hidden,
            d_in,
            w1: vec![0.0; d_in * hidden],
            w2: vec![0.0; hidden * hidden],
            w3: vec![0.0; hidden],
            b1: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Uniform init in `[-scale, scale]`, drawn in the order W1, W2, W3, B1, B2.
    pub fn init(d_in: usize, hidden: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = uniform_fill(&mut rng, d_in * hidden, scale);
        let w2 = uniform_fill(&mut rng, hidden * hidden, scale);
        let w3 = uniform_fill(&mut rng, hidden, scale);
        let b1 = uniform_fill(&mut rng, hidden, scale);
        let b2 = uniform_fill(&mut rng, 1, scale)[0];
        Self {
            hidden,
            d_in,
            w1,
            w2,
            w3,
            b1,
            b2,
        }
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 5] {
        [
            &mut self.w1,
            &mut self.w2,
            &mut self.w3,
            &mut self.b1,
            std::slice::from_mut(&mut self.b2),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.w1
            .iter()
            .chain(&self.w2)
            .chain(&self.w3)
            .chain(&self.b1)
            .chain(std::iter::once(&self.b2))
            .all(|v| v.is_finite())
    }

    fn check(&self, sample: &WindowSample) -> Result<()> {
        if sample.d_in != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: self.d_in,
                actual: sample.d_in,
            });
        }
        Ok(())
    }

    fn forward_into(&self, sample: &WindowSample, states: &mut Vec<f64>) -> f64 {
        let h = self.hidden;
        let k = sample.k();
        states.clear();
        states.resize(k * h, 0.0);
        for s in 0..k {
            let (before, current) = states.split_at_mut(s * h);
            let current = &mut current[..h];
            current.copy_from_slice(&self.b1);
            for (i, &x) in sample.step(s).iter().enumerate() {
                let row = &self.w1[i * h..(i + 1) * h];
                for (a, &w) in current.iter_mut().zip(row) {
                    *a += x * w;
                }
            }
            if s > 0 {
                let prev = &before[(s - 1) * h..];
                for (i, &hp) in prev.iter().enumerate() {
                    let row = &self.w2[i * h..(i + 1) * h];
                    for (a, &w) in current.iter_mut().zip(row) {
                        *a += hp * w;
                    }
                }
            }
            for a in current.iter_mut() {
                *a = sigmoid(*a);
            }
        }
        let last = &states[(k - 1) * h..];
        let z: f64 = last.iter().zip(&self.w3).map(|(a, b)| a * b).sum::<f64>() + self.b2;
        sigmoid(z)
    }

    pub fn forward(&self, sample: &WindowSample) -> Result<Forward> {
        self.check(sample)?;
        let mut hidden_states = Vec::new();
        let prediction = self.forward_into(sample, &mut hidden_states);
        Ok(Forward {
            prediction,
            hidden_states,
        })
    }

    pub fn predict(&self, sample: &WindowSample) -> Result<f64> {
        self.forward(sample).map(|f| f.prediction)
    }

    pub fn predict_direction(&self, sample: &WindowSample) -> Result<u8> {
        self.predict(sample).map(binarize)
    }

    /// Accumulates the squared-error gradient into `grads` (which must be
    /// cleared by the caller) and returns the loss.
    fn backward_into(
        &self,
        sample: &WindowSample,
        states: &[f64],
        prediction: f64,
        grads: &mut RnnGrads,
        dh: &mut Vec<f64>,
        da: &mut Vec<f64>,
    ) -> f64 {
        let h = self.hidden;
        let k = sample.k();
        let residual = prediction - sample.target;
        let delta_out = residual * prediction * (1.0 - prediction);

        let last = &states[(k - 1) * h..k * h];
        for (g, &a) in grads.w3.iter_mut().zip(last) {
            *g += delta_out * a;
        }
        grads.b2 += delta_out;

        dh.clear();
        dh.extend(self.w3.iter().map(|&w| delta_out * w));
        da.clear();
        da.resize(h, 0.0);
        for s in (0..k).rev() {
            let state = &states[s * h..(s + 1) * h];
            for j in 0..h {
                da[j] = dh[j] * state[j] * (1.0 - state[j]);
            }
            for (i, &x) in sample.step(s).iter().enumerate() {
                let row = &mut grads.w1[i * h..(i + 1) * h];
                for (g, &d) in row.iter_mut().zip(da.iter()) {
                    *g += x * d;
                }
            }
            for (g, &d) in grads.b1.iter_mut().zip(da.iter()) {
                *g += d;
            }
            if s > 0 {
                let prev = &states[(s - 1) * h..s * h];
                for i in 0..h {
                    let row = &mut grads.w2[i * h..(i + 1) * h];
                    let w_row = &self.w2[i * h..(i + 1) * h];
                    let mut back = 0.0;
                    for j in 0..h {
                        row[j] += prev[i] * da[j];
                        back += w_row[j] * da[j];
                    }
                    dh[i] = back;
                }
            }
        }
        0.5 * residual * residual
    }

    /// Exact gradient of `½ (ŷ - target)²` with respect to every parameter.
    pub fn backward(&self, sample: &WindowSample) -> Result<RnnGrads> {
        self.check(sample)?;
        let mut states = Vec::new();
        let prediction = self.forward_into(sample, &mut states);
        let mut grads = RnnGrads::zeros_like(self);
        self.backward_into(sample, &states, prediction, &mut grads, &mut Vec::new(), &mut Vec::new());
        Ok(grads)
    }

    pub fn loss(&self, sample: &WindowSample) -> Result<f64> {
        let p = self.predict(sample)?;
        Ok(0.5 * (p - sample.target).powi(2))
    }

    /// Mean of `(ŷ - target)²` over `samples`.
    pub fn mse(&self, samples: &[WindowSample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for s in samples {
            total += (self.predict(s)? - s.target).powi(2);
        }
        Ok(total / samples.len() as f64)
    }

    fn apply(&mut self, grads: &RnnGrads, lr: f64) {
        let [w1, w2, w3, b1, b2] = self.blocks_mut();
        for (p, g) in [w1, w2, w3, b1, b2].into_iter().zip(grads.blocks()) {
            for (pi, gi) in p.iter_mut().zip(g) {
                *pi -= lr * gi;
            }
        }
    }

    /// Per-sample SGD over `samples` in the given order, `cfg.epochs` passes.
    pub fn train(samples: &[WindowSample], cfg: &RnnTrainConfig, d_in: usize) -> Result<Self> {
        cfg.validate()?;
        check_samples(samples, d_in, None)?;
        let mut model = Self::init(d_in, cfg.hidden, cfg.init_scale, cfg.seed);
        if cfg.learning_rate == 0.0 {
            return Ok(model);
        }
        let mut grads = RnnGrads::zeros_like(&model);
        let (mut states, mut dh, mut da) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..cfg.epochs {
            for sample in samples {
                let prediction = model.forward_into(sample, &mut states);
                grads.clear();
                model.backward_into(sample, &states, prediction, &mut grads, &mut dh, &mut da);
                model.apply(&grads, cfg.learning_rate);
            }
        }
        Ok(model)
    }
}

impl DirectionPredictor for RnnModel {
    fn predict_labels(&self, samples: &[WindowSample]) -> Result<Vec<u8>> {
        samples.iter().map(|s| self.predict_direction(s)).collect()
    }
}

/// JSON checkpoint; weight arrays are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct RnnCheckpoint {
    pub H: usize,
    pub d_in: usize,
    pub W1: Vec<f64>,
    pub W2: Vec<f64>,
    pub W3: Vec<f64>,
    pub B1: Vec<f64>,
    pub B2: f64,
    pub seed: u64,
    pub config: RnnTrainConfig,
}

impl RnnCheckpoint {
    pub fn new(model: &RnnModel, config: &RnnTrainConfig) -> Self {
        Self {
            H: model.hidden,
            d_in: model.d_in,
            W1: model.w1.clone(),
            W2: model.w2.clone(),
            W3: model.w3.clone(),
            B1: model.b1.clone(),
            B2: model.b2,
            seed: config.seed,
            config: config.clone(),
        }
    }

    pub fn into_model(self) -> Result<RnnModel> {
        let h = self.H;
        let shapes = [
            (self.W1.len(), self.d_in * h),
            (self.W2.len(), h * h),
            (self.W3.len(), h),
            (self.B1.len(), h),
        ];
        if let Some(&(actual, expected)) = shapes.iter().find(|(a, e)| a != e) {
            return Err(Error::DimensionMismatch { expected, actual });
        }
        let model = RnnModel {
            hidden: h,
            d_in: self.d_in,
            w1: self.W1,
            w2: self.W2,
            w3: self.W3,
            b1: self.B1,
            b2: self.B2,
        };
        if !model.is_finite() {
            return Err(Error::Domain("checkpoint holds non-finite parameters".into()));
        }
        Ok(model)
    }
}
