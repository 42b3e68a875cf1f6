//! Windowed next-day predictors: the Elman network and its baselines.

mod baselines;
mod elman;

pub use baselines::{train_baseline, BaselineKind, BaselineModel, LinearSvm, Mlp};
pub use elman::{Forward, RnnCheckpoint, RnnGrads, RnnModel};

use rand::distributions::{Distribution, Uniform};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::JoinedRow;

pub const DEFAULT_HIDDEN: usize = 25;

/// Which columns of a joined row feed the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    /// `[v_norm]`
    VolatilityOnly,
    /// `[v_norm, Z_B, Z_N]`
    WithIndicators,
}

impl FeatureSet {
    pub fn width(self) -> usize {
        match self {
            FeatureSet::VolatilityOnly => 1,
            FeatureSet::WithIndicators => 3,
        }
    }

    fn extend_row(self, row: &JoinedRow, out: &mut Vec<f64>) {
        out.push(row.v_norm);
        if self == FeatureSet::WithIndicators {
            out.push(row.z_bullishness);
            out.push(row.z_volume);
        }
    }
}

/// `k` consecutive days of inputs (row-major, `k × d_in`) and the following
/// day's normalized volatility and direction label.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub inputs: Vec<f64>,
    pub d_in: usize,
    pub target: f64,
    pub label: u8,
}

impl WindowSample {
    pub fn new(inputs: Vec<f64>, d_in: usize, target: f64, label: u8) -> Result<Self> {
        if d_in == 0 || inputs.is_empty() || !inputs.len().is_multiple_of(d_in) {
            return Err(Error::DimensionMismatch {
                expected: d_in,
                actual: inputs.len(),
            });
        }
        Ok(Self {
            inputs,
            d_in,
            target,
            label,
        })
    }

    pub fn k(&self) -> usize {
        self.inputs.len() / self.d_in
    }

    pub fn step(&self, s: usize) -> &[f64] {
        &self.inputs[s * self.d_in..(s + 1) * self.d_in]
    }
}

/// All windows of length `k` over `rows`; the sample whose target is day `j`
/// sees days `j-k .. j-1`.
pub fn build_windows(rows: &[JoinedRow], k: usize, features: FeatureSet) -> Result<Vec<WindowSample>> {
    if k == 0 {
        return Err(Error::Config("window length k must be >= 1".into()));
    }
    if rows.len() <= k {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot fill a window of {k} plus a target",
            rows.len()
        )));
    }
    Ok((k..rows.len())
        .map(|j| {
            let mut inputs = Vec::with_capacity(k * features.width());
            for row in &rows[j - k..j] {
                features.extend_row(row, &mut inputs);
            }
            WindowSample {
                inputs,
                d_in: features.width(),
                target: rows[j].v_norm,
                label: rows[j].label,
            }
        })
        .collect())
}

/// Chronological split: the first `floor(fraction · n)` samples train.
pub fn split_chronological(samples: &[WindowSample], fraction: f64) -> (&[WindowSample], &[WindowSample]) {
    let n_train = ((samples.len() as f64) * fraction).floor() as usize;
    samples.split_at(n_train.min(samples.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnTrainConfig {
    pub k: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for RnnTrainConfig {
    fn default() -> Self {
        Self {
            k: 10,
            hidden: DEFAULT_HIDDEN,
            learning_rate: 0.05,
            epochs: 500,
            seed: 0,
            init_scale: 0.5,
        }
    }
}

impl RnnTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.hidden == 0 || self.epochs == 0 {
            return Err(Error::Config("k, hidden and epochs must all be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::Config(format!("init scale {} must be >= 0", self.init_scale)));
        }
        Ok(())
    }
}

fn uniform_fill(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    if scale == 0.0 {
        return vec![0.0; n];
    }
    let dist = Uniform::new_inclusive(-scale, scale);
    (0..n).map(|_| dist.sample(rng)).collect()
}

fn check_samples(samples: &[WindowSample], d_in: usize, k: Option<usize>) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = k.unwrap_or_else(|| samples[0].k());
    for s in samples {
        if s.d_in != d_in {
            return Err(Error::DimensionMismatch {
                expected: d_in,
                actual: s.d_in,
            });
        }
        if s.k() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: s.k(),
            });
        }
    }
    Ok(())
}

/// Anything that can label a set of windows as up (1) or down (0).
pub trait DirectionPredictor {
    fn predict_labels(&self, samples: &[WindowSample]) -> Result<Vec<u8>>;
}
