//! Flat TOML pipeline configuration with `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{NgramPolicy, TokenizerMode, Weighting};
use crate::error::{Error, Result};
use crate::eval::{Method, SweepConfig};
use crate::indicators::{BullishnessMode, IndicatorParams, WindowMode, DEFAULT_EPSILON, DEFAULT_HALF_WIDTH};
use crate::market::{LabelMode, NormalizationMode};
use crate::rnn::{RnnTrainConfig, DEFAULT_HIDDEN};
use crate::sentiment::TrainConfig;

/// Every tunable of the pipeline. Unset keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub posts: PathBuf,
    pub prices: PathBuf,
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stock: Option<String>,

    pub tokenizer: TokenizerMode,
    pub ngram: NgramPolicy,
    pub min_df: usize,
    pub weighting: Weighting,
    pub sentiment_learning_rate: f64,
    pub sentiment_epochs: usize,
    pub sentiment_seed: u64,
    pub sentiment_shuffle: bool,
    pub sentiment_fit_bias: bool,

    pub epsilon: f64,
    pub half_width: usize,
    pub window: WindowMode,
    pub bullishness: BullishnessMode,

    pub normalization: NormalizationMode,
    pub labels: LabelMode,
    pub split: f64,

    pub method: Method,
    pub k: usize,
    pub hidden: usize,
    pub rnn_learning_rate: f64,
    pub rnn_epochs: usize,
    pub rnn_init_scale: f64,
    pub seed: u64,

    pub k_min: usize,
    pub k_max: usize,
    pub replications: usize,
    pub workers: usize,
    pub methods: Vec<Method>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let rnn = RnnTrainConfig::default();
        let sweep = SweepConfig::default();
        let sentiment = TrainConfig::with_seed(0);
        Self {
            posts: "posts.jsonl".into(),
            prices: "prices.csv".into(),
            out_dir: "out".into(),
            stock: None,
            tokenizer: TokenizerMode::default(),
            ngram: NgramPolicy::default(),
            min_df: 1,
            weighting: sentiment.weighting,
            sentiment_learning_rate: sentiment.learning_rate,
            sentiment_epochs: sentiment.epochs,
            sentiment_seed: sentiment.seed,
            sentiment_shuffle: sentiment.shuffle,
            sentiment_fit_bias: sentiment.fit_bias,
            epsilon: DEFAULT_EPSILON,
            half_width: DEFAULT_HALF_WIDTH,
            window: WindowMode::default(),
            bullishness: BullishnessMode::default(),
            normalization: NormalizationMode::default(),
            labels: LabelMode::default(),
            split: sweep.split,
            method: Method::RnnEmm,
            k: rnn.k,
            hidden: DEFAULT_HIDDEN,
            rnn_learning_rate: rnn.learning_rate,
            rnn_epochs: rnn.epochs,
            rnn_init_scale: rnn.init_scale,
            seed: rnn.seed,
            k_min: sweep.k_min,
            k_max: sweep.k_max,
            replications: sweep.replications,
            workers: sweep.workers,
            methods: Method::ALL.to_vec(),
        }
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string so `--set stock=000573` works unquoted.
fn override_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Loads `path` (or the defaults when `None`) and applies `key=value`
    /// overrides in order.
    pub fn load_with_overrides(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text).map_err(|e| Error::Config(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
            table.insert(key.trim().to_string(), override_value(value));
        }
        Self::from_table(table)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_df == 0 {
            return Err(Error::Config("min_df must be >= 1".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split {} must lie in (0, 1)", self.split)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.half_width == 0 {
            return Err(Error::Config("half_width must be >= 1".into()));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::Config(format!("bad k range {}..={}", self.k_min, self.k_max)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        self.sentiment_config().validate()?;
        self.rnn_config().validate()
    }

    pub fn sentiment_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.sentiment_learning_rate,
            epochs: self.sentiment_epochs,
            seed: self.sentiment_seed,
            shuffle: self.sentiment_shuffle,
            weighting: self.weighting,
            fit_bias: self.sentiment_fit_bias,
        }
    }

    pub fn indicator_params(&self) -> IndicatorParams {
        IndicatorParams {
            epsilon: self.epsilon,
            half_width: self.half_width,
            window: self.window,
            bullishness: self.bullishness,
        }
    }

    pub fn rnn_config(&self) -> RnnTrainConfig {
        RnnTrainConfig {
            k: self.k,
            hidden: self.hidden,
            learning_rate: self.rnn_learning_rate,
            epochs: self.rnn_epochs,
            seed: self.seed,
            init_scale: self.rnn_init_scale,
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            k_min: self.k_min,
            k_max: self.k_max,
            replications: self.replications,
            base_seed: self.seed,
            split: self.split,
            workers: self.workers,
        }
    }

    /// Stock id used in output files: explicit, or the posts file stem.
    pub fn stock_id(&self) -> String {
        self.stock.clone().unwrap_or_else(|| {
            self.posts
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "stock".into())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        let text = cfg.to_toml_string().unwrap();
        let back = PipelineConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml_string().unwrap(), text);
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(PipelineConfig::from_toml_str("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn overrides_apply_in_order() {
        let cfg = PipelineConfig::load_with_overrides(
            None,
            &[
                "k=4".into(),
                "stock=000573".into(),
                "window=\"centered\"".into(),
                "methods=[\"RNN\", \"RAND\"]".into(),
                "k=6".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.k, 6);
        assert_eq!(cfg.stock.as_deref(), Some("000573"));
        assert_eq!(cfg.window, WindowMode::Centered);
        assert_eq!(cfg.methods, vec![Method::Rnn, Method::Rand]);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in ["split = 1.5", "nonsense = 3", "k = \"ten\"", "min_df = 0", "k_min = 9\nk_max = 3"] {
            let err = PipelineConfig::from_toml_str(text).unwrap_err();
            assert!(err.is_config_error(), "{text}: {err}");
        }
        let err = PipelineConfig::load_with_overrides(None, &["k".into()]).unwrap_err();
        assert!(err.is_config_error());
    }
}
