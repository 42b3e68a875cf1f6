//! Logistic-regression polarity model and the term-weight dictionary it
//! produces.
//!
//! Two scores are exposed per post: [`SentimentModel::score_post`] is the
//! sigmoid probability that the post is positive, and
//! [`SentimentModel::signed_score`] is the raw logit `w·x`, negative for
//! bearish posts. Daily bullishness sums the latter.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{featurize, FeatureVector, Post, Vocabulary, Weighting};
use crate::error::{Error, Result};

/// Probabilities are clamped to `[LOSS_CLAMP, 1 - LOSS_CLAMP]` inside the log-loss.
pub const LOSS_CLAMP: f64 = 1e-12;

/// Logistic function, stable for arbitrarily large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Polarity decision at threshold 0.5: 1 only when `h > 0.5`.
pub fn classify(h: f64) -> u8 {
    u8::from(h > 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub weighting: Weighting,
    /// Learn an additive bias alongside the term weights.
    pub fit_bias: bool,
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 300,
            seed,
            shuffle: true,
            weighting: Weighting::Tf,
            fit_bias: false,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "sentiment learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("sentiment epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// A featurized post with its logistic target (1 positive, 0 negative).
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub target: f64,
}

/// Featurizes labeled posts. Fails on the first unlabeled one.
pub fn labeled_examples(
    posts: &[Post],
    vocab: &Vocabulary,
    weighting: Weighting,
) -> Result<Vec<Example>> {
    posts
        .iter()
        .map(|p| {
            let label = p.label.ok_or_else(|| Error::UnlabeledPost(p.id.clone()))?;
            Ok(Example {
                features: featurize(&p.tokens, vocab, weighting),
                target: label.target(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentModel {
    pub vocab_fingerprint: String,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub bias: f64,
}

impl SentimentModel {
    pub fn zeros(vocab: &Vocabulary) -> Self {
        Self {
            vocab_fingerprint: vocab.fingerprint(),
            weights: vec![0.0; vocab.len()],
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check(&self, x: &FeatureVector) -> Result<()> {
        if x.dim() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: x.dim(),
            });
        }
        Ok(())
    }

    pub fn is_bound_to(&self, vocab: &Vocabulary) -> bool {
        self.vocab_fingerprint == vocab.fingerprint() && self.weights.len() == vocab.len()
    }

    /// Logit `w·x` (+ bias when fitted).
    pub fn signed_score(&self, x: &FeatureVector) -> Result<f64> {
        self.check(x)?;
        Ok(x.dot(&self.weights) + self.bias)
    }

    /// Probability the post is positive.
    pub fn score_post(&self, x: &FeatureVector) -> Result<f64> {
        self.signed_score(x).map(sigmoid)
    }

    /// Cross-entropy of a single example.
    pub fn example_loss(&self, ex: &Example) -> Result<f64> {
        let h = self
            .score_post(&ex.features)?
            .clamp(LOSS_CLAMP, 1.0 - LOSS_CLAMP);
        Ok(-(ex.target * h.ln() + (1.0 - ex.target) * (1.0 - h).ln()))
    }

    /// Sparse gradient `(h - y) x` of [`Self::example_loss`] over the term weights.
    pub fn example_gradient(&self, ex: &Example) -> Result<Vec<(usize, f64)>> {
        let residual = self.score_post(&ex.features)? - ex.target;
        Ok(ex
            .features
            .entries()
            .iter()
            .map(|&(i, v)| (i, residual * v))
            .collect())
    }

    /// Average cross-entropy over `examples`.
    pub fn loss(&self, examples: &[Example]) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for ex in examples {
            total += self.example_loss(ex)?;
        }
        Ok(total / examples.len() as f64)
    }

    pub fn accuracy(&self, examples: &[Example]) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut hits = 0usize;
        for ex in examples {
            let predicted = classify(self.score_post(&ex.features)?);
            hits += usize::from(f64::from(predicted) == ex.target);
        }
        Ok(hits as f64 / examples.len() as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self).map_err(|e| Error::parse(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let model: Self =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e))?;
        if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
            return Err(Error::parse(path, "non-finite weight"));
        }
        Ok(model)
    }
}

/// Per-example gradient descent from zero weights on pre-featurized examples.
pub fn train_on_examples(
    examples: &[Example],
    vocab_fingerprint: &str,
    dim: usize,
    cfg: &TrainConfig,
) -> Result<SentimentModel> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let has_pos = examples.iter().any(|e| e.target == 1.0);
    let has_neg = examples.iter().any(|e| e.target == 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::DegenerateLabels);
    }
    if let Some(bad) = examples.iter().find(|e| e.features.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.features.dim(),
        });
    }

    let mut model = SentimentModel {
        vocab_fingerprint: vocab_fingerprint.to_string(),
        weights: vec![0.0; dim],
        bias: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for _ in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        for &k in &order {
            let ex = &examples[k];
            let residual = sigmoid(ex.features.dot(&model.weights) + model.bias) - ex.target;
            let step = cfg.learning_rate * residual;
            for &(i, v) in ex.features.entries() {
                model.weights[i] -= step * v;
            }
            if cfg.fit_bias {
                model.bias -= step;
            }
        }
    }
    Ok(model)
}

/// Trains the polarity model on labeled posts featurized against `vocab`.
pub fn train_logistic(posts: &[Post], vocab: &Vocabulary, cfg: &TrainConfig) -> Result<SentimentModel> {
    let examples = labeled_examples(posts, vocab, cfg.weighting)?;
    train_on_examples(&examples, &vocab.fingerprint(), vocab.len(), cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryEntry {
    pub term: String,
    pub weight: f64,
}

/// Dictionary rows ordered by weight descending, ties broken by term.
pub fn dictionary(model: &SentimentModel, vocab: &Vocabulary) -> Result<Vec<DictionaryEntry>> {
    if model.weights.len() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            actual: model.weights.len(),
        });
    }
    let mut rows: Vec<DictionaryEntry> = vocab
        .terms()
        .iter()
        .zip(&model.weights)
        .map(|(t, &w)| DictionaryEntry {
            term: t.clone(),
            weight: w,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.term.cmp(&b.term))
    });
    Ok(rows)
}

/// Writes the `term\tweight` TSV and returns the number of rows.
pub fn export_dictionary(model: &SentimentModel, vocab: &Vocabulary, path: &Path) -> Result<usize> {
    let rows = dictionary(model, vocab)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "term\tweight")?;
        for row in &rows {
            writeln!(out, "{}\t{}", row.term, crate::fmt::real(row.weight))?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))?;
    Ok(rows.len())
}

/// Reads a dictionary TSV back into a model bound to `vocab`. Terms absent
/// from the file get weight zero; terms absent from `vocab` are an error.
pub fn import_dictionary(path: &Path, vocab: &Vocabulary) -> Result<SentimentModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut model = SentimentModel::zeros(vocab);
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if n == 0 {
            if line != "term\tweight" {
                return Err(Error::parse(path, "missing `term\\tweight` header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (term, weight) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, format!("line {}: expected two columns", n + 1)))?;
        let weight: f64 = weight
            .parse()
            .map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1)))?;
        let i = vocab
            .index_of(term)
            .ok_or_else(|| Error::parse(path, format!("line {}: unknown term {term:?}", n + 1)))?;
        model.weights[i] = weight;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, NgramPolicy, Polarity};
    use chrono::NaiveDate;

    fn post(id: &str, words: &[&str], label: Option<Polarity>) -> Post {
        let date = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
        Post::new(id, "s", date, words.iter().map(|w| w.to_string()).collect(), label).unwrap()
    }

    fn model(weights: &[f64]) -> SentimentModel {
        SentimentModel {
            vocab_fingerprint: String::new(),
            weights: weights.to_vec(),
            bias: 0.0,
        }
    }

    fn fv(dim: usize, pairs: &[(usize, f64)]) -> FeatureVector {
        FeatureVector::from_pairs(dim, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(700.0).is_finite() && sigmoid(-700.0) > 0.0);
    }

    #[test]
    fn classify_threshold() {
        assert_eq!(classify(0.9), 1);
        assert_eq!(classify(0.5), 0);
        assert_eq!(classify(0.1), 0);
    }

    #[test]
    fn scores() {
        let x = fv(2, &[(0, 1.0), (1, 1.0)]);
        assert_eq!(model(&[0.0, 0.0]).score_post(&x).unwrap(), 0.5);
        assert_eq!(model(&[1.0, -1.0]).score_post(&x).unwrap(), 0.5);
        let h = model(&[2.0]).score_post(&fv(1, &[(0, 1.0)])).unwrap();
        assert!((h - 0.8807970779778823).abs() < 1e-12);
        assert_eq!(model(&[2.0]).signed_score(&fv(1, &[(0, 3.0)])).unwrap(), 6.0);
        assert_eq!(model(&[0.0, 0.0]).signed_score(&x).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let err = model(&[1.0]).score_post(&fv(2, &[(1, 1.0)]));
        assert!(matches!(err, Err(Error::DimensionMismatch { expected: 1, actual: 2 })));
    }

    #[test]
    fn loss_values() {
        let exs = vec![
            Example { features: fv(1, &[(0, 1.0)]), target: 1.0 },
            Example { features: fv(1, &[(0, 2.0)]), target: 0.0 },
        ];
        assert!((model(&[0.0]).loss(&exs).unwrap() - 2f64.ln()).abs() < 1e-15);
        let one = [Example { features: fv(1, &[(0, 1.0)]), target: 1.0 }];
        let l = model(&[3f64.ln()]).loss(&one).unwrap();
        assert!((l - 0.2876820724517809).abs() < 1e-12);
        assert!(model(&[800.0]).loss(&one).unwrap() < 1e-11);
        let wrong = [Example { features: fv(1, &[(0, 1.0)]), target: 0.0 }];
        // clamp keeps the loss finite when h saturates to 1
        assert!((model(&[800.0]).loss(&wrong).unwrap() + LOSS_CLAMP.ln()).abs() < 1e-3);
        assert!(matches!(model(&[0.0]).loss(&[]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn unlabeled_post_is_rejected() {
        let posts = [post("a", &["x"], Some(Polarity::Positive)), post("b", &["y"], None)];
        let vocab = build_vocabulary(&posts, NgramPolicy::Uni, 1).unwrap();
        let err = labeled_examples(&posts, &vocab, Weighting::Tf);
        assert!(matches!(err, Err(Error::UnlabeledPost(id)) if id == "b"));
    }

    #[test]
    fn single_update_trace() {
        let exs = [Example { features: fv(1, &[(0, 1.0)]), target: 1.0 }];
        let cfg = TrainConfig { learning_rate: 1.0, epochs: 1, ..TrainConfig::with_seed(0) };
        // a lone class is degenerate; check the update through the helper instead
        assert!(matches!(
            train_on_examples(&exs, "", 1, &cfg),
            Err(Error::DegenerateLabels)
        ));
        let both = [
            Example { features: fv(2, &[(0, 1.0)]), target: 1.0 },
            Example { features: fv(2, &[(1, 1.0)]), target: 0.0 },
        ];
        let cfg = TrainConfig { shuffle: false, ..cfg };
        let m = train_on_examples(&both, "", 2, &cfg).unwrap();
        assert_eq!(m.weights, vec![0.5, -0.5]);
    }

    #[test]
    fn zero_learning_rate_keeps_zero_weights() {
        let posts = [
            post("a", &["up", "x"], Some(Polarity::Positive)),
            post("b", &["down", "x"], Some(Polarity::Negative)),
        ];
        let vocab = build_vocabulary(&posts, NgramPolicy::Uni, 1).unwrap();
        let cfg = TrainConfig { learning_rate: 0.0, epochs: 7, ..TrainConfig::with_seed(3) };
        let m = train_logistic(&posts, &vocab, &cfg).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert!(m.is_bound_to(&vocab));
    }

    #[test]
    fn fit_bias_moves_bias() {
        let posts = [
            post("a", &["up"], Some(Polarity::Positive)),
            post("b", &["up"], Some(Polarity::Positive)),
            post("c", &["down"], Some(Polarity::Negative)),
        ];
        let vocab = build_vocabulary(&posts, NgramPolicy::Uni, 1).unwrap();
        let cfg = TrainConfig { fit_bias: true, ..TrainConfig::with_seed(1) };
        let m = train_logistic(&posts, &vocab, &cfg).unwrap();
        assert!(m.bias != 0.0);
        let off = train_logistic(&posts, &vocab, &TrainConfig::with_seed(1)).unwrap();
        assert_eq!(off.bias, 0.0);
    }

    #[test]
    fn dictionary_orders_by_weight_then_term() {
        let posts = [post("a", &["c", "a", "b"], None)];
        let vocab = build_vocabulary(&posts, NgramPolicy::Uni, 1).unwrap();
        let zero = SentimentModel::zeros(&vocab);
        let rows = dictionary(&zero, &vocab).unwrap();
        let terms: Vec<_> = rows.iter().map(|r| r.term.as_str()).collect();
        assert_eq!(terms, ["a", "b", "c"]);
        let m = SentimentModel { weights: vec![-1.0, 2.0, 0.5], ..zero };
        let rows = dictionary(&m, &vocab).unwrap();
        let terms: Vec<_> = rows.iter().map(|r| r.term.as_str()).collect();
        assert_eq!(terms, ["b", "c", "a"]);
    }

    #[test]
    fn export_writes_header_and_rows() {
        let posts = [post("a", &["c", "a", "b"], None)];
        let vocab = build_vocabulary(&posts, NgramPolicy::Uni, 1).unwrap();
        let m = SentimentModel { weights: vec![0.25, -3.0, 1.0 / 3.0], ..SentimentModel::zeros(&vocab) };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.tsv");
        assert_eq!(export_dictionary(&m, &vocab, &path).unwrap(), 3);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "term\tweight\nc\t0.333333333\na\t0.25\nb\t-3\n");
        let back = import_dictionary(&path, &vocab).unwrap();
        assert_eq!(back.weights[0], 0.25);
        assert_eq!(back.vocab_fingerprint, vocab.fingerprint());
    }

    #[test]
    fn import_rejects_unknown_terms() {
        let posts = [post("a", &["a"], None)];
        let vocab = build_vocabulary(&posts, NgramPolicy::Uni, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.tsv");
        std::fs::write(&path, "term\tweight\nzzz\t1.0\n").unwrap();
        assert!(matches!(import_dictionary(&path, &vocab), Err(Error::Parse { .. })));
    }

    #[test]
    fn model_json_round_trip_is_exact() {
        let m = SentimentModel {
            vocab_fingerprint: "abc".into(),
            weights: vec![0.1, -2.0 / 3.0, 1e-300],
            bias: 0.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.save(&path).unwrap();
        assert_eq!(SentimentModel::load(&path).unwrap(), m);
    }
}
