//! File-chained pipeline stages. Each stage reads the artifacts of the
//! previous one from `out_dir`, so any stage can be rerun on its own.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::corpus::{build_vocabulary, featurize, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy, compare_models, read_summary_csv, summarize, sweep_k, train_and_predict, write_comparison_csv,
    write_curves_csv, write_lines, write_results_csv, write_summary_csv, ComparisonRow, Method, SummaryRow,
};
use crate::fmt::real;
use crate::indicators::{build_indicator_series, IndicatorSeries, ScoredPost};
use crate::io::{load_posts, load_prices, LineError};
use crate::market::{align, read_joined_csv, write_joined_csv, JoinedRow, VolatilitySeries};
use crate::rnn::{build_windows, split_chronological, RnnCheckpoint, RnnModel};
use crate::sentiment::{export_dictionary, labeled_examples, train_logistic, SentimentModel};

pub const VOCAB_FILE: &str = "vocab.json";
pub const MODEL_FILE: &str = "sentiment_model.json";
pub const DICTIONARY_FILE: &str = "dictionary.tsv";
pub const SCORES_FILE: &str = "scores.csv";
pub const INDICATORS_FILE: &str = "indicators.csv";
pub const JOINED_FILE: &str = "joined.csv";
pub const CHECKPOINT_FILE: &str = "rnn_checkpoint.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|e| Error::parse(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e))
}

fn out_path(cfg: &PipelineConfig, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    Ok(cfg.out_dir.join(name))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentReport {
    pub labeled: usize,
    pub vocabulary: usize,
    pub train_accuracy: f64,
    pub skipped: Vec<LineError>,
}

/// Builds the vocabulary over every post, fits the classifier on the labeled
/// ones, and writes the vocabulary, model and dictionary.
pub fn train_sentiment(cfg: &PipelineConfig) -> Result<SentimentReport> {
    let loaded = load_posts(&cfg.posts, cfg.tokenizer)?;
    let vocab = build_vocabulary(&loaded.posts, cfg.ngram, cfg.min_df)?;
    let labeled: Vec<_> = loaded.posts.iter().filter(|p| p.label.is_some()).cloned().collect();
    if labeled.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let train_cfg = cfg.sentiment_config();
    let model = train_logistic(&labeled, &vocab, &train_cfg)?;
    let train_accuracy = model.accuracy(&labeled_examples(&labeled, &vocab, train_cfg.weighting)?)?;

    write_json(&vocab, &out_path(cfg, VOCAB_FILE)?)?;
    model.save(&out_path(cfg, MODEL_FILE)?)?;
    export_dictionary(&model, &vocab, &out_path(cfg, DICTIONARY_FILE)?)?;
    Ok(SentimentReport {
        labeled: labeled.len(),
        vocabulary: vocab.len(),
        train_accuracy,
        skipped: loaded.errors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScoreRecord {
    id: String,
    stock: String,
    date: NaiveDate,
    signed_score: f64,
    score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub scored: usize,
    pub positive: usize,
    pub skipped: Vec<LineError>,
}

/// Scores every post (labeled or not) with the trained classifier.
pub fn score_posts(cfg: &PipelineConfig) -> Result<ScoreReport> {
    let vocab: Vocabulary = read_json(&cfg.out_dir.join(VOCAB_FILE))?;
    let model = SentimentModel::load(&cfg.out_dir.join(MODEL_FILE))?;
    if !model.is_bound_to(&vocab) {
        return Err(Error::Domain("sentiment model was trained on a different vocabulary".into()));
    }
    let loaded = load_posts(&cfg.posts, cfg.tokenizer)?;
    let mut lines = Vec::with_capacity(loaded.posts.len());
    let mut positive = 0;
    for post in &loaded.posts {
        let x = featurize(&post.tokens, &vocab, cfg.weighting);
        let z = model.signed_score(&x)?;
        positive += usize::from(z > 0.0);
        lines.push(format!(
            "{},{},{},{},{}",
            post.id,
            post.stock_id,
            post.date,
            real(z),
            real(model.score_post(&x)?)
        ));
    }
    let scored = lines.len();
    write_lines(&out_path(cfg, SCORES_FILE)?, "id,stock,date,signed_score,score", lines.into_iter())?;
    Ok(ScoreReport {
        scored,
        positive,
        skipped: loaded.errors,
    })
}

fn read_scores(path: &Path, stock: Option<&str>) -> Result<Vec<ScoredPost>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let mut posts = Vec::new();
    for record in reader.deserialize::<ScoreRecord>() {
        let r = record.map_err(|e| Error::parse(path, e))?;
        if stock.is_none_or(|s| s == r.stock) {
            posts.push(ScoredPost {
                id: r.id,
                date: r.date,
                signed_score: r.signed_score,
            });
        }
    }
    Ok(posts)
}

/// Daily indicators on the trading calendar of the price file.
pub fn build_indicators(cfg: &PipelineConfig) -> Result<IndicatorSeries> {
    let scored = read_scores(&cfg.out_dir.join(SCORES_FILE), cfg.stock.as_deref())?;
    let prices = load_prices(&cfg.prices)?;
    let series = build_indicator_series(&scored, &prices.dates(), cfg.indicator_params())?;
    series.write_csv(&out_path(cfg, INDICATORS_FILE)?)?;
    Ok(series)
}

/// Volatility, normalization, labels and the join with the indicators.
pub fn prepare_market(cfg: &PipelineConfig) -> Result<Vec<JoinedRow>> {
    let prices = load_prices(&cfg.prices)?;
    let indicators = IndicatorSeries::read_csv(&cfg.out_dir.join(INDICATORS_FILE), cfg.indicator_params())?;
    let mut vol = VolatilitySeries::from_prices(&prices)?;
    vol.normalize(cfg.normalization, cfg.split, cfg.labels)?;
    let rows = align(&vol, &indicators)?;
    write_joined_csv(&rows, &out_path(cfg, JOINED_FILE)?)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictReport {
    pub method: Method,
    pub train_samples: usize,
    pub test_samples: usize,
    pub accuracy: f64,
}

/// One training run of `cfg.method` at `cfg.k`; writes test-set predictions
/// and, for the recurrent models, a checkpoint.
pub fn train_predict(cfg: &PipelineConfig) -> Result<PredictReport> {
    let rows = read_joined_csv(&cfg.out_dir.join(JOINED_FILE))?;
    let rnn_cfg = cfg.rnn_config();
    let method = cfg.method;
    let samples = build_windows(&rows, rnn_cfg.k, method.features())?;
    let (train, test) = split_chronological(&samples, cfg.split);
    if train.is_empty() || test.is_empty() {
        return Err(Error::InsufficientData("empty train or test split".into()));
    }
    let predicted = match method {
        Method::RnnEmm | Method::Rnn => {
            let model = RnnModel::train(train, &rnn_cfg, method.features().width())?;
            write_json(&RnnCheckpoint::new(&model, &rnn_cfg), &out_path(cfg, CHECKPOINT_FILE)?)?;
            test.iter().map(|s| model.predict_direction(s)).collect::<Result<Vec<u8>>>()?
        }
        _ => train_and_predict(method, train, test, &rnn_cfg)?,
    };
    let actual: Vec<u8> = test.iter().map(|s| s.label).collect();
    // the sample at index i targets row i + k
    let first = rnn_cfg.k + train.len();
    write_lines(
        &out_path(cfg, PREDICTIONS_FILE)?,
        "date,actual,predicted",
        rows[first..]
            .iter()
            .zip(actual.iter().zip(&predicted))
            .map(|(r, (a, p))| format!("{},{a},{p}", r.date)),
    )?;
    Ok(PredictReport {
        method,
        train_samples: train.len(),
        test_samples: test.len(),
        accuracy: accuracy(&predicted, &actual)?,
    })
}

/// The seeded k-sweep over `cfg.methods`; writes results, curves and summary.
pub fn sweep(cfg: &PipelineConfig) -> Result<Vec<SummaryRow>> {
    let rows = read_joined_csv(&cfg.out_dir.join(JOINED_FILE))?;
    let results = sweep_k(&cfg.stock_id(), &rows, &cfg.methods, &cfg.sweep_config(), &cfg.rnn_config())?;
    write_results_csv(&results, &out_path(cfg, RESULTS_FILE)?)?;
    write_curves_csv(&results, &out_path(cfg, CURVES_FILE)?)?;
    let summary = summarize(&results);
    write_summary_csv(&summary, &out_path(cfg, SUMMARY_FILE)?)?;
    Ok(summary)
}

/// Cross-stock comparison over one or more summary files.
pub fn report(summaries: &[PathBuf], methods: &[Method], out: &Path) -> Result<Vec<ComparisonRow>> {
    if summaries.is_empty() {
        return Err(Error::Config("no summary files given".into()));
    }
    let mut rows = Vec::new();
    for path in summaries {
        rows.extend(read_summary_csv(path)?);
    }
    let comparison = compare_models(&rows, methods)?;
    write_comparison_csv(&comparison, out)?;
    Ok(comparison)
}

/// Every stage in order, ending with a single-stock comparison table.
pub fn run_all(cfg: &PipelineConfig) -> Result<Vec<ComparisonRow>> {
    train_sentiment(cfg)?;
    score_posts(cfg)?;
    build_indicators(cfg)?;
    prepare_market(cfg)?;
    train_predict(cfg)?;
    sweep(cfg)?;
    report(&[cfg.out_dir.join(SUMMARY_FILE)], &cfg.methods, &out_path(cfg, COMPARISON_FILE)?)
}
