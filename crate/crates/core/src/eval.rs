//! Accuracy, the seeded k-sweep, cross-stock comparison and Pearson
//! correlation.
//!
//! Table semantics: a sweep records one test accuracy per (method, k,
//! replication). A stock's score for a method is the mean over replications
//! at its best k. The cross-stock MEAN/STD are taken over those per-stock
//! scores.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::real;
use crate::market::JoinedRow;
use crate::rnn::{
    build_windows, split_chronological, train_baseline, BaselineKind, DirectionPredictor,
    FeatureSet, RnnModel, RnnTrainConfig, WindowSample,
};

/// Minimum test windows every k in a sweep must leave.
pub const MIN_TEST_SAMPLES: usize = 20;

/// Fraction of positions where `predicted` equals `actual`.
pub fn accuracy(predicted: &[u8], actual: &[u8]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch(predicted.len(), actual.len()));
    }
    if actual.is_empty() {
        return Err(Error::EmptyVector);
    }
    let hits = predicted.iter().zip(actual).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / actual.len() as f64)
}

/// Pearson product-moment correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 3 points, got {}",
            a.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "RNN+EMM")]
    RnnEmm,
    #[serde(rename = "RNN")]
    Rnn,
    #[serde(rename = "MLP")]
    Mlp,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "RAND")]
    Rand,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Rand, Method::Mlp, Method::Svm, Method::Rnn, Method::RnnEmm];

    pub fn name(self) -> &'static str {
        match self {
            Method::RnnEmm => "RNN+EMM",
            Method::Rnn => "RNN",
            Method::Mlp => "MLP",
            Method::Svm => "SVM",
            Method::Rand => "RAND",
        }
    }

    /// Only the fused model sees the sentiment indicators.
    pub fn features(self) -> FeatureSet {
        match self {
            Method::RnnEmm => FeatureSet::WithIndicators,
            _ => FeatureSet::VolatilityOnly,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// Trains `method` on the training windows and returns the predicted labels
/// of the test windows.
pub fn train_and_predict(
    method: Method,
    train: &[WindowSample],
    test: &[WindowSample],
    cfg: &RnnTrainConfig,
) -> Result<Vec<u8>> {
    let d_in = method.features().width();
    match method {
        Method::RnnEmm | Method::Rnn => RnnModel::train(train, cfg, d_in)?.predict_labels(test),
        Method::Mlp => train_baseline(BaselineKind::Mlp, train, cfg)?.predict_labels(test),
        Method::Svm => train_baseline(BaselineKind::LinearSvm, train, cfg)?.predict_labels(test),
        Method::Rand => train_baseline(BaselineKind::Rand, train, cfg)?.predict_labels(test),
    }
}

/// Test accuracy of one seeded training run.
pub fn run_replication(
    method: Method,
    samples: &[WindowSample],
    split: f64,
    cfg: &RnnTrainConfig,
) -> Result<f64> {
    let (train, test) = split_chronological(samples, split);
    if train.is_empty() || test.is_empty() {
        return Err(Error::InsufficientData("empty train or test split".into()));
    }
    let predicted = train_and_predict(method, train, test, cfg)?;
    let actual: Vec<u8> = test.iter().map(|s| s.label).collect();
    accuracy(&predicted, &actual)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub stock_id: String,
    pub method: Method,
    pub k: usize,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl ExperimentResult {
    pub fn new(stock_id: &str, method: Method, k: usize, accuracies: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&accuracies);
        Self {
            stock_id: stock_id.to_string(),
            method,
            k,
            accuracies,
            mean,
            std,
        }
    }

    pub fn replications(&self) -> usize {
        self.accuracies.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub split: f64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_min: 3,
            k_max: 15,
            replications: 50,
            base_seed: 0,
            split: 0.8,
            workers: 0,
        }
    }
}

/// Runs every (method, k) cell for `replications` seeds `base_seed + r`.
/// Results come back ordered by method (as given), then k.
pub fn sweep_k(
    stock_id: &str,
    rows: &[JoinedRow],
    methods: &[Method],
    sweep: &SweepConfig,
    base: &RnnTrainConfig,
) -> Result<Vec<ExperimentResult>> {
    if sweep.k_min == 0 || sweep.k_min > sweep.k_max {
        return Err(Error::Config(format!(
            "invalid k range {}..={}",
            sweep.k_min, sweep.k_max
        )));
    }
    if sweep.replications == 0 {
        return Err(Error::Config("replications must be >= 1".into()));
    }
    if methods.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    let ks: Vec<usize> = (sweep.k_min..=sweep.k_max).collect();

    let mut windows: BTreeMap<(usize, usize), Vec<WindowSample>> = BTreeMap::new();
    for &k in &ks {
        for features in [FeatureSet::VolatilityOnly, FeatureSet::WithIndicators] {
            let samples = build_windows(rows, k, features)?;
            let (_, test) = split_chronological(&samples, sweep.split);
            if test.len() < MIN_TEST_SAMPLES {
                return Err(Error::InsufficientData(format!(
                    "k = {k} leaves {} test windows, need {MIN_TEST_SAMPLES}",
                    test.len()
                )));
            }
            windows.insert((k, features.width()), samples);
        }
    }

    let cells: Vec<(Method, usize, u64)> = methods
        .iter()
        .flat_map(|&m| ks.iter().map(move |&k| (m, k)))
        .flat_map(|(m, k)| (0..sweep.replications as u64).map(move |r| (m, k, sweep.base_seed + r)))
        .collect();

    let run = || -> Result<Vec<f64>> {
        cells
            .par_iter()
            .map(|&(method, k, seed)| {
                let cfg = RnnTrainConfig { k, seed, ..base.clone() };
                let samples = &windows[&(k, method.features().width())];
                run_replication(method, samples, sweep.split, &cfg)
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let accuracies = pool.install(run)?;

    Ok(accuracies
        .chunks(sweep.replications)
        .zip(cells.chunks(sweep.replications))
        .map(|(acc, cell)| ExperimentResult::new(stock_id, cell[0].0, cell[0].1, acc.to_vec()))
        .collect())
}

/// Best k for `method`: highest mean, smallest k on ties.
pub fn best_k(results: &[ExperimentResult], method: Method) -> Option<&ExperimentResult> {
    pick_best(results.iter().filter(|r| r.method == method))
}

fn pick_best<'a>(
    candidates: impl Iterator<Item = &'a ExperimentResult>,
) -> Option<&'a ExperimentResult> {
    candidates.fold(None, |best, r| match best {
        Some(b) if b.mean > r.mean || (b.mean == r.mean && b.k <= r.k) => Some(b),
        _ => Some(r),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub stock: String,
    pub method: Method,
    pub best_k: usize,
    pub mean: f64,
    pub std: f64,
}

/// One summary row per (stock, method) at that method's best k.
pub fn summarize(results: &[ExperimentResult]) -> Vec<SummaryRow> {
    let keys: std::collections::BTreeSet<(String, Method)> = results
        .iter()
        .map(|r| (r.stock_id.clone(), r.method))
        .collect();
    keys.into_iter()
        .filter_map(|(stock, method)| {
            pick_best(results.iter().filter(|r| r.stock_id == stock && r.method == method)).map(|b| SummaryRow {
                stock: stock.clone(),
                method,
                best_k: b.k,
                mean: b.mean,
                std: b.std,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: Method,
    pub mean: f64,
    pub std: f64,
    pub stocks: usize,
}

/// Cross-stock MEAN and population STD of each method's best-k accuracy.
pub fn compare_models(summary: &[SummaryRow], methods: &[Method]) -> Result<Vec<ComparisonRow>> {
    let mut stocks: Vec<&str> = summary.iter().map(|r| r.stock.as_str()).collect();
    stocks.sort();
    stocks.dedup();
    if stocks.is_empty() {
        return Err(Error::EmptyDataset);
    }
    methods
        .iter()
        .map(|&method| {
            let values = stocks
                .iter()
                .map(|&stock| {
                    summary
                        .iter()
                        .find(|r| r.stock == stock && r.method == method)
                        .map(|r| r.mean)
                        .ok_or_else(|| Error::MissingCell {
                            stock: stock.to_string(),
                            method: method.to_string(),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std) = mean_std(&values);
            Ok(ComparisonRow {
                method,
                mean,
                std,
                stocks: values.len(),
            })
        })
        .collect()
}

pub(crate) fn write_lines(path: &Path, header: &str, lines: impl Iterator<Item = String>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = || -> std::io::Result<()> {
        writeln!(out, "{header}")?;
        for line in lines {
            writeln!(out, "{line}")?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Per-replication rows: `stock,method,k,replication,accuracy`.
pub fn write_results_csv(results: &[ExperimentResult], path: &Path) -> Result<()> {
    write_lines(
        path,
        "stock,method,k,replication,accuracy",
        results.iter().flat_map(|r| {
            r.accuracies
                .iter()
                .enumerate()
                .map(move |(i, a)| format!("{},{},{},{},{}", r.stock_id, r.method, r.k, i, real(*a)))
        }),
    )
}

/// Accuracy-vs-k curves: `stock,method,k,mean,std`.
pub fn write_curves_csv(results: &[ExperimentResult], path: &Path) -> Result<()> {
    write_lines(
        path,
        "stock,method,k,mean,std",
        results
            .iter()
            .map(|r| format!("{},{},{},{},{}", r.stock_id, r.method, r.k, real(r.mean), real(r.std))),
    )
}

pub fn write_summary_csv(summary: &[SummaryRow], path: &Path) -> Result<()> {
    write_lines(
        path,
        "stock,method,best_k,mean,std",
        summary.iter().map(|r| {
            format!("{},{},{},{},{}", r.stock, r.method, r.best_k, real(r.mean), real(r.std))
        }),
    )
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<SummaryRow>, _>>()
        .map_err(|e| Error::parse(path, e))
}

/// `method,mean,std,stocks`; MEAN/STD taken across stocks of best-k means.
pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    write_lines(
        path,
        "method,mean,std,stocks",
        rows.iter()
            .map(|r| format!("{},{},{},{}", r.method, real(r.mean), real(r.std), r.stocks)),
    )
}
