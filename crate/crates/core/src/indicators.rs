//! Daily bullishness and post-volume indicators with windowed z-scores.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::real;

/// Smoothing constant for the continuous bullishness index.
pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_HALF_WIDTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// `l` days either side of `t`, excluding `t`. Uses future values.
    Centered,
    /// The `2l` days strictly before `t`.
    #[default]
    Trailing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BullishnessMode {
    /// Counts of positive and negative posts.
    Binary,
    /// Summed signed scores with epsilon smoothing.
    #[default]
    Continuous,
}

/// `ln((1 + n_pos) / (1 + n_neg))`.
pub fn bullishness_binary(n_pos: u64, n_neg: u64) -> f64 {
    // a difference of logs is exactly antisymmetric; a log of a ratio is not
    ((1 + n_pos) as f64).ln() - ((1 + n_neg) as f64).ln()
}

/// `ln((ε + s_pos) / (ε + |s_neg|))` with `s_pos >= 0`, `s_neg <= 0`.
pub fn bullishness_continuous(s_pos: f64, s_neg: f64, epsilon: f64) -> Result<f64> {
    if !(s_pos >= 0.0 && s_neg <= 0.0 && s_pos.is_finite() && s_neg.is_finite()) {
        return Err(Error::Domain(format!(
            "score sums must satisfy s_pos >= 0 >= s_neg, got {s_pos}, {s_neg}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon {epsilon} must be positive")));
    }
    Ok((epsilon + s_pos).ln() - (epsilon + s_neg.abs()).ln())
}

/// Index range of the normalization window for position `t`, `t` excluded.
fn window(len: usize, t: usize, half_width: usize, mode: WindowMode) -> (usize, usize, bool) {
    match mode {
        WindowMode::Centered => (
            t.saturating_sub(half_width),
            (t + half_width + 1).min(len),
            true,
        ),
        WindowMode::Trailing => (t.saturating_sub(2 * half_width), t, false),
    }
}

/// Z-score of `series[t]` against the mean and population standard deviation
/// of its window. Windows with fewer than two points or zero spread give 0.
pub fn zscore_window(series: &[f64], t: usize, half_width: usize, mode: WindowMode) -> Result<f64> {
    if t >= series.len() {
        return Err(Error::IndexOutOfRange {
            index: t,
            len: series.len(),
        });
    }
    let (lo, hi, skip_center) = window(series.len(), t, half_width, mode);
    let values: Vec<f64> = (lo..hi)
        .filter(|&i| !(skip_center && i == t))
        .map(|i| series[i])
        .collect();
    if values.len() < 2 {
        return Ok(0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    // relative guard: rounding in the mean of a flat window leaves ~1e-16 spread
    if sd <= 1e-12 * mean.abs().max(1.0) {
        return Ok(0.0);
    }
    Ok((series[t] - mean) / sd)
}

pub fn zscore_series(series: &[f64], half_width: usize, mode: WindowMode) -> Vec<f64> {
    (0..series.len())
        .map(|t| zscore_window(series, t, half_width, mode).expect("index in range"))
        .collect()
}

/// One post after scoring: its date and logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPost {
    pub id: String,
    pub date: NaiveDate,
    pub signed_score: f64,
}

impl ScoredPost {
    /// Classified positive exactly when the sigmoid score exceeds 0.5.
    pub fn is_positive(&self) -> bool {
        self.signed_score > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyAggregate {
    pub date: NaiveDate,
    pub n_pos: u64,
    pub n_neg: u64,
    pub s_pos: f64,
    pub s_neg: f64,
}

impl DailyAggregate {
    fn empty(date: NaiveDate) -> Self {
        Self {
            date,
            n_pos: 0,
            n_neg: 0,
            s_pos: 0.0,
            s_neg: 0.0,
        }
    }

    pub fn volume(&self) -> u64 {
        self.n_pos + self.n_neg
    }

    fn add(&mut self, post: &ScoredPost) {
        if post.is_positive() {
            self.n_pos += 1;
            self.s_pos += post.signed_score;
        } else {
            self.n_neg += 1;
            self.s_neg += post.signed_score;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorParams {
    pub epsilon: f64,
    pub half_width: usize,
    pub window: WindowMode,
    pub bullishness: BullishnessMode,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            half_width: DEFAULT_HALF_WIDTH,
            window: WindowMode::Trailing,
            bullishness: BullishnessMode::Continuous,
        }
    }
}

/// One trading day of indicators; mirrors a row of the indicator CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRow {
    pub date: NaiveDate,
    pub n_pos: u64,
    pub n_neg: u64,
    #[serde(rename = "B")]
    pub bullishness: f64,
    #[serde(rename = "N")]
    pub volume: u64,
    #[serde(rename = "Z_B")]
    pub z_bullishness: f64,
    #[serde(rename = "Z_N")]
    pub z_volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    pub params: IndicatorParams,
    pub rows: Vec<IndicatorRow>,
}

/// Buckets scored posts onto `trading_days`. A post dated on a non-trading
/// day counts toward the next trading day; posts after the last trading day
/// are ignored.
pub fn aggregate_by_day(posts: &[ScoredPost], trading_days: &[NaiveDate]) -> Result<Vec<DailyAggregate>> {
    if trading_days.is_empty() {
        return Err(Error::EmptyCalendar);
    }
    if trading_days.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("trading days must be strictly increasing".into()));
    }
    let mut aggregates: Vec<DailyAggregate> =
        trading_days.iter().map(|&d| DailyAggregate::empty(d)).collect();
    for post in posts {
        let slot = trading_days.partition_point(|&d| d < post.date);
        if let Some(agg) = aggregates.get_mut(slot) {
            agg.add(post);
        }
    }
    Ok(aggregates)
}

/// Daily B and N from [`aggregate_by_day`], plus their windowed z-scores.
pub fn build_indicator_series(
    posts: &[ScoredPost],
    trading_days: &[NaiveDate],
    params: IndicatorParams,
) -> Result<IndicatorSeries> {
    if params.half_width == 0 {
        return Err(Error::Config("window half-width must be >= 1".into()));
    }
    if params.epsilon.is_nan() || params.epsilon <= 0.0 {
        return Err(Error::Config(format!("epsilon {} must be positive", params.epsilon)));
    }
    let aggregates = aggregate_by_day(posts, trading_days)?;
    let bullishness = aggregates
        .iter()
        .map(|a| match params.bullishness {
            BullishnessMode::Binary => Ok(bullishness_binary(a.n_pos, a.n_neg)),
            BullishnessMode::Continuous => bullishness_continuous(a.s_pos, a.s_neg, params.epsilon),
        })
        .collect::<Result<Vec<f64>>>()?;
    let volume: Vec<f64> = aggregates.iter().map(|a| a.volume() as f64).collect();
    let z_b = zscore_series(&bullishness, params.half_width, params.window);
    let z_n = zscore_series(&volume, params.half_width, params.window);

    let rows = aggregates
        .iter()
        .enumerate()
        .map(|(t, a)| IndicatorRow {
            date: a.date,
            n_pos: a.n_pos,
            n_neg: a.n_neg,
            bullishness: bullishness[t],
            volume: a.volume(),
            z_bullishness: z_b[t],
            z_volume: z_n[t],
        })
        .collect();
    Ok(IndicatorSeries { params, rows })
}

impl IndicatorSeries {
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.rows.iter().map(|r| r.date).collect()
    }

    pub fn by_date(&self) -> BTreeMap<NaiveDate, &IndicatorRow> {
        self.rows.iter().map(|r| (r.date, r)).collect()
    }

    /// CSV with header `date,n_pos,n_neg,B,N,Z_B,Z_N`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "date,n_pos,n_neg,B,N,Z_B,Z_N")?;
            for r in &self.rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.date,
                    r.n_pos,
                    r.n_neg,
                    real(r.bullishness),
                    r.volume,
                    real(r.z_bullishness),
                    real(r.z_volume)
                )?;
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    /// Reads an indicator CSV; `params` records how it was produced.
    pub fn read_csv(path: &Path, params: IndicatorParams) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<IndicatorRow>, _>>()
            .map_err(|e| Error::parse(path, e))?;
        if rows.windows(2).any(|w| w[0].date >= w[1].date) {
            return Err(Error::parse(path, "dates must be strictly increasing"));
        }
        Ok(Self { params, rows })
    }
}
