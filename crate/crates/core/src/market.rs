//! Closing prices to volatility, normalized volatility and direction labels,
//! and the date join with the indicator series.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::real;
use crate::indicators::IndicatorSeries;

/// Daily price-limit: relative moves are clamped to ±10%.
pub const PRICE_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// Min-max range fitted on the leading training fraction only.
    #[default]
    TrainFit,
    /// Range fitted on the whole series (leaks test statistics).
    WholeSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// `F = 1` when normalized volatility exceeds 0.5.
    #[default]
    Threshold,
    /// `F = 1` when the raw price change is positive.
    Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    points: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    /// Sorts by date; rejects duplicate dates and non-positive closes.
    pub fn new(mut points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        points.sort_by_key(|&(d, _)| d);
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDate(w[0].0));
        }
        if let Some(&(_, p)) = points.iter().find(|&&(_, p)| !(p > 0.0 && p.is_finite())) {
            return Err(Error::NonPositivePrice(p));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|&(d, _)| d).collect()
    }
}

/// Relative close-to-close change, clamped to the ±10% price limit.
pub fn volatility(p_t: f64, p_prev: f64) -> Result<f64> {
    for p in [p_t, p_prev] {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::NonPositivePrice(p));
        }
    }
    Ok(((p_t - p_prev) / p_prev).clamp(-PRICE_LIMIT, PRICE_LIMIT))
}

/// Observed extrema of `values`.
pub fn fit_minmax(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::DegenerateRange(values.first().copied().unwrap_or(f64::NAN)));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return Err(Error::DegenerateRange(min));
    }
    Ok((min, max))
}

/// `(v - min) / (max - min)` clamped to `[0, 1]`.
pub fn apply_minmax(v: f64, min: f64, max: f64) -> Result<f64> {
    if max <= min {
        return Err(Error::DegenerateRange(min));
    }
    Ok(((v - min) / (max - min)).clamp(0.0, 1.0))
}

/// Direction label: 1 only when the normalized value exceeds 0.5.
pub fn binarize(v_norm: f64) -> u8 {
    u8::from(v_norm > 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityPoint {
    pub date: NaiveDate,
    pub v: f64,
    pub v_norm: Option<f64>,
    pub label: Option<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolatilitySeries {
    pub points: Vec<VolatilityPoint>,
    pub range: Option<(f64, f64)>,
}

impl VolatilitySeries {
    /// One point per day after the first; the first day has no previous close.
    pub fn from_prices(prices: &PriceSeries) -> Result<Self> {
        let points = prices
            .points()
            .windows(2)
            .map(|w| {
                Ok(VolatilityPoint {
                    date: w[1].0,
                    v: volatility(w[1].1, w[0].1)?,
                    v_norm: None,
                    label: None,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points, range: None })
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.v).collect()
    }

    /// Fits the min-max range (on the leading `train_fraction` of points under
    /// `TrainFit`) and fills in normalized values and labels.
    pub fn normalize(
        &mut self,
        mode: NormalizationMode,
        train_fraction: f64,
        labels: LabelMode,
    ) -> Result<()> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split fraction {train_fraction} must lie in (0, 1)"
            )));
        }
        let values = self.values();
        let fit_on = match mode {
            NormalizationMode::WholeSeries => &values[..],
            NormalizationMode::TrainFit => {
                let n = ((values.len() as f64) * train_fraction).floor() as usize;
                &values[..n.max(2).min(values.len())]
            }
        };
        let (min, max) = fit_minmax(fit_on)?;
        for p in &mut self.points {
            let v_norm = apply_minmax(p.v, min, max)?;
            p.v_norm = Some(v_norm);
            p.label = Some(match labels {
                LabelMode::Threshold => binarize(v_norm),
                LabelMode::Sign => u8::from(p.v > 0.0),
            });
        }
        self.range = Some((min, max));
        Ok(())
    }
}

/// One aligned trading day: market state plus sentiment indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinedRow {
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
    pub v_norm: f64,
    #[serde(rename = "F")]
    pub label: u8,
}

/// Inner join on date, chronological.
pub fn align(vol: &VolatilitySeries, ind: &IndicatorSeries) -> Result<Vec<JoinedRow>> {
    if vol.points.is_empty() || ind.rows.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let by_date = ind.by_date();
    let mut rows = Vec::new();
    for p in &vol.points {
        let Some(r) = by_date.get(&p.date) else { continue };
        let (Some(v_norm), Some(label)) = (p.v_norm, p.label) else {
            return Err(Error::Domain("volatility series is not normalized".into()));
        };
        rows.push(JoinedRow {
            date: p.date,
            n_pos: r.n_pos,
            n_neg: r.n_neg,
            bullishness: r.bullishness,
            volume: r.volume,
            z_bullishness: r.z_bullishness,
            z_volume: r.z_volume,
            v_norm,
            label,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(rows)
}

pub const JOINED_HEADER: &str = "date,n_pos,n_neg,B,N,Z_B,Z_N,v_norm,F";

pub fn write_joined_csv(rows: &[JoinedRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "{JOINED_HEADER}")?;
        for r in rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.date,
                r.n_pos,
                r.n_neg,
                real(r.bullishness),
                r.volume,
                real(r.z_bullishness),
                real(r.z_volume),
                real(r.v_norm),
                r.label
            )?;
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_joined_csv(path: &Path) -> Result<Vec<JoinedRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<JoinedRow>, _>>()
        .map_err(|e| Error::parse(path, e))?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}
