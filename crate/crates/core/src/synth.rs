//! Seeded synthetic forum + price data in which each day's sentiment balance
//! drives the next day's price direction with a chosen probability.
//!
//! Per trading day `t` a mood (bull or bear) is drawn. Each post agrees with
//! the mood except with probability `noise`, and the contrarian share is kept
//! below one half so the day's true post balance always has the mood's sign.
//! Day `t + 1` moves in the mood's direction with probability `coupling` by a
//! magnitude drawn from `[0.5%, 4.5%]`. Post volume on day `t` grows with
//! `|V_t|` in proportion to `volume_coupling`. Monday posts may be dated on the
//! preceding weekend.

use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Polarity, Post};
use crate::error::{Error, Result};
use crate::io::{write_posts, write_prices};
use crate::market::PriceSeries;

const BULL_TERMS: &[&str] = &["rally", "buy", "bullish", "surge", "breakout", "upside", "long", "undervalued"];
const BEAR_TERMS: &[&str] = &["sell", "bearish", "crash", "dump", "short", "plunge", "downside", "overvalued"];
const FILLER_TERMS: &[&str] = &[
    "stock", "today", "market", "price", "volume", "board", "news", "chart", "think", "watch",
    "tomorrow", "shares", "open", "close", "report", "fund",
];

const MIN_MOVE: f64 = 0.005;
const MAX_MOVE: f64 = 0.045;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub days: usize,
    pub posts_per_day: usize,
    pub coupling: f64,
    pub noise: f64,
    pub seed: u64,
    pub stock: String,
    pub label_fraction: f64,
    pub volume_coupling: f64,
    pub start: NaiveDate,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            days: 250,
            posts_per_day: 40,
            coupling: 0.9,
            noise: 0.2,
            seed: 7,
            stock: "SYN001".into(),
            label_fraction: 0.3,
            volume_coupling: 0.5,
            start: NaiveDate::from_ymd_opt(2016, 1, 4).expect("valid date"),
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.days < 50 {
            return bad(format!("days = {} (need >= 50)", self.days));
        }
        if self.posts_per_day == 0 {
            return bad("posts_per_day must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return bad(format!("coupling {} outside [0, 1]", self.coupling));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return bad(format!("noise {} outside [0, 0.5)", self.noise));
        }
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return bad(format!("label_fraction {} outside (0, 1]", self.label_fraction));
        }
        if !(0.0..=1.0).contains(&self.volume_coupling) {
            return bad(format!("volume_coupling {} outside [0, 1]", self.volume_coupling));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub posts: Vec<Post>,
    /// Ground-truth polarity of every post, labeled or not.
    pub polarities: Vec<Polarity>,
    pub prices: PriceSeries,
    pub trading_days: Vec<NaiveDate>,
    /// +1 bull, -1 bear, per trading day.
    pub moods: Vec<i8>,
}

fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    start
        .iter_days()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(n)
        .collect()
}

fn pick<'a>(rng: &mut ChaCha8Rng, terms: &[&'a str]) -> &'a str {
    terms.choose(rng).expect("non-empty lexicon")
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let trading_days = weekdays_from(spec.start, spec.days);
    let magnitude = Uniform::new_inclusive(MIN_MOVE, MAX_MOVE);
    let mid = (MIN_MOVE + MAX_MOVE) / 2.0;
    let half = (MAX_MOVE - MIN_MOVE) / 2.0;

    let moods: Vec<i8> = (0..spec.days).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let mut moves = Vec::with_capacity(spec.days);
    for t in 0..spec.days {
        let direction = if t == 0 {
            if rng.gen::<bool>() { 1.0 } else { -1.0 }
        } else if rng.gen::<f64>() < spec.coupling {
            f64::from(moods[t - 1])
        } else {
            -f64::from(moods[t - 1])
        };
        moves.push(direction * magnitude.sample(&mut rng));
    }

    let mut closes = Vec::with_capacity(spec.days);
    let mut price = 100.0f64;
    for (t, &v) in moves.iter().enumerate() {
        if t > 0 {
            price *= 1.0 + v;
        }
        // stored at the precision the price file is written with
        closes.push((trading_days[t], (price * 1e4).round() / 1e4));
    }
    let prices = PriceSeries::new(closes)?;

    let mut posts = Vec::new();
    let mut polarities = Vec::new();
    for (t, &day) in trading_days.iter().enumerate() {
        let scale = 1.0 + spec.volume_coupling * (moves[t].abs() - mid) / half;
        let n = ((spec.posts_per_day as f64 * scale).round() as usize).max(1);
        let mut contrarian = (0..n).filter(|_| rng.gen::<f64>() < spec.noise).count();
        contrarian = contrarian.min((n - 1) / 2);
        let mood = if moods[t] > 0 { Polarity::Positive } else { Polarity::Negative };
        let flipped = match mood {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        };
        let mut day_polarities: Vec<Polarity> = (0..n)
            .map(|i| if i < contrarian { flipped } else { mood })
            .collect();
        day_polarities.shuffle(&mut rng);

        for (i, polarity) in day_polarities.into_iter().enumerate() {
            let lexicon = match polarity {
                Polarity::Positive => BULL_TERMS,
                Polarity::Negative => BEAR_TERMS,
            };
            let mut tokens: Vec<String> = (0..rng.gen_range(1..=2))
                .map(|_| pick(&mut rng, lexicon).to_string())
                .collect();
            tokens.extend((0..rng.gen_range(2..=5)).map(|_| pick(&mut rng, FILLER_TERMS).to_string()));
            tokens.shuffle(&mut rng);

            let back = if day.weekday() == Weekday::Mon { rng.gen_range(0..=2u64) } else { 0 };
            let date = day - Days::new(back);
            let label = (rng.gen::<f64>() < spec.label_fraction).then_some(polarity);
            posts.push(Post::new(format!("{}-{t}-{i}", spec.stock), &spec.stock, date, tokens, label)?);
            polarities.push(polarity);
        }
    }

    Ok(SyntheticData {
        posts,
        polarities,
        prices,
        trading_days,
        moods,
    })
}

/// Writes `posts.jsonl` and `prices.csv` into `dir` and returns their paths.
pub fn write_synthetic(spec: &SyntheticSpec, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let data = generate_synthetic(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let posts = dir.join("posts.jsonl");
    let prices = dir.join("prices.csv");
    write_posts(&data.posts, &posts)?;
    write_prices(&data.prices, &prices)?;
    Ok((posts, prices))
}
