#![allow(dead_code)]

use sentivol::corpus::{build_vocabulary, featurize, NgramPolicy, Weighting};
use sentivol::indicators::{build_indicator_series, IndicatorParams, ScoredPost};
use sentivol::market::{align, JoinedRow, LabelMode, NormalizationMode, VolatilitySeries};
use sentivol::sentiment::{train_logistic, TrainConfig};
use sentivol::synth::{generate_synthetic, SyntheticData, SyntheticSpec};

pub struct SyntheticRun {
    pub data: SyntheticData,
    pub rows: Vec<JoinedRow>,
    pub volatility: VolatilitySeries,
}

/// Full in-memory chain on generated data with default settings.
pub fn synthetic_rows(spec: &SyntheticSpec) -> SyntheticRun {
    let data = generate_synthetic(spec).unwrap();
    let vocab = build_vocabulary(&data.posts, NgramPolicy::Uni, 1).unwrap();
    let labeled: Vec<_> = data.posts.iter().filter(|p| p.label.is_some()).cloned().collect();
    let model = train_logistic(&labeled, &vocab, &TrainConfig::with_seed(spec.seed)).unwrap();
    let scored: Vec<ScoredPost> = data
        .posts
        .iter()
        .map(|p| ScoredPost {
            id: p.id.clone(),
            date: p.date,
            signed_score: model.signed_score(&featurize(&p.tokens, &vocab, Weighting::Tf)).unwrap(),
        })
        .collect();
    let series = build_indicator_series(&scored, &data.trading_days, IndicatorParams::default()).unwrap();
    let mut volatility = VolatilitySeries::from_prices(&data.prices).unwrap();
    volatility
        .normalize(NormalizationMode::TrainFit, 0.8, LabelMode::Threshold)
        .unwrap();
    let rows = align(&volatility, &series).unwrap();
    SyntheticRun { data, rows, volatility }
}
