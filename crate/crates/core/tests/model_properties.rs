mod common;

use chrono::NaiveDate;
use proptest::prelude::*;

use sentivol::eval::{compare_models, summarize, sweep_k, Method, SweepConfig};
use sentivol::market::JoinedRow;
use sentivol::rnn::{build_windows, FeatureSet, RnnModel, RnnTrainConfig, WindowSample};
use sentivol::synth::SyntheticSpec;
use sentivol::Error;

fn rows(n: usize) -> Vec<JoinedRow> {
    let start = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
    (0..n)
        .map(|i| {
            let v = ((i * 7919) % 101) as f64 / 100.0;
            JoinedRow {
                date: start + chrono::Days::new(i as u64),
                n_pos: 1,
                n_neg: 1,
                bullishness: 0.0,
                volume: 2,
                z_bullishness: (i as f64).sin(),
                z_volume: (i as f64).cos(),
                v_norm: v,
                label: u8::from(v > 0.5),
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // |pre-activation| <= 3*2*0.5 + 25*0.5 + 0.5 = 16, so sigmoid stays strictly inside (0, 1)
    #[test]
    fn hidden_states_stay_inside_unit_interval(
        inputs in prop::collection::vec(-2.0f64..2.0, 3..45),
        seed in any::<u64>(),
    ) {
        let k = inputs.len() / 3;
        let sample = WindowSample::new(inputs[..3 * k].to_vec(), 3, 0.5, 1).unwrap();
        let forward = RnnModel::init(3, 25, 0.5, seed).forward(&sample).unwrap();
        prop_assert_eq!(forward.hidden_states.len(), 25 * k);
        prop_assert!(forward.hidden_states.iter().all(|&h| h > 0.0 && h < 1.0));
        prop_assert!(forward.prediction > 0.0 && forward.prediction < 1.0);
    }
}

#[test]
fn volatility_only_windows_ignore_indicators() {
    let base = rows(60);
    let mut noisy = base.clone();
    for (i, r) in noisy.iter_mut().enumerate() {
        r.z_bullishness = 100.0 * i as f64;
        r.z_volume = -3.0;
    }
    let a = build_windows(&base, 5, FeatureSet::VolatilityOnly).unwrap();
    let b = build_windows(&noisy, 5, FeatureSet::VolatilityOnly).unwrap();
    assert_eq!(a, b);
    let model = RnnModel::init(1, 25, 0.5, 4);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(model.predict(x).unwrap(), model.predict(y).unwrap());
    }
}

#[test]
fn training_is_reproducible() {
    let samples = build_windows(&rows(80), 4, FeatureSet::WithIndicators).unwrap();
    let cfg = RnnTrainConfig { k: 4, epochs: 30, seed: 12, ..Default::default() };
    let a = RnnModel::train(&samples, &cfg, 3).unwrap();
    let b = RnnModel::train(&samples, &cfg, 3).unwrap();
    assert_eq!(a, b);
    let other = RnnModel::train(&samples, &RnnTrainConfig { seed: 13, ..cfg }, 3).unwrap();
    assert_ne!(a, other);
}

#[test]
fn sweep_is_reproducible_and_independent_of_workers() {
    let run = common::synthetic_rows(&SyntheticSpec::default());
    let base = RnnTrainConfig { epochs: 5, ..Default::default() };
    let sweep = SweepConfig { k_min: 3, k_max: 5, replications: 3, workers: 1, ..Default::default() };
    let methods = [Method::RnnEmm, Method::Svm, Method::Rand];
    let a = sweep_k("S", &run.rows, &methods, &sweep, &base).unwrap();
    let b = sweep_k("S", &run.rows, &methods, &sweep, &base).unwrap();
    let c = sweep_k("S", &run.rows, &methods, &SweepConfig { workers: 3, ..sweep.clone() }, &base).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.len(), 9);
    for r in &a {
        assert_eq!(r.replications(), 3);
        let mean = r.accuracies.iter().sum::<f64>() / 3.0;
        assert!((r.mean - mean).abs() < 1e-12);
    }
    let shifted = sweep_k("S", &run.rows, &methods, &SweepConfig { base_seed: 1, ..sweep }, &base).unwrap();
    assert_ne!(a, shifted);
}

#[test]
fn sweep_rejects_short_series() {
    let err = sweep_k(
        "S",
        &rows(60),
        &[Method::Rand],
        &SweepConfig::default(),
        &RnnTrainConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::InsufficientData(_)));
}

#[test]
fn comparison_spans_stocks() {
    let run = common::synthetic_rows(&SyntheticSpec::default());
    let base = RnnTrainConfig { epochs: 3, ..Default::default() };
    let sweep = SweepConfig { k_min: 3, k_max: 4, replications: 2, workers: 1, ..Default::default() };
    let mut results = sweep_k("A", &run.rows, &[Method::Rand, Method::Mlp], &sweep, &base).unwrap();
    results.extend(sweep_k("B", &run.rows, &[Method::Rand, Method::Mlp], &SweepConfig { base_seed: 9, ..sweep }, &base).unwrap());
    let summary = summarize(&results);
    assert_eq!(summary.len(), 4);
    let table = compare_models(&summary, &[Method::Rand, Method::Mlp]).unwrap();
    assert_eq!(table.len(), 2);
    assert!(table.iter().all(|r| r.stocks == 2));
    let rand: Vec<f64> = summary.iter().filter(|r| r.method == Method::Rand).map(|r| r.mean).collect();
    assert!((table[0].mean - (rand[0] + rand[1]) / 2.0).abs() < 1e-12);
    assert!((table[0].std - (rand[0] - rand[1]).abs() / 2.0).abs() < 1e-12);
    assert!(matches!(
        compare_models(&summary, &[Method::Svm]),
        Err(Error::MissingCell { .. })
    ));
}
