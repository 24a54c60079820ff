mod common;

use common::{matrix_and_labels, xor_fixture};
use fep_core::features::Label;
use fep_core::learner::{
    logistic_loss_and_gradient, sigmoid, train, train_with_history, BoostedEnsemble, BoostingConfig,
};
use fep_core::Error;
use proptest::prelude::*;

fn accuracy(model: &BoostedEnsemble, x: &fep_core::features::FeatureMatrix, y: &[f64]) -> f64 {
    let preds = model.predict(x).unwrap();
    let hits = preds
        .iter()
        .zip(y)
        .filter(|(p, &t)| (p.predicted_class == Label::Success) == (t == 1.0))
        .count();
    hits as f64 / y.len() as f64
}

#[test]
fn xor_is_learned() {
    let (values, targets) = xor_fixture();
    let (x, y) = matrix_and_labels(values, 2, &targets);
    let model = train(&x, &y, &BoostingConfig::default()).unwrap();
    assert!(accuracy(&model, &x, &targets) >= 0.95);
}

#[test]
fn single_class_is_confident() {
    let values: Vec<f64> = (0..40).map(|i| i as f64).collect();
    let targets = vec![1.0; 40];
    let (x, y) = matrix_and_labels(values, 1, &targets);
    let model = train(&x, &y, &BoostingConfig::default()).unwrap();
    assert!(model
        .predict(&x)
        .unwrap()
        .iter()
        .all(|p| p.p_success > 0.95));
}

#[test]
fn split_search_threading_does_not_change_trees() {
    let (values, targets) = xor_fixture();
    let (x, y) = matrix_and_labels(values, 2, &targets);
    let base = BoostingConfig {
        subsample: 0.7,
        seed: 11,
        ..BoostingConfig::default()
    };
    let serial = train(&x, &y, &base).unwrap();
    let parallel = train(
        &x,
        &y,
        &BoostingConfig {
            parallel_splits: true,
            ..base.clone()
        },
    )
    .unwrap();
    assert_eq!(serial.trees.len(), parallel.trees.len());
    for (a, b) in serial.trees.iter().zip(&parallel.trees) {
        assert_eq!(a, b);
    }
    assert_eq!(serial.to_json(), train(&x, &y, &base).unwrap().to_json());
}

#[test]
fn missing_values_are_routed() {
    let mut values = Vec::new();
    let mut targets = Vec::new();
    for i in 0..60 {
        let v = if i % 3 == 0 { f64::NAN } else { i as f64 };
        values.push(v);
        targets.push(if v.is_nan() || i > 30 { 1.0 } else { 0.0 });
    }
    let (x, y) = matrix_and_labels(values, 1, &targets);
    let model = train(&x, &y, &BoostingConfig::default()).unwrap();
    let preds = model.predict(&x).unwrap();
    assert!(preds.iter().all(|p| p.p_success.is_finite()));
    assert!(accuracy(&model, &x, &targets) >= 0.95);
}

#[test]
fn model_file_round_trip_and_format_guard() {
    let (values, targets) = xor_fixture();
    let (x, y) = matrix_and_labels(values, 2, &targets);
    let model = train(
        &x,
        &y,
        &BoostingConfig {
            n_rounds: 10,
            ..BoostingConfig::default()
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model.write(&path).unwrap();
    assert_eq!(BoostedEnsemble::read(&path).unwrap(), model);
    let bumped = model.to_json().replace("\"version\": 1", "\"version\": 2");
    assert!(matches!(
        BoostedEnsemble::from_json(&bumped),
        Err(Error::FormatVersion { .. })
    ));
    assert!(matches!(
        BoostedEnsemble::from_json("{"),
        Err(Error::Decode(_))
    ));
}

#[test]
fn vocabulary_mismatch_is_reported_both_ways() {
    let (values, targets) = xor_fixture();
    let (x, y) = matrix_and_labels(values.clone(), 2, &targets);
    let model = train(
        &x,
        &y,
        &BoostingConfig {
            n_rounds: 3,
            ..BoostingConfig::default()
        },
    )
    .unwrap();
    let mut other = x.clone();
    other.feature_names[1] = "g1".into();
    let msg = model.predict(&other).unwrap_err().to_string();
    assert!(msg.contains("f1") && msg.contains("g1"), "{msg}");
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    for &y in &[0.0, 1.0] {
        for &f in &[-4.0, -0.3, 0.0, 1.7, 6.0] {
            let loss = |z: f64| logistic_loss_and_gradient(sigmoid(z), y).loss;
            let h = 1e-5;
            let fd = (loss(f + h) - loss(f - h)) / (2.0 * h);
            let g = logistic_loss_and_gradient(sigmoid(f), y).gradient;
            assert!((fd - g).abs() <= 1e-6 * g.abs().max(1e-3), "y={y} f={f}");
        }
    }
}

fn random_problem() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (5usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-50.0f64..50.0, n * 3),
            prop::collection::vec(prop::bool::ANY, n),
        )
            .prop_map(|(v, ys)| {
                (
                    v,
                    ys.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect(),
                )
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn training_loss_never_increases((values, targets) in random_problem()) {
        let (x, y) = matrix_and_labels(values, 3, &targets);
        let cfg = BoostingConfig { n_rounds: 25, ..BoostingConfig::default() };
        let (_, history) = train_with_history(&x, &y, &cfg).unwrap();
        prop_assert_eq!(history.len(), 26);
        for w in history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn monotone_rescaling_keeps_predictions(
        (values, targets) in random_problem(),
        scale in 0.01f64..100.0,
        shift in -10.0f64..10.0,
    ) {
        let (x, y) = matrix_and_labels(values.clone(), 3, &targets);
        let warped: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(k, &v)| match k % 3 {
                0 => v * scale + shift,
                1 => v.powi(3),
                _ => v,
            })
            .collect();
        let (xw, yw) = matrix_and_labels(warped, 3, &targets);
        let cfg = BoostingConfig { n_rounds: 15, ..BoostingConfig::default() };
        let a = train(&x, &y, &cfg).unwrap().predict(&x).unwrap();
        let b = train(&xw, &yw, &cfg).unwrap().predict(&xw).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p.p_success - q.p_success).abs() < 1e-12);
        }
    }

    #[test]
    fn confidence_lies_in_upper_half((values, targets) in random_problem()) {
        let (x, y) = matrix_and_labels(values, 3, &targets);
        let cfg = BoostingConfig { n_rounds: 10, ..BoostingConfig::default() };
        for p in train(&x, &y, &cfg).unwrap().predict(&x).unwrap() {
            prop_assert!((0.5..=1.0).contains(&p.confidence));
            prop_assert!((0.0..=1.0).contains(&p.p_success));
        }
    }
}
