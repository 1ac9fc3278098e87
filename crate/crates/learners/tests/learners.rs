use std::collections::BTreeMap;

use encdetect_learners::{threshold_scores, train, Algorithm, Matrix, ModelSpec, ScoreError, TrainError, TrainedModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two Gaussian-ish blobs separated along every axis.
fn blobs(n: usize, d: usize, gap: f64, seed: u64) -> (Matrix, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let label = (i % 2) as u8;
        let centre = if label == 1 { gap } else { 0.0 };
        rows.push((0..d).map(|_| centre + rng.random_range(-1.0..1.0)).collect());
        y.push(label);
    }
    (Matrix::unnamed(&rows), y)
}

fn fast(algorithm: Algorithm, seed: u64) -> ModelSpec {
    let spec = ModelSpec::with_defaults(algorithm, seed);
    match algorithm {
        Algorithm::Rf => spec.set("n_estimators", 25).unwrap(),
        Algorithm::Mlp => spec.set("max_epochs", 40).unwrap(),
        Algorithm::Xgb => spec.set("n_estimators", 20).unwrap(),
        _ => spec,
    }
}

fn accuracy(pred: &[u8], y: &[u8]) -> f64 {
    pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}

#[test]
fn knn_k1_recovers_training_labels() {
    let x = Matrix::unnamed(&[vec![0.0, 0.0], vec![0.1, 0.0], vec![5.0, 5.0], vec![5.0, 5.1]]);
    let y = [0, 0, 1, 1];
    let spec = ModelSpec::with_defaults(Algorithm::Knn, 0)
        .set("n_neighbors", 1)
        .unwrap();
    let m = train(&spec, &x, &y).unwrap();
    assert_eq!(m.predict(&x, 0.5).unwrap(), y);
}

/// Every tree of depth <= 2 whose thresholds sit between observed values,
/// with majority leaves; returns the best training accuracy found.
fn best_depth2_accuracy(rows: &[Vec<f64>], y: &[u8]) -> f64 {
    let d = rows[0].len();
    let mut cuts: Vec<(usize, f64)> = Vec::new();
    for f in 0..d {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            cuts.push((f, 0.5 * (w[0] + w[1])));
        }
    }
    let majority_hits = |idx: &[usize]| {
        let ones = idx.iter().filter(|&&i| y[i] == 1).count();
        ones.max(idx.len() - ones)
    };
    let all: Vec<usize> = (0..rows.len()).collect();
    let mut best = majority_hits(&all);
    for &(f, t) in &cuts {
        let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| rows[i][f] <= t);
        let side_best = |side: &[usize]| {
            let mut b = majority_hits(side);
            for &(f2, t2) in &cuts {
                let (a, c): (Vec<usize>, Vec<usize>) = side.iter().partition(|&&i| rows[i][f2] <= t2);
                b = b.max(majority_hits(&a) + majority_hits(&c));
            }
            b
        };
        best = best.max(side_best(&l) + side_best(&r));
    }
    best as f64 / rows.len() as f64
}

#[test]
fn cart_learns_xor_at_depth_two() {
    let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    let y = [0, 1, 1, 0];
    assert_eq!(best_depth2_accuracy(&rows, &y), 1.0);
    let x = Matrix::unnamed(&rows);
    let m = train(&ModelSpec::with_defaults(Algorithm::Cart, 0), &x, &y).unwrap();
    assert_eq!(m.predict(&x, 0.5).unwrap(), y);
    let encdetect_learners::Fitted::Tree(t) = &m.fitted else {
        panic!("CART fits a tree")
    };
    assert_eq!(t.depth(), 2);
}

#[test]
fn rf_is_deterministic_across_runs_and_thread_counts() {
    let (x, y) = blobs(120, 4, 1.0, 3);
    let (probe, _) = blobs(50, 4, 1.0, 4);
    let spec = ModelSpec::with_defaults(Algorithm::Rf, 17);
    let a = train(&spec, &x, &y).unwrap().score(&probe).unwrap();
    let b = train(&spec, &x, &y).unwrap().score(&probe).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = single.install(|| train(&spec, &x, &y).unwrap().score(&probe).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
    let other = train(&ModelSpec::with_defaults(Algorithm::Rf, 18), &x, &y)
        .unwrap()
        .score(&probe)
        .unwrap();
    assert_ne!(a, other);
}

#[test]
fn rf_unanimous_vote_scores_one() {
    let (x, y) = blobs(60, 2, 10.0, 5);
    let m = train(&ModelSpec::with_defaults(Algorithm::Rf, 1), &x, &y).unwrap();
    let probe = Matrix::unnamed(&[vec![10.0, 10.0], vec![0.0, 0.0]]);
    assert_eq!(m.score(&probe).unwrap(), vec![1.0, 0.0]);
}

#[test]
fn naive_bayes_symmetric_midpoint() {
    // Mirror-image classes around x = 2.
    let rows: Vec<Vec<f64>> = [0.0f64, 0.5, 1.0, 1.5, 2.5, 3.0, 3.5, 4.0]
        .iter()
        .map(|&v| vec![v, 1.0 - (v - 2.0).abs()])
        .collect();
    let y = [0, 0, 0, 0, 1, 1, 1, 1];
    let m = train(
        &ModelSpec::with_defaults(Algorithm::GaussianNb, 0),
        &Matrix::unnamed(&rows),
        &y,
    )
    .unwrap();
    let s = m.score(&Matrix::unnamed(&[vec![2.0, 0.0]])).unwrap()[0];
    assert!((s - 0.5).abs() <= 1e-6, "{s}");
}

#[test]
fn logistic_separates_linearly_separable_points() {
    // Labels from the sign of 2a - b + 0.3 with a margin, so the set is separable.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    while rows.len() < 20 {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let s = 2.0 * a - b + 0.3;
        if s.abs() < 0.2 {
            continue;
        }
        rows.push(vec![a, b]);
        y.push(u8::from(s > 0.0));
    }
    let m = train(
        &ModelSpec::with_defaults(Algorithm::Logistic, 0),
        &Matrix::unnamed(&rows),
        &y,
    )
    .unwrap();
    let scores = m.score(&Matrix::unnamed(&rows)).unwrap();
    let min_pos = scores
        .iter()
        .zip(&y)
        .filter(|(_, &t)| t == 1)
        .map(|(s, _)| *s)
        .fold(f64::INFINITY, f64::min);
    let max_neg = scores
        .iter()
        .zip(&y)
        .filter(|(_, &t)| t == 0)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(min_pos > max_neg, "{min_pos} vs {max_neg}");
    let encdetect_learners::Fitted::Logistic(l) = &m.fitted else {
        panic!()
    };
    assert!(l.converged);
}

#[test]
fn predict_threshold_boundary() {
    assert_eq!(threshold_scores(&[0.5, 0.49, 1.0, 0.0], 0.5), vec![1, 0, 1, 0]);
}

#[test]
fn predict_matches_thresholded_scores() {
    let (x, y) = blobs(80, 3, 0.5, 11);
    for a in Algorithm::ALL {
        let m = train(&fast(a, 2), &x, &y).unwrap();
        let scores = m.score(&x).unwrap();
        let pred = m.predict(&x, 0.5).unwrap();
        let by_hand: Vec<u8> = scores.iter().map(|&s| if s >= 0.5 { 1 } else { 0 }).collect();
        assert_eq!(accuracy(&pred, &y), accuracy(&by_hand, &y), "{a}");
    }
}

#[test]
fn every_algorithm_scores_in_unit_interval_and_repeats_bitwise() {
    let (x, y) = blobs(90, 3, 1.5, 21);
    let (probe, _) = blobs(30, 3, 1.5, 22);
    for a in Algorithm::ALL {
        let spec = fast(a, 5);
        let s1 = train(&spec, &x, &y).unwrap().score(&probe).unwrap();
        let s2 = train(&spec, &x, &y).unwrap().score(&probe).unwrap();
        assert!(s1.iter().all(|s| (0.0..=1.0).contains(s)), "{a}");
        let bits = |v: &[f64]| v.iter().map(|s| s.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&s1), bits(&s2), "{a}");
    }
}

#[test]
fn saved_models_round_trip() {
    let (x, y) = blobs(60, 3, 1.5, 31);
    for a in Algorithm::ALL {
        let m = train(&fast(a, 7), &x, &y).unwrap();
        let text = m.to_json().unwrap();
        let back = TrainedModel::from_json(&text).unwrap();
        assert_eq!(back.score(&x).unwrap(), m.score(&x).unwrap(), "{a}");
        assert_eq!(back.spec, m.spec);
    }
    let m = train(&fast(Algorithm::Linear, 0), &x, &y).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
    v["format_version"] = 99.into();
    assert!(TrainedModel::from_json(&v.to_string()).is_err());
    v.as_object_mut().unwrap().remove("format_version");
    assert!(TrainedModel::from_json(&v.to_string()).is_err());
}

#[test]
fn spec_rejects_unknown_keys_even_when_loaded() {
    let mut h = BTreeMap::new();
    h.insert("depth".to_string(), serde_json::Value::from(3));
    assert!(ModelSpec::new(Algorithm::Cart, h, 0).is_err());
    let text = r#"{"algorithm":"KNN","hyperparameters":{"k":3},"seed":1}"#;
    assert!(serde_json::from_str::<ModelSpec>(text).is_err());
    let text = r#"{"algorithm":"KNN","hyperparameters":{"n_neighbors":3},"seed":1}"#;
    let spec: ModelSpec = serde_json::from_str(text).unwrap();
    assert_eq!(spec.hyperparameters()["n_neighbors"], 3);
}

#[test]
fn training_preconditions() {
    let x = Matrix::unnamed(&[vec![1.0], vec![f64::NAN]]);
    assert_eq!(
        train(&fast(Algorithm::Cart, 0), &x, &[0, 1]).unwrap_err(),
        TrainError::NonFiniteInput { row: 1, col: 0 }
    );
    let x = Matrix::unnamed(&[vec![1.0], vec![2.0]]);
    assert!(matches!(
        train(&fast(Algorithm::Cart, 0), &x, &[0]),
        Err(TrainError::ShapeMismatch { .. })
    ));
    assert!(matches!(
        train(&fast(Algorithm::Rf, 0), &x, &[1, 1]),
        Err(TrainError::SingleClass(_))
    ));
    assert!(matches!(
        train(&fast(Algorithm::Knn, 0), &x, &[0, 2]),
        Err(TrainError::BadLabel { .. })
    ));
    let empty = Matrix::new(vec!["a".into()], 0, vec![]);
    assert_eq!(
        train(&fast(Algorithm::Knn, 0), &empty, &[]).unwrap_err(),
        TrainError::EmptyInput
    );

    let lin = train(&fast(Algorithm::Linear, 0), &x, &[1, 1]).unwrap();
    assert!(lin.score(&x).unwrap().iter().all(|&s| (s - 1.0).abs() < 1e-6));
}

#[test]
fn scoring_requires_identical_columns() {
    let x = Matrix::from_rows(vec!["a".into(), "b".into()], &[vec![0.0, 1.0], vec![1.0, 0.0]]);
    let m = train(&fast(Algorithm::Cart, 0), &x, &[0, 1]).unwrap();
    let swapped = x.select_columns(&[1, 0]);
    assert!(matches!(m.score(&swapped), Err(ScoreError::ColumnMismatch { .. })));
    assert!(m.score(&x).is_ok());
}

#[test]
fn boosting_training_loss_falls() {
    let (x, y) = blobs(100, 3, 0.7, 41);
    let m = train(&ModelSpec::with_defaults(Algorithm::Xgb, 0), &x, &y).unwrap();
    let encdetect_learners::Fitted::Boosted(b) = &m.fitted else {
        panic!()
    };
    assert_eq!(b.train_logloss.len(), 100);
    assert!(b.train_logloss.last().unwrap() <= &b.train_logloss[0]);
}

#[test]
fn linear_is_least_squares() {
    // y = x exactly on these points, so OLS recovers slope 1, intercept 0.
    let x = Matrix::unnamed(&[vec![0.0], vec![1.0], vec![0.0], vec![1.0]]);
    let m = train(&fast(Algorithm::Linear, 0), &x, &[0, 1, 0, 1]).unwrap();
    let s = m.score(&Matrix::unnamed(&[vec![0.25], vec![3.0], vec![-2.0]])).unwrap();
    assert!((s[0] - 0.25).abs() < 1e-9);
    assert_eq!(&s[1..], &[1.0, 0.0]);
    // duplicated column: singular Gram matrix handled by the ridge term
    let x2 = Matrix::unnamed(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]]);
    let m2 = train(&fast(Algorithm::Linear, 0), &x2, &[0, 1, 0, 1]).unwrap();
    let encdetect_learners::Fitted::Linear(l) = &m2.fitted else {
        panic!()
    };
    assert!(l.jittered);
    assert!((m2.score(&Matrix::unnamed(&[vec![0.5, 0.5]])).unwrap()[0] - 0.5).abs() < 1e-6);
}

#[test]
fn adaboost_and_mlp_fit_separable_blobs() {
    let (x, y) = blobs(100, 2, 3.0, 51);
    for a in [
        Algorithm::Adaboost,
        Algorithm::Mlp,
        Algorithm::C45,
        Algorithm::GaussianNb,
    ] {
        let m = train(&ModelSpec::with_defaults(a, 3), &x, &y).unwrap();
        assert!(accuracy(&m.predict(&x, 0.5).unwrap(), &y) >= 0.98, "{a}");
    }
}

fn consistent_rows() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u8>)> {
    prop::collection::vec((prop::collection::vec(-5i32..5, 3), 0u8..2), 2..40).prop_map(|raw| {
        let mut seen = std::collections::HashSet::new();
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (r, label) in raw {
            if seen.insert(r.clone()) {
                rows.push(r.iter().map(|&v| v as f64).collect());
                y.push(label);
            }
        }
        (rows, y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trees_fit_consistent_data_exactly((rows, y) in consistent_rows()) {
        prop_assume!(y.contains(&0) && y.contains(&1));
        let x = Matrix::unnamed(&rows);
        for a in [Algorithm::Cart, Algorithm::C45] {
            for variant in [None, Some("entropy")] {
                let spec = match variant {
                    Some(c) => ModelSpec::with_defaults(a, 0).set("criterion", c).unwrap(),
                    None => ModelSpec::with_defaults(a, 0),
                };
                let m = train(&spec, &x, &y).unwrap();
                prop_assert_eq!(m.predict(&x, 0.5).unwrap(), y.clone());
            }
        }
    }

    #[test]
    fn knn_and_nb_ignore_column_order(seed in 0u64..1000, perm_seed in 0u64..1000) {
        let (x, y) = blobs(40, 4, 0.8, seed);
        let (probe, _) = blobs(10, 4, 0.8, seed + 1);
        let mut order: Vec<usize> = (0..4).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        for i in (1..4).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        for a in [Algorithm::Knn, Algorithm::GaussianNb] {
            let spec = ModelSpec::with_defaults(a, 0);
            let s = train(&spec, &x, &y).unwrap().score(&probe).unwrap();
            let px = x.select_columns(&order);
            let sp = train(&spec, &px, &y).unwrap().score(&probe.select_columns(&order)).unwrap();
            for (u, v) in s.iter().zip(&sp) {
                prop_assert!((u - v).abs() <= 1e-12, "{} {} {}", a, u, v);
            }
        }
    }

    #[test]
    fn raising_threshold_never_raises_rates(
        scored in prop::collection::vec((0.0f64..1.0, 0u8..2), 1..60),
        t1 in 0.0f64..1.0,
        dt in 0.0f64..0.5,
    ) {
        let scores: Vec<f64> = scored.iter().map(|p| p.0).collect();
        let y: Vec<u8> = scored.iter().map(|p| p.1).collect();
        let rates = |t: f64| {
            let pred = threshold_scores(&scores, t);
            let tp = pred.iter().zip(&y).filter(|(p, t)| **p == 1 && **t == 1).count();
            let fp = pred.iter().zip(&y).filter(|(p, t)| **p == 1 && **t == 0).count();
            (tp, fp)
        };
        let (tp1, fp1) = rates(t1);
        let (tp2, fp2) = rates(t1 + dt);
        prop_assert!(tp2 <= tp1 && fp2 <= fp1);
    }
}
