use std::collections::HashSet;

use encdetect_core::dataset::{stratified_kfold, Dataset, Label};
use encdetect_core::features::FeatureSetName;
use encdetect_eval::metrics::{roc_points, trapezoid_area};
use encdetect_eval::render::{cross_csv, cross_markdown, grid_csv, grid_markdown, roc_csv, TABLE_HEADER};
use encdetect_eval::synthetic::{concat, Synthetic};
use encdetect_eval::*;
use encdetect_learners::{Algorithm, ModelSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All positive/negative pairs, ties half.
fn pair_oracle(scores: &[f64], y: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<u8>) {
    let n = rng.random_range(2..=200);
    // coarse grid so ties are common
    let levels = rng.random_range(2..50);
    let mut y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    y[0] = 0;
    y[1] = 1;
    let s = (0..n)
        .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
        .collect();
    (s, y)
}

#[test]
fn auc_matches_pair_oracle_and_flip_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (s, y) = random_instance(&mut rng);
        let a = roc_auc(&s, &y).unwrap();
        assert!((a - pair_oracle(&s, &y)).abs() <= 1e-12);
        let flipped: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        assert!((a + roc_auc(&s, &flipped).unwrap() - 1.0).abs() <= 1e-12);
        assert!((trapezoid_area(&roc_points(&s, &y).unwrap()) - a).abs() <= 1e-12);
    }
}

#[test]
fn confusion_matches_tally_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
    let p: Vec<u8> = (0..10_000).map(|_| rng.random_range(0..2)).collect();
    let c = confusion(&t, &p).unwrap();
    let count = |a: u8, b: u8| t.iter().zip(&p).filter(|(x, y)| **x == a && **y == b).count() as u64;
    assert_eq!(
        (c.tp, c.fp, c.tn, c.fn_),
        (count(1, 1), count(0, 1), count(0, 0), count(1, 0))
    );
    assert_eq!(c.total(), 10_000);
}

proptest! {
    #[test]
    fn metrics_follow_formulas(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
        prop_assume!(tp + fp + tn + fn_ > 0);
        let m = metrics(&ConfusionCounts { tp, fp, tn, fn_ }).unwrap();
        prop_assert_eq!(m.accuracy, (tp + tn) as f64 / (tp + fp + tn + fn_) as f64);
        prop_assert_eq!(m.tpr, if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 });
        prop_assert_eq!(m.fpr, if fp + tn == 0 { 0.0 } else { fp as f64 / (fp + tn) as f64 });
    }

    #[test]
    fn auc_ignores_increasing_transforms(pairs in prop::collection::vec((0.0f64..1.0, 0u8..2), 2..80)) {
        let s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        prop_assume!(y.contains(&0) && y.contains(&1));
        let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() + 7.0).collect();
        prop_assert_eq!(roc_auc(&s, &y).unwrap(), roc_auc(&t, &y).unwrap());
    }
}

fn separable(rows: usize, seed: u64) -> Dataset {
    let mut g = Synthetic::new(rows, "synthetic", seed);
    g.separation = 2.0;
    g.generate()
}

fn noise(rows: usize, seed: u64) -> Dataset {
    let mut g = Synthetic::new(rows, "synthetic", seed);
    g.random_labels = true;
    g.generate()
}

#[test]
fn logistic_on_separable_full_set_is_perfect() {
    let data = separable(120, 3);
    let plan = stratified_kfold(&data.labels(), 5, 9).unwrap();
    let r = run_cv(
        &ModelSpec::with_defaults(Algorithm::Logistic, 1),
        &data,
        FeatureSetName::Full,
        &plan,
    )
    .unwrap();
    assert_eq!(r.mean.accuracy, 1.0);
    assert_eq!(r.mean.fpr, 0.0);
    assert_eq!(r.folds.len(), 5);
    assert_eq!(r.std.accuracy, 0.0);
}

#[test]
fn shuffled_labels_give_chance_auc() {
    let data = noise(300, 4);
    let plan = stratified_kfold(&data.labels(), 5, 9).unwrap();
    let r = run_cv(
        &ModelSpec::with_defaults(Algorithm::Cart, 1),
        &data,
        FeatureSetName::Fos,
        &plan,
    )
    .unwrap();
    assert!((0.4..=0.6).contains(&r.mean.roc_auc), "{}", r.mean.roc_auc);
}

#[test]
fn cv_rerun_is_identical_and_folds_never_share_sessions() {
    let data = noise(100, 5);
    let plan = stratified_kfold(&data.labels(), 5, 3).unwrap();
    let spec = ModelSpec::with_defaults(Algorithm::Rf, 2)
        .set("n_estimators", 20)
        .unwrap();
    let (a, scores) = run_cv_detailed(&spec, &data, FeatureSetName::Top10, &plan).unwrap();
    let b = run_cv(&spec, &data, FeatureSetName::Top10, &plan).unwrap();
    assert_eq!(a, b);
    for f in 0..5 {
        let train: HashSet<&str> = plan
            .train_indices(f)
            .iter()
            .map(|&i| data.rows[i].session_id.as_str())
            .collect();
        assert!(plan
            .test_indices(f)
            .iter()
            .all(|&i| !train.contains(data.rows[i].session_id.as_str())));
    }
    assert_eq!(a.columns.len(), 10);
    let csv = roc_csv(&scores).unwrap();
    assert!(csv.starts_with("fold,threshold,fpr,tpr\n0,inf,0,0\n"));
    for m in [a.mean, a.std] {
        for v in [m.accuracy, m.roc_auc, m.fpr, m.tpr] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
    assert!(a.std.accuracy <= 0.5);
}

#[test]
fn duplicate_session_ids_across_folds_are_rejected() {
    let mut data = noise(40, 6);
    let id = data.rows[0].session_id.clone();
    for r in data.rows.iter_mut().step_by(2) {
        r.session_id = id.clone();
    }
    let plan = stratified_kfold(&data.labels(), 5, 3).unwrap();
    let r = run_cv(
        &ModelSpec::with_defaults(Algorithm::GaussianNb, 0),
        &data,
        FeatureSetName::Fos,
        &plan,
    );
    assert!(matches!(r, Err(EvalError::SharedSession(_))));
}

#[test]
fn missing_set_columns_reported() {
    let mut data = noise(20, 7);
    data.columns[0] = "renamed".into();
    let cols = data.columns.clone();
    let missing = FeatureSetName::NUMERIC
        .iter()
        .find(|s| set_column_indices(**s, &cols).is_err());
    assert!(missing.is_some());
}

fn source(name: &str, offset: f64, seed: u64) -> Dataset {
    let mut g = Synthetic::new(160, name, seed);
    g.separation = 0.6;
    g.offset = offset;
    g.generate()
}

#[test]
fn cross_dataset_identical_sources_match_cv() {
    let data = concat(&[source("a", 0.0, 1), source("b", 0.0, 2)]);
    let spec = ModelSpec::with_defaults(Algorithm::Logistic, 0);
    let plan = stratified_kfold(&data.labels(), 5, 1).unwrap();
    let cv = run_cv(&spec, &data, FeatureSetName::Fos, &plan).unwrap();
    let reports = run_cross_dataset(&spec, &data, FeatureSetName::Fos, 5).unwrap();
    assert_eq!(reports.len(), 2);
    for r in &reports {
        assert_eq!(r.cells.len(), 2);
        for c in &r.cells {
            assert!((c.metrics.accuracy - cv.mean.accuracy).abs() <= 0.05, "{:?}", c);
        }
    }
    assert_eq!(cross_markdown(&reports).lines().count(), 4);
    assert_eq!(cross_csv(&reports).lines().count(), 5);
}

#[test]
fn cross_dataset_shifted_sources_degrade() {
    let data = concat(&[source("a", 0.0, 1), source("b", 4.0, 2)]);
    let spec = ModelSpec::with_defaults(Algorithm::Rf, 0)
        .set("n_estimators", 50)
        .unwrap();
    let plan = stratified_kfold(&data.labels(), 5, 1).unwrap();
    let cv = run_cv(&spec, &data, FeatureSetName::Fos, &plan).unwrap();
    let reports = run_cross_dataset(&spec, &data, FeatureSetName::Fos, 5).unwrap();
    for r in &reports {
        for c in &r.cells {
            assert!(c.metrics.roc_auc < cv.mean.roc_auc - 0.15);
        }
    }
}

#[test]
fn cross_dataset_needs_two_usable_sources() {
    let data = source("only", 0.0, 1);
    let spec = ModelSpec::with_defaults(Algorithm::Rf, 0);
    assert!(matches!(
        run_cross_dataset(&spec, &data, FeatureSetName::Fos, 1),
        Err(EvalError::SingleSource(_))
    ));
    let mut other = source("other", 0.0, 2);
    other.rows.retain(|r| r.label == Label::Malicious);
    let data = concat(&[data, other]);
    assert!(matches!(
        run_cross_dataset(&spec, &data, FeatureSetName::Fos, 1),
        Err(EvalError::SourceSingleClass(_))
    ));
}

fn light_grid(seed: u64) -> GridConfig {
    let mut cfg = GridConfig::full(seed);
    let mut set = |a: Algorithm, k: &str, v: u64| {
        cfg.hyperparameters.entry(a).or_default().insert(k.into(), v.into());
    };
    set(Algorithm::Rf, "n_estimators", 30);
    set(Algorithm::Mlp, "max_epochs", 30);
    set(Algorithm::Xgb, "n_estimators", 20);
    cfg
}

#[test]
fn grid_shape_rendering_and_schedule_independence() {
    let data = noise(200, 8);
    let cfg = light_grid(11);
    let reports = experiment_grid(&data, &cfg).unwrap();
    assert_eq!(reports.len(), 50);
    for r in &reports {
        for v in [r.mean.accuracy, r.mean.roc_auc, r.mean.fpr, r.mean.tpr, r.std.accuracy] {
            assert!(v.is_finite());
        }
    }
    let md = grid_markdown(&reports);
    assert_eq!(md.matches("### ").count(), 5);
    assert!(md.contains("| Algorithm | accuracy | STD | roc-auc | STD | FPR | STD | TPR | STD |"));
    assert_eq!(
        TABLE_HEADER,
        ["accuracy", "STD", "roc-auc", "STD", "FPR", "STD", "TPR", "STD"]
    );
    assert_eq!(grid_csv(&reports).lines().count(), 51);

    let mut seq = cfg.clone();
    seq.schedule = Schedule::Sequential;
    let again = experiment_grid(&data, &seq).unwrap();
    assert_eq!(grid_csv(&again), grid_csv(&reports));
    assert_eq!(grid_markdown(&again), md);
    assert_eq!(again, reports);
}

#[test]
fn fos_and_fots_compared_on_joined_sessions() {
    let feats = separable(60, 9);
    let mut tls = Dataset::new(
        encdetect_core::tls_features::FOTS_FEATURES
            .iter()
            .map(|s| s.to_string())
            .collect(),
        feats.catalog_version.clone(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // every other session has TLS rows; FOTS columns carry no signal
    for r in feats
        .rows
        .iter()
        .step_by(2)
        .chain(feats.rows.iter().skip(1).step_by(2))
        .take(40)
    {
        let mut row = r.clone();
        row.values = (0..tls.columns.len()).map(|_| rng.random::<f64>()).collect();
        tls.rows.push(row);
    }
    let joined = join_on_session(&feats, &tls).unwrap();
    assert_eq!(joined.len(), 40);
    let mut cfg = GridConfig::full(1);
    cfg.algorithms = vec![Algorithm::GaussianNb, Algorithm::Cart];
    let reports: Vec<EvalReport> = fos_vs_fots(&feats, &tls, &cfg)
        .unwrap()
        .into_iter()
        .map(|(r, _)| r)
        .collect();
    assert_eq!(reports.len(), 4);
    assert_eq!(reports[0].feature_set, FeatureSetName::Fos);
    assert_eq!(reports[2].feature_set, FeatureSetName::Fots);
    assert_eq!(reports[2].columns.len(), 22);
    assert!(reports[0].mean.roc_auc > reports[2].mean.roc_auc);

    let mut bad = tls.clone();
    bad.rows[0].label = match bad.rows[0].label {
        Label::Malicious => Label::Legitimate,
        Label::Legitimate => Label::Malicious,
    };
    assert!(matches!(join_on_session(&feats, &bad), Err(EvalError::JoinConflict(_))));
}
