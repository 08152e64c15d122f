mod common;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stormpanel_core::predict::*;
use stormpanel_core::Sector;

fn spec(p: usize) -> FeatureSpec {
    let names = [
        "max_wind",
        "precip3d",
        "trans_speed",
        "min_distance",
        "impact_doy",
        "entity_lat",
        "entity_lon",
    ];
    FeatureSpec::new(names[..p].iter().map(|s| s.to_string()).collect(), "delta_service_m1").unwrap()
}

fn interaction_benchmark(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut x = DMatrix::zeros(n, 3);
    let mut y = Vec::with_capacity(n);
    for r in 0..n {
        let w: f64 = rng.random_range(30.0..150.0);
        let p: f64 = rng.random_range(0.0..300.0);
        x[(r, 0)] = w;
        x[(r, 1)] = p;
        x[(r, 2)] = rng.random_range(0.0..30.0);
        let hit = if w > 96.0 && p > 150.0 { -0.1 } else { 0.0 };
        y.push(hit + noise.sample(&mut rng));
    }
    Dataset::from_arrays(spec(3), x, y).unwrap()
}

fn holdout_r2(ds: &Dataset, kind: &ModelKind) -> f64 {
    let cut = ds.len() * 4 / 5;
    let train = ds.subset(&(0..cut).collect::<Vec<_>>());
    let test = ds.subset(&(cut..ds.len()).collect::<Vec<_>>());
    let p = Predictor::train(&train, kind).unwrap();
    r_squared(&test.y, &p.predict_raw(&test.x)).unwrap()
}

#[test]
fn forest_beats_linear_on_interaction() {
    let t0 = Instant::now();
    let ds = interaction_benchmark(2024, 5000);
    let rf = holdout_r2(&ds, &ModelKind::Forest(ForestParams::default()));
    let lr = holdout_r2(&ds, &ModelKind::Mlr);
    assert!(rf - lr >= 0.15, "rf {rf} lr {lr}");
    assert!(t0.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn step_function_learned() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 600;
    let x = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
    let y: Vec<f64> = (0..n).map(|r| if x[(r, 0)] > 0.0 { 1.0 } else { 0.0 }).collect();
    let ds = Dataset::from_arrays(spec(2), x, y).unwrap();
    let r2 = holdout_r2(
        &ds,
        &ModelKind::Forest(ForestParams {
            n_trees: 50,
            max_depth: Some(3),
            ..Default::default()
        }),
    );
    assert!(r2 > 0.95, "{r2}");
}

#[test]
fn forest_is_bit_reproducible() {
    let ds = interaction_benchmark(5, 400);
    let kind = ModelKind::Forest(ForestParams {
        n_trees: 40,
        seed: 77,
        ..Default::default()
    });
    let a = Predictor::train(&ds, &kind).unwrap().predict_raw(&ds.x);
    let b = Predictor::train(&ds, &kind).unwrap().predict_raw(&ds.x);
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn forest_invariants() {
    let ds = interaction_benchmark(6, 300);
    let p = Predictor::train(
        &ds,
        &ModelKind::Forest(ForestParams {
            n_trees: 30,
            ..Default::default()
        }),
    )
    .unwrap();
    let Model::Forest(f) = &p.model else { unreachable!() };
    assert!((f.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(f.importances.iter().all(|&v| v >= 0.0));
    let mut rev = f.clone();
    rev.trees.reverse();
    let z = p.scaler.transform(&ds.x);
    for (a, b) in f.predict(&z).iter().zip(rev.predict(&z)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn model_text_round_trip() {
    let ds = interaction_benchmark(8, 200);
    for kind in [
        ModelKind::Mlr,
        ModelKind::Forest(ForestParams {
            n_trees: 12,
            max_depth: Some(6),
            ..Default::default()
        }),
    ] {
        let p = Predictor::train(&ds, &kind).unwrap();
        let back = Predictor::from_text(&p.to_text()).unwrap();
        assert_eq!(back, p);
        let (a, b) = (p.predict_raw(&ds.x), back.predict_raw(&ds.x));
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert!(Predictor::from_text("stormpanel-model,1\nkind,rf\n").is_err());
}

#[test]
fn mlr_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (n, p) = (200, 5);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
    let y: Vec<f64> = (0..n)
        .map(|r| 0.3 - x[(r, 1)] + 0.5 * x[(r, 3)] + rng.random_range(-0.1..0.1))
        .collect();
    let names: Vec<String> = (0..p).map(|i| format!("f{i}")).collect();
    let m = fit_mlr(&x, &y, &names).unwrap();
    let a = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { x[(r, c - 1)] });
    let oracle = (a.transpose() * &a)
        .lu()
        .solve(&(a.transpose() * DVector::from_column_slice(&y)))
        .unwrap();
    assert!((m.intercept - oracle[0]).abs() < 1e-8);
    for j in 0..p {
        assert!((m.coefficients[j] - oracle[j + 1]).abs() < 1e-8);
    }
}

#[test]
fn mlr_rank_error_names_columns() {
    let x = DMatrix::from_fn(20, 2, |r, _| r as f64);
    match fit_mlr(&x, &[0.0; 20], &["a".into(), "b".into()]) {
        Err(stormpanel_core::Error::RankDeficient { columns }) => assert!(columns.contains(&"b".to_string())),
        other => panic!("{other:?}"),
    }
}

#[test]
fn perfect_prediction_cv() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = DMatrix::from_fn(100, 2, |_, _| rng.random_range(0.0..1.0));
    let y: Vec<f64> = (0..100).map(|r| 0.5 * x[(r, 0)] - 0.2 * x[(r, 1)]).collect();
    let ds = Dataset::from_arrays(spec(2), x, y).unwrap();
    let rep = cross_validate(&ds, &[ModelKind::Mlr], 5).unwrap();
    for f in &rep.model("mlr").unwrap().folds {
        assert!((f.r2.unwrap() - 1.0).abs() < 1e-10 && f.mae < 1e-10);
    }
}

#[test]
fn pure_noise_has_no_skill() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let x = DMatrix::from_fn(300, 3, |_, _| rng.random_range(0.0..1.0));
        let y: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ds = Dataset::from_arrays(spec(3), x, y).unwrap();
        let kinds = [
            ModelKind::Mlr,
            ModelKind::Forest(ForestParams {
                n_trees: 60,
                seed,
                ..Default::default()
            }),
        ];
        let rep = cross_validate(&ds, &kinds, 5).unwrap();
        for m in &rep.models {
            assert!(m.r2().unwrap().mean <= 0.05, "{} {:?}", m.name(), m.r2());
        }
    }
}

#[test]
fn single_informative_feature_dominates() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = DMatrix::from_fn(500, 4, |_, _| rng.random_range(0.0..1.0));
    let y: Vec<f64> = (0..500)
        .map(|r| (6.0f64 * x[(r, 2)]).sin() + rng.random_range(-0.05..0.05))
        .collect();
    let ds = Dataset::from_arrays(spec(4), x, y).unwrap();
    let rep = cross_validate(
        &ds,
        &[ModelKind::Forest(ForestParams {
            n_trees: 60,
            ..Default::default()
        })],
        5,
    )
    .unwrap();
    let imp = feature_importance(&rep).unwrap();
    assert!(imp[2].mean > 0.9, "{imp:?}");
    for f in &rep.models[0].folds {
        assert!((f.importances.as_ref().unwrap().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn noise_importances_near_uniform() {
    let p = 4;
    let mut per_seed = Vec::new();
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(400, p, |_, _| rng.random_range(0.0..1.0));
        let y: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = fit_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 50,
                seed,
                features_per_split: Some(2),
                ..Default::default()
            },
        )
        .unwrap();
        per_seed.push(f.importances);
    }
    for j in 0..p {
        let v: Vec<f64> = per_seed.iter().map(|imp| imp[j]).collect();
        let m = v.iter().sum::<f64>() / 10.0;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 9.0).sqrt();
        assert!((m - 1.0 / p as f64).abs() <= 3.0 * sd, "feature {j}: {m} ± {sd}");
    }
}

#[test]
fn importances_follow_column_permutation() {
    let ds = interaction_benchmark(12, 300);
    // shallow trees with large leaves keep two features from inducing the same partition
    let params = ForestParams {
        n_trees: 20,
        features_per_split: Some(3),
        max_depth: Some(4),
        min_samples_leaf: 20,
        ..Default::default()
    };
    let a = fit_forest(&ds.x, &ds.y, &params).unwrap();
    let perm = [2usize, 0, 1];
    let xp = DMatrix::from_fn(ds.len(), 3, |r, c| ds.x[(r, perm[c])]);
    let b = fit_forest(&xp, &ds.y, &params).unwrap();
    for (c, &pc) in perm.iter().enumerate() {
        assert!((b.importances[c] - a.importances[pc]).abs() < 1e-9);
    }
}

#[test]
fn training_ignores_test_targets() {
    let ds = interaction_benchmark(13, 250);
    let mut noisy = ds.clone();
    let blocks = temporal_kfold(ds.len(), 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for i in blocks[2].clone() {
        noisy.y[i] = rng.random_range(-5.0..5.0);
    }
    let train: Vec<usize> = (0..ds.len()).filter(|i| !blocks[2].contains(i)).collect();
    let kind = ModelKind::Forest(ForestParams {
        n_trees: 20,
        ..Default::default()
    });
    let a = Predictor::train(&ds.subset(&train), &kind).unwrap();
    let b = Predictor::train(&noisy.subset(&train), &kind).unwrap();
    assert_eq!(a.predict_raw(&ds.x), b.predict_raw(&ds.x));
}

#[test]
fn kfold_on_full_sample_size() {
    let sizes: Vec<usize> = temporal_kfold(26243, 5).unwrap().iter().map(|r| r.len()).collect();
    assert_eq!(sizes, vec![5249, 5249, 5249, 5248, 5248]);
}

proptest! {
    #[test]
    fn kfold_properties(log_n in (5f64).ln()..(1e5f64).ln(), k in 2usize..8) {
        let n = log_n.exp() as usize;
        prop_assume!(n >= k);
        let blocks = temporal_kfold(n, k).unwrap();
        prop_assert_eq!(blocks.len(), k);
        let mut next = 0;
        for b in &blocks {
            prop_assert_eq!(b.start, next);
            next = b.end;
        }
        prop_assert_eq!(next, n);
        let (lo, hi) = (blocks.iter().map(|b| b.len()).min().unwrap(), blocks.iter().map(|b| b.len()).max().unwrap());
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn kfold_by_time_is_ordered(offsets in proptest::collection::vec(0i64..5000, 10..200)) {
        let times: Vec<_> = offsets.iter().map(|&h| common::day(0).and_hms_opt(0, 0, 0).unwrap() + chrono::Duration::hours(h)).collect();
        let blocks = temporal_kfold_by_time(&times, 5).unwrap();
        let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..times.len()).collect::<Vec<_>>());
        for w in blocks.windows(2) {
            let max_a = w[0].iter().map(|&i| times[i]).max().unwrap();
            let min_b = w[1].iter().map(|&i| times[i]).min().unwrap();
            prop_assert!(max_a <= min_b);
        }
    }
}

#[test]
fn scenario_identity_and_monotonicity() {
    let ds = interaction_benchmark(21, 400);
    let rf = Predictor::train(
        &ds,
        &ModelKind::Forest(ForestParams {
            n_trees: 30,
            ..Default::default()
        }),
    )
    .unwrap();
    let r = scenario_predict(&rf, &ds.x, 1.0, 1.0, HistogramSpec::default()).unwrap();
    assert!(r.identical_to_baseline);

    let mut x = ds.x.clone();
    let y: Vec<f64> = (0..ds.len()).map(|i| -0.001 * x[(i, 0)] + 0.0001 * x[(i, 1)]).collect();
    let lin = Predictor::train(&Dataset::from_arrays(spec(3), x.clone(), y).unwrap(), &ModelKind::Mlr).unwrap();
    let Model::Linear(m) = &lin.model else { unreachable!() };
    assert!(m.coefficients[0] < 0.0);
    let means: Vec<f64> = [1.0, 1.05, 1.1, 1.2]
        .iter()
        .map(|&w| {
            scenario_predict(&lin, &x, w, 1.0, HistogramSpec::default())
                .unwrap()
                .mean_scenario
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    x.column_mut(0).fill(0.0);
    assert!(scenario_predict(&lin, &x, 0.0, 1.0, HistogramSpec::default()).is_err());
}

#[test]
fn dataset_from_event_rows_sorts_by_time_and_validates() {
    let mut rows: Vec<_> = (0..30)
        .map(|i| common::row(i, common::day(100 - 3 * i as i64), 50.0 + i as f64, 10.0, 5.0))
        .collect();
    rows[4].incident.precip3d = None;
    let spec = FeatureSpec::default_for(Sector::Service);
    let ds = Dataset::from_rows(&rows, &spec).unwrap();
    assert_eq!((ds.len(), ds.n_missing), (29, 1));
    assert!(ds.times.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(ds.row_index[0], 29);
}
