//! Workload builders shared by the benchmarks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use stormpanel_core::econometrics::PanelDesign;
use stormpanel_core::predict::{Dataset, FeatureSpec};

/// Unbalanced panel with one treatment dummy and three covariates.
pub fn fe_design(seed: u64, n_entities: usize, n_periods: usize) -> PanelDesign {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let mut obs = Vec::with_capacity(n_entities * n_periods);
    for e in 0..n_entities {
        let a: f64 = rng.random_range(2.0..4.0);
        for t in 0..n_periods {
            if t > 1 && rng.random_bool(0.05) {
                continue;
            }
            let d = f64::from(u8::from(rng.random_bool(0.1)));
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = a + 0.001 * t as f64 - 0.05 * d + 0.02 * x[0] + noise.sample(&mut rng);
            obs.push((e, t, y, d, x));
        }
    }
    PanelDesign::from_observations(obs, vec!["x0".into(), "x1".into(), "x2".into()]).unwrap()
}

/// Hazard-like features with a wind-rain interaction in the target.
pub fn forest_dataset(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.02).unwrap();
    let names = [
        "max_wind",
        "precip3d",
        "trans_speed",
        "min_distance",
        "impact_doy",
        "entity_lat",
        "entity_lon",
    ];
    let x = DMatrix::from_fn(n, names.len(), |_, c| rng.random_range(0.0..100.0) * (c + 1) as f64);
    let y = (0..n)
        .map(|r| {
            let hit = if x[(r, 0)] > 60.0 && x[(r, 1)] > 100.0 {
                -0.1
            } else {
                0.0
            };
            hit + noise.sample(&mut rng)
        })
        .collect();
    let spec = FeatureSpec::new(names.iter().map(|s| s.to_string()).collect(), "delta_service_m1").unwrap();
    Dataset::from_arrays(spec, x, y).unwrap()
}
