use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stormpanel_core::hazard::{annotate_translation_speed, haversine_km, match_incidents};
use stormpanel_core::synth::random_instance;

fn matching(c: &mut Criterion) {
    let mut g = c.benchmark_group("match_incidents");
    for n_entities in [500, 3000] {
        let (mut tracks, entities) = random_instance(1, 50, n_entities);
        annotate_translation_speed(&mut tracks);
        g.bench_with_input(BenchmarkId::new("grid_index", n_entities), &n_entities, |b, _| {
            b.iter(|| match_incidents(&tracks, &entities, 200.0).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("all_pairs", n_entities), &n_entities, |b, _| {
            b.iter(|| {
                let mut hits = 0usize;
                for t in &tracks.tracks {
                    for e in entities.iter() {
                        if t.points
                            .iter()
                            .any(|p| haversine_km(p.lat, p.lon, e.lat, e.lon) <= 200.0)
                        {
                            hits += 1;
                        }
                    }
                }
                hits
            })
        });
    }
    g.finish();
}

criterion_group!(benches, matching);
criterion_main!(benches);
