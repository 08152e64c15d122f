use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, StudentsT};

use stormpanel_core::hazard::Incident;
use stormpanel_core::ingest::{EmploymentPanel, Entity, EntityRegistry, Ownership, SeriesKey};
use stormpanel_core::panel::{
    build_event_table, composite_cell, composite_matrix, conditioned_distribution, fractional_change, read_event_table,
    write_event_table, Condition, EventTable, TableParams, TestStatus,
};
use stormpanel_core::synth::{generate, SynthConfig};
use stormpanel_core::{Sector, YearMonth};

fn ym(s: &str) -> YearMonth {
    s.parse().unwrap()
}

fn incident(storm: usize, entity: &str, month: &str) -> Incident {
    let m = ym(month);
    let t = m.first_day().and_hms_opt(12, 0, 0).unwrap() + chrono::Duration::days(9);
    Incident {
        storm_id: format!("S{storm:02}"),
        entity_id: entity.into(),
        impact_time: t,
        impact_month: m,
        impact_doy: chrono::Datelike::ordinal(&t.date()),
        max_wind: Some(40.0 + 5.0 * storm as f64),
        min_pressure: None,
        precip3d: Some(10.0 * storm as f64),
        precip_partial: false,
        trans_speed: None,
        min_distance: 50.0,
        entity_lat: 30.0,
        entity_lon: -90.0,
    }
}

fn entity(id: &str) -> Entity {
    Entity {
        id: id.into(),
        name: id.into(),
        state: "LA".into(),
        lat: 30.0,
        lon: -90.0,
        coastal_state: true,
    }
}

fn put(panel: &mut EmploymentPanel, id: &str, sector: Sector, from: &str, to: &str, level: f64) {
    let (mut m, end) = (ym(from), ym(to));
    let mut k = 0.0;
    while m <= end {
        panel.insert(SeriesKey::new(id, Ownership::Private, sector), m, level + k);
        m = m.offset(1);
        k += 1.0;
    }
}

#[test]
fn twenty_incidents_match_hand_enumeration() {
    let mut p = EmploymentPanel::default();
    for (id, goods, service) in [
        ("A", 500.0, 800.0),
        ("B", 99.0, 800.0),
        ("C", 500.0, 99.0),
        ("F", 100.0, 100.0),
    ] {
        put(&mut p, id, Sector::Goods, "2004-01", "2006-01", goods);
        put(&mut p, id, Sector::Service, "2004-01", "2006-01", service);
        put(&mut p, id, Sector::Total, "2004-01", "2006-01", goods + service);
    }
    p.series
        .get_mut(&SeriesKey::new("B", Ownership::Private, Sector::Goods))
        .unwrap()
        .values_mut()
        .for_each(|v| *v = 99.0);
    p.series
        .get_mut(&SeriesKey::new("C", Ownership::Private, Sector::Service))
        .unwrap()
        .values_mut()
        .for_each(|v| *v = 99.0);
    put(&mut p, "D", Sector::Construction, "2004-01", "2006-01", 300.0);
    put(&mut p, "E", Sector::Goods, "2004-09", "2006-01", 400.0);
    put(&mut p, "E", Sector::Service, "2004-09", "2006-01", 400.0);
    let reg = EntityRegistry::new(["A", "B", "C", "D", "E", "F"].map(entity).to_vec()).unwrap();

    let cases = [
        ("A", "2004-08", "ok"),
        ("A", "2005-09", "ok"),
        ("A", "2004-01", "missing_basis"),
        ("B", "2004-08", "min_employment"),
        ("B", "2005-03", "min_employment"),
        ("C", "2004-09", "min_employment"),
        ("D", "2004-08", "unmatched_area"),
        ("D", "2005-08", "unmatched_area"),
        ("E", "2004-08", "missing_basis"),
        ("E", "2004-09", "missing_basis"),
        ("E", "2004-10", "ok"),
        ("E", "2005-06", "ok"),
        ("F", "2004-08", "ok"),
        ("F", "2005-10", "ok"),
        ("Z", "2004-08", "unknown_entity"),
        ("Z", "2005-08", "unknown_entity"),
        ("A", "2006-01", "ok"),
        ("A", "2006-03", "missing_basis"),
        ("C", "2005-01", "min_employment"),
        ("F", "2004-02", "ok"),
    ];
    let incs: Vec<Incident> = cases
        .iter()
        .enumerate()
        .map(|(i, (e, m, _))| incident(i, e, m))
        .collect();
    let table = build_event_table(&incs, &p, &reg, None, &TableParams::default());

    let mut expect: BTreeMap<String, usize> = BTreeMap::new();
    for (_, _, why) in cases {
        if why != "ok" {
            *expect.entry(why.to_string()).or_default() += 1;
        }
    }
    assert_eq!(table.len(), 8);
    assert_eq!(table.exclusions, expect);
    let kept: Vec<_> = table
        .rows
        .iter()
        .map(|r| (r.incident.entity_id.as_str(), r.incident.impact_month.to_string()))
        .collect();
    let want: Vec<_> = cases
        .iter()
        .filter(|c| c.2 == "ok")
        .map(|c| (c.0, c.1.to_string()))
        .collect();
    assert_eq!(kept, want);
    assert!(table.rows.iter().all(|r| !r.covariates_available()));

    // A at 2004-08: Month −1 is 2004-07 = 500 + 6 goods
    let r = &table.rows[0];
    assert_eq!(r.delta(Sector::Goods, 1), Some(2.0 / 506.0));
    assert_eq!(r.basis(Sector::Goods), Some(506f64.log10()));
    // A at 2006-01: no months after the panel end
    let late = table
        .rows
        .iter()
        .find(|r| r.incident.impact_month == ym("2006-01"))
        .unwrap();
    assert!(late.delta(Sector::Goods, 0).is_some());
    assert_eq!(late.delta(Sector::Goods, 1), None);
}

fn fixture_table(min_employment: f64) -> EventTable {
    let d = generate(&SynthConfig::default()).unwrap();
    let mut incs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (i, e) in d.entities.iter().enumerate() {
        for k in 0..4 {
            let m = ym("2003-02").offset(rng.random_range(0..34));
            let mut inc = incident(k, &e.id, &m.to_string());
            inc.max_wind = Some(rng.random_range(20.0..140.0));
            inc.storm_id = format!("S{:02}", (i + k) % 9);
            incs.push(inc);
        }
    }
    build_event_table(
        &incs,
        &d.employment,
        &d.entities,
        None,
        &TableParams {
            min_employment,
            ..Default::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn raising_min_employment_never_adds_rows(lo in 0.0f64..2000.0, extra in 0.0f64..5000.0) {
        let a = fixture_table(lo);
        let b = fixture_table(lo + extra);
        let keys = |t: &EventTable| t.rows.iter().map(|r| (r.incident.storm_id.clone(), r.incident.entity_id.clone(), r.incident.impact_month)).collect::<std::collections::BTreeSet<_>>();
        prop_assert!(keys(&b).is_subset(&keys(&a)));
    }
}

#[test]
fn deltas_invert_to_levels_and_stay_above_minus_one() {
    let d = generate(&SynthConfig::default()).unwrap();
    let mut checked = 0;
    for (key, series) in d.employment.series.iter().take(60) {
        for (&m, &base) in series.iter().step_by(5) {
            let impact = m.offset(1);
            for lag in 0..12 {
                if let Some(delta) = fractional_change(&d.employment, key, impact, lag) {
                    assert!(delta > -1.0);
                    let level = d.employment.get(key, impact.offset(lag)).unwrap();
                    assert!((base * (1.0 + delta) - level).abs() <= 1e-9 * level);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn partition_means_combine_to_the_whole() {
    let table = fixture_table(100.0);
    let cut = 80.0;
    let (hi, lo): (Vec<_>, Vec<_>) = table
        .rows
        .iter()
        .cloned()
        .partition(|r| r.incident.max_wind.unwrap() >= cut);
    let sub = |rows: Vec<_>| EventTable {
        rows,
        exclusions: BTreeMap::new(),
    };
    let (hi, lo) = (sub(hi), sub(lo));
    assert!(!hi.is_empty() && !lo.is_empty());
    let sectors = Sector::ALL;
    let all = composite_matrix(&table, &Condition::All, &sectors, 0..=12).unwrap();
    let a = composite_matrix(&hi, &Condition::All, &sectors, 0..=12).unwrap();
    let b = composite_matrix(&lo, &Condition::All, &sectors, 0..=12).unwrap();
    let find = |cells: &[stormpanel_core::panel::CompositeCell], s: Sector, l: usize| {
        cells
            .iter()
            .find(|c| c.sector == s && c.lag == l)
            .map(|c| (c.mean, c.n))
    };
    let mut n_cells = 0;
    for c in &all {
        let parts: Vec<(f64, usize)> = [find(&a, c.sector, c.lag), find(&b, c.sector, c.lag)]
            .into_iter()
            .flatten()
            .collect();
        let n: usize = parts.iter().map(|p| p.1).sum();
        let mean = parts.iter().map(|p| p.0 * p.1 as f64).sum::<f64>() / n as f64;
        assert_eq!(n, c.n);
        assert!((mean - c.mean).abs() < 1e-12, "{:?} {} {}", c.sector, mean, c.mean);
        n_cells += 1;
    }
    assert_eq!(n_cells, 13 * 13);
}

#[test]
fn conditioned_summary_ignores_row_order() {
    let mut table = fixture_table(100.0);
    let cond = Condition::WindAtLeast(64.0);
    let a = conditioned_distribution(&table, &cond, Sector::Total, 1, 200, true);
    table.rows.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let b = conditioned_distribution(&table, &cond, Sector::Total, 1, 200, true);
    let (sa, sb) = (a.summary.unwrap(), b.summary.unwrap());
    assert_eq!(sa.n, sb.n);
    assert!((sa.mean - sb.mean).abs() < 1e-15);
    assert!((sa.sd - sb.sd).abs() < 1e-15);
    assert!((sa.skew.unwrap() - sb.skew.unwrap()).abs() < 1e-12);
    assert!(
        conditioned_distribution(&table, &Condition::Never, Sector::Total, 1, 200, true)
            .values
            .is_empty()
    );
}

#[test]
fn event_table_file_round_trip() {
    let table = fixture_table(100.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.csv");
    write_event_table(&path, &table).unwrap();
    let back = read_event_table(&path).unwrap();
    assert_eq!(back.rows, table.rows);
}

/// One-sample t statistic and two-sided p from a separate t distribution implementation.
fn t_oracle(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = mean / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).unwrap();
    (t, 2.0 * dist.cdf(-t.abs()))
}

#[test]
fn t_tests_match_students_t_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..100 {
        let n = rng.random_range(2..400);
        let mu = rng.random_range(-0.05..0.05);
        let sd = rng.random_range(0.005..0.2);
        let dist = Normal::new(mu, sd).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let cell = composite_cell(Sector::Total, 1, &xs).unwrap();
        assert_eq!(cell.status, TestStatus::Tested);
        let (t, p) = t_oracle(&xs);
        let (gt, gp) = (cell.t_stat.unwrap(), cell.p_value.unwrap());
        assert!((gt - t).abs() <= 1e-9 * t.abs().max(1.0), "sample {k}: t {gt} vs {t}");
        assert!((gp - p).abs() <= 1e-9, "sample {k}: p {gp} vs {p}");
    }
}
