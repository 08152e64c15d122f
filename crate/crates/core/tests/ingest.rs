use chrono::NaiveDate;
use proptest::prelude::*;

use stormpanel_core::ingest::{
    interpolate_covariates, parse_covariates, parse_employment, parse_entities, parse_tracks, write_employment,
    write_tracks, CovariatePanel, CovariateVar, EmploymentPanel, Entity, EntityRegistry, Ownership, SeriesKey, Track,
    TrackPoint, TrackSet,
};
use stormpanel_core::synth::{covariates_to_csv, entities_to_csv};
use stormpanel_core::{MonthRange, Sector, YearMonth};

fn ym(y: i32, m: u32) -> YearMonth {
    YearMonth::new(y, m).unwrap()
}

#[test]
fn employment_three_counties_two_sectors_round_trip() {
    let mut panel = EmploymentPanel::default();
    for (i, county) in ["22071", "22051", "28047"].iter().enumerate() {
        for (j, sector) in [Sector::Construction, Sector::LeisureHospitality].iter().enumerate() {
            for t in 0..24i64 {
                let v = (1000 * (i + 1) + 100 * j) as f64 + 7.0 * t as f64;
                panel.insert(
                    SeriesKey::new(*county, Ownership::Private, *sector),
                    ym(2004, 1).offset(t),
                    v,
                );
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    write_employment(&a, &panel).unwrap();
    let (first, report) = parse_employment(&a).unwrap();
    assert_eq!(report.rows_kept, 3 * 2 * 24);
    assert!(report.dropped.is_empty());
    assert_eq!(first, panel);

    let b = dir.path().join("b.csv");
    write_employment(&b, &first).unwrap();
    let (second, _) = parse_employment(&b).unwrap();
    assert_eq!(second, first);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

fn arb_track(id: usize) -> impl Strategy<Value = Track> {
    prop::collection::vec(
        (
            0i64..2000,
            -89.9f64..89.9,
            -179.9f64..179.9,
            prop::option::of(0.0f64..180.0),
            prop::option::of(850.0f64..1050.0),
        ),
        1..12,
    )
    .prop_map(move |pts| {
        let t0 = NaiveDate::from_ymd_opt(1990, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        let mut points: Vec<TrackPoint> = pts
            .into_iter()
            .map(|(h, lat, lon, w, p)| TrackPoint {
                time: t0 + chrono::Duration::hours(3 * h),
                lat,
                lon,
                max_wind: w,
                min_pressure: p,
                trans_speed: None,
            })
            .collect();
        points.sort_by_key(|p| p.time);
        points.dedup_by_key(|p| p.time);
        Track {
            storm_id: format!("AL{id:02}1990"),
            points,
        }
    })
}

fn arb_tracks() -> impl Strategy<Value = TrackSet> {
    (1usize..6)
        .prop_flat_map(|n| (0..n).map(arb_track).collect::<Vec<_>>())
        .prop_map(|tracks| TrackSet { tracks })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tracks_round_trip(tracks in arb_tracks()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_tracks(&path, &tracks).unwrap();
        let (back, report) = parse_tracks(&path).unwrap();
        prop_assert!(report.is_balanced());
        prop_assert_eq!(report.rows_kept, tracks.n_points());
        prop_assert_eq!(back, tracks);
    }

    #[test]
    fn entities_round_trip(pts in prop::collection::vec((18.0f64..50.0, -125.0f64..-65.0, any::<bool>()), 1..40)) {
        let ents: Vec<Entity> = pts
            .iter()
            .enumerate()
            .map(|(i, &(lat, lon, c))| Entity {
                id: format!("{:05}", 1000 + 3 * i),
                name: format!("Parish, {i}"),
                state: "LA".into(),
                lat,
                lon,
                coastal_state: c,
            })
            .collect();
        let reg = EntityRegistry::new(ents).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        std::fs::write(&path, entities_to_csv(&reg).unwrap()).unwrap();
        let (back, report) = parse_entities(&path).unwrap();
        prop_assert_eq!(report.rows_kept, reg.len());
        prop_assert_eq!(back.as_slice(), reg.as_slice());
    }

    #[test]
    fn covariates_round_trip_and_exact_at_anchors(
        vals in prop::collection::vec((1.0f64..9e4, 1.0f64..9e5, 0.0f64..100.0), 1..8),
    ) {
        let mut cov = CovariatePanel::default();
        for (k, &(inc, pop, edu)) in vals.iter().enumerate() {
            let m = ym(2000 + k as i32, 1);
            cov.add("12086", CovariateVar::IncomePerCapita, m, inc);
            cov.add("12086", CovariateVar::WorkagePop, m, pop);
            cov.add("12086", CovariateVar::Education, m, edu);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, covariates_to_csv(&cov)).unwrap();
        let (back, _) = parse_covariates(&path).unwrap();
        prop_assert_eq!(&back.anchors, &cov.anchors);

        let cal = MonthRange::new(ym(2000, 1), ym(2000 + vals.len() as i32 - 1, 1)).unwrap();
        let monthly = interpolate_covariates(&cov, cal);
        for (k, &(inc, pop, edu)) in vals.iter().enumerate() {
            let got = monthly.get("12086", ym(2000 + k as i32, 1)).unwrap();
            prop_assert_eq!(got, [inc, pop, edu]);
        }
    }

    #[test]
    fn interpolation_monotone_between_monotone_anchors(
        steps in prop::collection::vec(0.0f64..5000.0, 2..6),
        base in 1.0f64..1e4,
    ) {
        let mut cov = CovariatePanel::default();
        let mut v = base;
        for (k, s) in steps.iter().enumerate() {
            let m = ym(2001 + k as i32, 1);
            cov.add("e", CovariateVar::IncomePerCapita, m, v);
            cov.add("e", CovariateVar::WorkagePop, m, 1.0);
            cov.add("e", CovariateVar::Education, m, 50.0);
            v += s;
        }
        let cal = MonthRange::new(ym(2000, 1), ym(2001 + steps.len() as i32, 12)).unwrap();
        let monthly = interpolate_covariates(&cov, cal);
        let s = &monthly.series["e"][0];
        prop_assert!(s.windows(2).all(|w| w[1] >= w[0]));
    }
}
