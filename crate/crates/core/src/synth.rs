//! Deterministic synthetic inputs: the bundled Gulf-coast fixture and random
//! instances for oracle tests and benchmarks.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Days, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::calendar::{MonthRange, YearMonth};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hazard::{annotate_translation_speed, haversine_km, mask_overland, match_incidents, DEFAULT_RADIUS_KM};
use crate::ingest::{
    write_employment, write_precip_binary, write_tracks, CovariatePanel, CovariateVar, EmploymentPanel, Entity,
    EntityRegistry, LandMask, Ownership, PrecipGrid, Sector, SeriesKey, Track, TrackPoint, TrackSet,
};
use crate::textio::{fmt_opt, write_atomic};

/// Fixture file names inside a fixture directory.
pub const TRACKS_FILE: &str = "tracks.csv";
pub const PRECIP_FILE: &str = "precip.spgr";
pub const LANDMASK_FILE: &str = "landmask.csv";
pub const ENTITIES_FILE: &str = "entities.csv";
pub const EMPLOYMENT_FILE: &str = "employment.csv";
pub const COVARIATES_FILE: &str = "covariates.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_storms: usize,
    pub n_entities: usize,
    pub start: YearMonth,
    pub end: YearMonth,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 2004,
            n_storms: 5,
            n_entities: 40,
            start: YearMonth::new(2003, 1).expect("valid month"),
            end: YearMonth::new(2005, 12).expect("valid month"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub tracks: TrackSet,
    pub entities: EntityRegistry,
    pub mask: LandMask,
    pub precip: PrecipGrid,
    pub employment: EmploymentPanel,
    pub covariates: CovariatePanel,
}

/// Latitude of the synthetic coastline.
pub fn coast_lat(lon: f64) -> f64 {
    29.0 + 0.4 * (lon * 0.7).sin()
}

/// Land-sea raster at 0.25° over 22–37°N, 100–78°W.
pub fn gulf_mask() -> LandMask {
    let grid = GridSpec::new(22.0, -100.0, 0.25, 0.25, 61, 89).expect("valid grid");
    let mut mask = LandMask::new(grid);
    for r in 0..grid.nlat {
        for c in 0..grid.nlon {
            mask.set(r, c, grid.lat_at(r) >= coast_lat(grid.lon_at(c)));
        }
    }
    mask
}

fn state_of(lat: f64, lon: f64) -> (&'static str, &'static str, bool) {
    if lat > 33.8 {
        return if lon < -90.0 {
            ("05", "AR", false)
        } else {
            ("47", "TN", false)
        };
    }
    match lon {
        l if l < -94.0 => ("48", "TX", true),
        l if l < -89.5 => ("22", "LA", true),
        l if l < -88.2 => ("28", "MS", true),
        l if l < -85.0 => ("01", "AL", true),
        l if l < -82.0 => ("12", "FL", true),
        _ => ("13", "GA", true),
    }
}

fn gulf_entities(rng: &mut ChaCha8Rng, n: usize) -> Vec<Entity> {
    let mut per_state: BTreeMap<&str, usize> = BTreeMap::new();
    (0..n)
        .map(|i| {
            let lon = -97.0 + 16.0 * (i as f64 + rng.random_range(0.0..0.8)) / n as f64;
            let lat = coast_lat(lon) + 0.3 + rng.random_range(0.0..4.8);
            let (fips, state, coastal) = state_of(lat, lon);
            let k = per_state.entry(fips).or_insert(0);
            *k += 1;
            Entity {
                id: format!("{fips}{:03}", 2 * *k - 1),
                name: format!("County {state}-{k}"),
                state: state.to_string(),
                lat: (lat * 1e4).round() / 1e4,
                lon: (lon * 1e4).round() / 1e4,
                coastal_state: coastal,
            }
        })
        .collect()
}

fn at(date: NaiveDate, hour: u32) -> NaiveDateTime {
    date.and_hms_opt(hour, 0, 0).expect("valid hour")
}

fn gulf_storms(rng: &mut ChaCha8Rng, n: usize) -> TrackSet {
    let starts = ["2004-08-10", "2004-08-27", "2004-09-12", "2004-09-25", "2004-10-08"];
    let mut tracks = Vec::with_capacity(n);
    for s in 0..n {
        let day0: NaiveDate = starts[s % starts.len()].parse().expect("valid date");
        let day0 = day0 + Days::new(365 * (s / starts.len()) as u64);
        let mut lat = rng.random_range(23.0..24.5);
        let mut lon = rng.random_range(-95.0..-84.0);
        let peak = rng.random_range(70.0..145.0);
        let drift = rng.random_range(-0.35..0.35);
        let mut wind: f64 = 35.0;
        let mut points = Vec::new();
        for k in 0..18usize {
            let time = at(day0 + Days::new((k / 4) as u64), 6 * (k % 4) as u32);
            let over_land = lat >= coast_lat(lon);
            wind = if over_land {
                (wind * 0.82).max(25.0)
            } else {
                (wind + (peak - 35.0) / 5.0).min(peak)
            };
            let w = (wind / 5.0).round() * 5.0;
            points.push(TrackPoint {
                time,
                lat: (lat * 10.0).round() / 10.0,
                lon: (lon * 10.0).round() / 10.0,
                max_wind: Some(w),
                min_pressure: Some((1012.0 - 0.85 * w).round()),
                trans_speed: None,
            });
            lat += rng.random_range(0.8..1.2) * if over_land { 0.8 } else { 1.0 };
            lon += drift + rng.random_range(-0.15..0.15);
        }
        tracks.push(Track {
            storm_id: format!("AL{:02}{}", s + 1, day0.format("%Y")),
            points,
        });
    }
    tracks.sort_by(|a, b| a.storm_id.cmp(&b.storm_id));
    TrackSet { tracks }
}

fn gulf_precip(rng: &mut ChaCha8Rng, tracks: &TrackSet) -> PrecipGrid {
    let grid = GridSpec::new(22.0, -100.0, 0.5, 0.5, 31, 45).expect("valid grid");
    let start: NaiveDate = "2004-07-01".parse().expect("valid date");
    let mut p = PrecipGrid::new(grid, start, 153);
    for d in 0..p.ndays {
        for r in 0..grid.nlat {
            for c in 0..grid.nlon {
                let v = if rng.random_bool(0.3) {
                    -8.0 * rng.random_range(1e-3f64..1.0).ln()
                } else {
                    0.0
                };
                p.set(d, r, c, ((v * 10.0).round() / 10.0) as f32);
            }
        }
    }
    for t in &tracks.tracks {
        for pt in &t.points {
            let Some(day) = p.day_index(pt.time.date()) else {
                continue;
            };
            let strength = pt.max_wind.unwrap_or(30.0) / 100.0;
            for r in 0..grid.nlat {
                for c in 0..grid.nlon {
                    let dist = haversine_km(pt.lat, pt.lon, grid.lat_at(r), grid.lon_at(c));
                    if dist < 400.0 {
                        let add = 80.0 * strength * (-(dist / 160.0).powi(2)).exp();
                        let cur = p.get(day, r, c).unwrap_or(0.0) as f64;
                        p.set(day, r, c, (((cur + add) * 10.0).round() / 10.0) as f32);
                    }
                }
            }
        }
    }
    // a few missing cells so partial-window handling is exercised
    for _ in 0..40 {
        let (d, r, c) = (
            rng.random_range(0..p.ndays),
            rng.random_range(0..grid.nlat),
            rng.random_range(0..grid.nlon),
        );
        p.set(d, r, c, f32::NAN);
    }
    p
}

/// Supersector shares of total employment, in [`Sector::ALL`] order after
/// the three aggregates.
const SHARES: [f64; 10] = [0.02, 0.07, 0.09, 0.20, 0.02, 0.06, 0.13, 0.15, 0.12, 0.14];

/// Month-`lag` multiplicative effect of a storm hit on a supersector.
fn storm_effect(sector: Sector, lag: i64, severity: f64) -> f64 {
    if lag < 0 {
        return 0.0;
    }
    let decay = (-(lag as f64) / 3.0).exp();
    let base = match sector {
        Sector::LeisureHospitality => -0.12,
        Sector::Construction if lag >= 1 => 0.05,
        Sector::Construction => -0.02,
        Sector::TradeTransportUtilities | Sector::OtherServices => -0.04,
        _ => -0.015,
    };
    base * severity * decay
}

fn gulf_employment(
    rng: &mut ChaCha8Rng,
    entities: &[Entity],
    tracks: &TrackSet,
    registry: &EntityRegistry,
    calendar: MonthRange,
) -> Result<EmploymentPanel> {
    let incidents = match_incidents(tracks, registry, DEFAULT_RADIUS_KM)?;
    let mut hits: BTreeMap<&str, Vec<(YearMonth, f64)>> = BTreeMap::new();
    for inc in &incidents {
        let sev = inc.max_wind.unwrap_or(50.0) / 100.0 * (1.0 - inc.min_distance / 400.0);
        hits.entry(inc.entity_id.as_str())
            .or_default()
            .push((inc.impact_month, sev));
    }
    let noise = Normal::new(0.0, 0.004).expect("valid sd");
    let supersectors = &Sector::ALL[3..];
    let mut panel = EmploymentPanel::default();
    for (i, e) in entities.iter().enumerate() {
        // every tenth entity is tiny so the minimum-employment filter has work
        let size = if i % 10 == 7 {
            rng.random_range(300.0..900.0)
        } else {
            10f64.powf(rng.random_range(3.5..5.3))
        };
        let trend = rng.random_range(-0.001..0.003);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let own_hits = hits.get(e.id.as_str()).cloned().unwrap_or_default();
        let mut levels = vec![[0.0f64; 10]; calendar.len()];
        for (t, m) in calendar.iter().enumerate() {
            let season = 1.0 + 0.015 * (std::f64::consts::TAU * m.month() as f64 / 12.0 + phase).sin();
            for (j, s) in supersectors.iter().enumerate() {
                let mut v = size * SHARES[j] * (1.0 + trend * t as f64) * season * (1.0 + noise.sample(rng));
                for &(hm, sev) in &own_hits {
                    v *= 1.0 + storm_effect(*s, m.months_since(hm), sev);
                }
                levels[t][j] = v.round().max(0.0);
            }
        }
        for (t, m) in calendar.iter().enumerate() {
            let l = &levels[t];
            let goods: f64 = l[..3].iter().sum();
            let service: f64 = l[3..].iter().sum();
            let mut put = |s: Sector, v: f64| panel.insert(SeriesKey::new(e.id.clone(), Ownership::Private, s), m, v);
            put(Sector::Total, goods + service);
            put(Sector::Goods, goods);
            put(Sector::Service, service);
            for (j, s) in supersectors.iter().enumerate() {
                put(*s, l[j]);
            }
        }
    }
    Ok(panel)
}

fn gulf_covariates(
    rng: &mut ChaCha8Rng,
    entities: &[Entity],
    panel: &EmploymentPanel,
    calendar: MonthRange,
) -> CovariatePanel {
    let mut cov = CovariatePanel::default();
    for (i, e) in entities.iter().enumerate() {
        if i % 20 == 13 {
            continue;
        }
        let jobs = panel
            .get(
                &SeriesKey::new(e.id.clone(), Ownership::Private, Sector::Total),
                calendar.start,
            )
            .unwrap_or(1000.0);
        let income = rng.random_range(26_000.0..52_000.0);
        let edu = rng.random_range(72.0..90.0);
        for (k, year) in (calendar.start.year()..=calendar.end.year()).enumerate() {
            let m = YearMonth::new(year, 1).expect("valid month");
            let g = k as f64;
            cov.add(
                &e.id,
                CovariateVar::IncomePerCapita,
                m,
                (income * (1.0 + 0.025 * g)).round(),
            );
            cov.add(
                &e.id,
                CovariateVar::WorkagePop,
                m,
                (jobs * 1.6 * (1.0 + 0.004 * g)).round(),
            );
            cov.add(
                &e.id,
                CovariateVar::Education,
                m,
                ((edu + 0.35 * g) * 10.0).round() / 10.0,
            );
        }
    }
    cov
}

/// Builds the Gulf-coast fixture. Output depends only on `cfg`.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    let calendar = MonthRange::new(cfg.start, cfg.end)
        .ok_or_else(|| Error::InvalidParameter(format!("empty calendar {}..{}", cfg.start, cfg.end)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let entities = gulf_entities(&mut rng, cfg.n_entities);
    let registry = EntityRegistry::new(entities.clone())?;
    let tracks = gulf_storms(&mut rng, cfg.n_storms);
    let precip = gulf_precip(&mut rng, &tracks);
    let mask = gulf_mask();
    let mut annotated = tracks.clone();
    annotate_translation_speed(&mut annotated);
    let (overland, _) = mask_overland(&annotated, &mask);
    let employment = gulf_employment(&mut rng, &entities, &overland, &registry, calendar)?;
    let covariates = gulf_covariates(&mut rng, &entities, &employment, calendar);
    Ok(SynthData {
        tracks,
        entities: registry,
        mask,
        precip,
        employment,
        covariates,
    })
}

pub fn entities_to_csv(entities: &EntityRegistry) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["entity_id", "name", "state", "lat", "lon", "coastal_state"])?;
    for e in entities.iter() {
        w.write_record([
            e.id.as_str(),
            e.name.as_str(),
            e.state.as_str(),
            &fmt_opt(Some(e.lat)),
            &fmt_opt(Some(e.lon)),
            if e.coastal_state { "1" } else { "0" },
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::format(e.to_string()))
}

pub fn covariates_to_csv(cov: &CovariatePanel) -> String {
    let mut rows: BTreeMap<(&str, YearMonth), [Option<f64>; 3]> = BTreeMap::new();
    for (entity, vars) in &cov.anchors {
        for (k, anchors) in vars.iter().enumerate() {
            for (m, v) in anchors {
                rows.entry((entity.as_str(), *m)).or_insert([None; 3])[k] = Some(*v);
            }
        }
    }
    let mut out = String::from("entity_id,period,income_per_capita,workage_pop,education\n");
    for ((e, m), v) in rows {
        let period = if m.month() == 1 {
            m.year().to_string()
        } else {
            m.to_string()
        };
        out.push_str(&format!(
            "{e},{period},{},{},{}\n",
            fmt_opt(v[0]),
            fmt_opt(v[1]),
            fmt_opt(v[2])
        ));
    }
    out
}

/// Writes every fixture file into `dir` under the standard names.
pub fn write_fixture(dir: &Path, data: &SynthData) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_tracks(&dir.join(TRACKS_FILE), &data.tracks)?;
    write_precip_binary(&dir.join(PRECIP_FILE), &data.precip)?;
    data.mask.write_csv(&dir.join(LANDMASK_FILE))?;
    write_atomic(&dir.join(ENTITIES_FILE), entities_to_csv(&data.entities)?.as_bytes())?;
    write_employment(&dir.join(EMPLOYMENT_FILE), &data.employment)?;
    write_atomic(
        &dir.join(COVARIATES_FILE),
        covariates_to_csv(&data.covariates).as_bytes(),
    )?;
    Ok(())
}

/// Random storms and entities over the western North Atlantic, for
/// oracle-equivalence checks. Tracks are random walks of 6-hourly fixes.
pub fn random_instance(seed: u64, n_storms: usize, n_entities: usize) -> (TrackSet, EntityRegistry) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t0 = at("2000-06-01".parse().expect("valid date"), 0);
    let tracks = (0..n_storms)
        .map(|s| {
            let n_pts = rng.random_range(1..40);
            let mut lat: f64 = rng.random_range(12.0..40.0);
            let mut lon: f64 = rng.random_range(-98.0..-60.0);
            let start = t0 + chrono::Duration::hours(6 * rng.random_range(0..600i64));
            let points = (0..n_pts)
                .map(|k| {
                    lat = (lat + rng.random_range(-0.5..1.2)).clamp(-89.0, 89.0);
                    lon = (lon + rng.random_range(-1.5..1.0)).clamp(-179.9, 179.9);
                    TrackPoint {
                        time: start + chrono::Duration::hours(6 * k as i64),
                        lat,
                        lon,
                        max_wind: rng.random_bool(0.9).then(|| rng.random_range(20.0..160.0f64).round()),
                        min_pressure: rng.random_bool(0.8).then(|| rng.random_range(880.0..1012.0f64).round()),
                        trans_speed: rng.random_bool(0.9).then(|| rng.random_range(0.0..30.0)),
                    }
                })
                .collect();
            Track {
                storm_id: format!("R{s:04}"),
                points,
            }
        })
        .collect();
    let entities = (0..n_entities)
        .map(|i| Entity {
            id: format!("{:05}", 10_000 + i),
            name: format!("E{i}"),
            state: "XX".into(),
            lat: rng.random_range(15.0..45.0),
            lon: rng.random_range(-100.0..-65.0),
            coastal_state: rng.random_bool(0.7),
        })
        .collect();
    (TrackSet { tracks }, EntityRegistry::new(entities).expect("unique ids"))
}
