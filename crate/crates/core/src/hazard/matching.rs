use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rayon::prelude::*;

use super::geo::haversine_km;
use super::incident::{sort_incidents, Incident};
use super::index::GridIndex;
use crate::error::{Error, Result};
use crate::ingest::{EntityRegistry, PrecipGrid, Track, TrackSet};

pub const DEFAULT_RADIUS_KM: f64 = 200.0;

/// Bucket size of the entity index, degrees.
const INDEX_CELL_DEG: f64 = 1.0;

struct Exposure {
    min_distance: f64,
    closest: usize,
    max_wind: Option<f64>,
    min_pressure: Option<f64>,
}

fn fold_max(acc: Option<f64>, v: Option<f64>) -> Option<f64> {
    match (acc, v) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    }
}

fn fold_min(acc: Option<f64>, v: Option<f64>) -> Option<f64> {
    match (acc, v) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn match_track(track: &Track, entities: &EntityRegistry, index: &GridIndex, radius_km: f64) -> Vec<Incident> {
    let ents = entities.as_slice();
    let mut hits: BTreeMap<usize, Exposure> = BTreeMap::new();
    for (pi, p) in track.points.iter().enumerate() {
        index.candidates(p.lat, p.lon, radius_km, |ei| {
            let e = &ents[ei];
            let d = haversine_km(p.lat, p.lon, e.lat, e.lon);
            if d > radius_km {
                return;
            }
            let exp = hits.entry(ei).or_insert(Exposure {
                min_distance: f64::INFINITY,
                closest: pi,
                max_wind: None,
                min_pressure: None,
            });
            exp.max_wind = fold_max(exp.max_wind, p.max_wind);
            exp.min_pressure = fold_min(exp.min_pressure, p.min_pressure);
            // strict: ties keep the earliest fix
            if d < exp.min_distance {
                exp.min_distance = d;
                exp.closest = pi;
            }
        });
    }
    hits.into_iter()
        .map(|(ei, exp)| {
            let e = &ents[ei];
            let p = &track.points[exp.closest];
            let mut inc = Incident::at_time(&track.storm_id, &e.id, p.time, e.lat, e.lon, exp.min_distance);
            inc.max_wind = exp.max_wind;
            inc.min_pressure = exp.min_pressure;
            inc.trans_speed = p.trans_speed;
            inc
        })
        .collect()
}

/// Emits one incident per (storm, entity) pair whose closest over-land fix lies
/// within `radius_km` of the entity centroid.
///
/// `tracks` should already be land-masked, with translation speed annotated on
/// the full track beforehand. Work is split across storms and merged in
/// (storm_id, entity_id) order, so the result does not depend on thread count.
pub fn match_incidents(tracks: &TrackSet, entities: &EntityRegistry, radius_km: f64) -> Result<Vec<Incident>> {
    if !(radius_km.is_finite() && radius_km > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius_km must be positive, got {radius_km}"
        )));
    }
    if tracks.is_empty() || entities.is_empty() {
        return Ok(Vec::new());
    }
    let index = GridIndex::build(entities.iter().map(|e| (e.lat, e.lon)), INDEX_CELL_DEG);
    let mut out: Vec<Incident> = tracks
        .tracks
        .par_iter()
        .flat_map_iter(|t| match_track(t, entities, &index, radius_km))
        .collect();
    sort_incidents(&mut out);
    Ok(out)
}

pub const DEFAULT_PRECIP_WINDOW_DAYS: u32 = 3;

/// Day offsets of a window of `days` centered on the impact date
/// (`-1..=1` for three days; even windows lean forward).
pub fn window_offsets(days: u32) -> std::ops::RangeInclusive<i64> {
    let back = (days as i64 - 1) / 2;
    -back..=(days as i64 - 1 - back)
}

/// Sums daily precipitation at the grid cell nearest each entity centroid over
/// a window centered on the closest-approach date.
///
/// Missing days contribute zero and set `precip_partial`; with every day missing
/// the total is `None`. A centroid outside the grid leaves `precip3d` as `None`.
pub fn attach_precip(incidents: &mut [Incident], grid: &PrecipGrid, window_days: u32) -> Result<()> {
    if window_days == 0 {
        return Err(Error::InvalidParameter(
            "precipitation window must be at least one day".into(),
        ));
    }
    for inc in incidents.iter_mut() {
        inc.precip3d = None;
        inc.precip_partial = false;
        let Some((row, col)) = grid.grid.nearest(inc.entity_lat, inc.entity_lon) else {
            continue;
        };
        let d = inc.impact_date();
        let mut total = 0.0f64;
        let mut present = 0usize;
        let mut missing = 0usize;
        for off in window_offsets(window_days) {
            let date = shift(d, off);
            match date
                .and_then(|dt| grid.day_index(dt))
                .and_then(|di| grid.get(di, row, col))
            {
                Some(v) => {
                    total += v as f64;
                    present += 1;
                }
                None => missing += 1,
            }
        }
        inc.precip_partial = missing > 0;
        inc.precip3d = (present > 0).then_some(total);
    }
    Ok(())
}

fn shift(d: NaiveDate, off: i64) -> Option<NaiveDate> {
    if off >= 0 {
        d.checked_add_days(Days::new(off as u64))
    } else {
        d.checked_sub_days(Days::new((-off) as u64))
    }
}
