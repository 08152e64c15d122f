//! Exhaustive reference implementations of the hazard joins.

use chrono::Datelike;
use stormpanel_core::hazard::{haversine_km, Incident};
use stormpanel_core::ingest::{EntityRegistry, LandMask, PrecipGrid, TrackSet};
use stormpanel_core::YearMonth;

/// All storm × entity pairs, every fix checked.
pub fn brute_force_match(tracks: &TrackSet, entities: &EntityRegistry, radius_km: f64) -> Vec<Incident> {
    let mut out = Vec::new();
    for t in &tracks.tracks {
        for e in entities.iter() {
            let mut best: Option<(f64, usize)> = None;
            let mut wind: Option<f64> = None;
            let mut pres: Option<f64> = None;
            for (i, p) in t.points.iter().enumerate() {
                let d = haversine_km(p.lat, p.lon, e.lat, e.lon);
                if d > radius_km {
                    continue;
                }
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, i));
                }
                if let Some(w) = p.max_wind {
                    wind = Some(wind.map_or(w, |a: f64| a.max(w)));
                }
                if let Some(q) = p.min_pressure {
                    pres = Some(pres.map_or(q, |a: f64| a.min(q)));
                }
            }
            if let Some((d, i)) = best {
                let p = &t.points[i];
                out.push(Incident {
                    storm_id: t.storm_id.clone(),
                    entity_id: e.id.clone(),
                    impact_time: p.time,
                    impact_month: YearMonth::of_date(p.time.date()),
                    impact_doy: p.time.ordinal(),
                    max_wind: wind,
                    min_pressure: pres,
                    precip3d: None,
                    precip_partial: false,
                    trans_speed: p.trans_speed,
                    min_distance: d,
                    entity_lat: e.lat,
                    entity_lon: e.lon,
                });
            }
        }
    }
    out.sort_by(|a, b| (&a.storm_id, &a.entity_id).cmp(&(&b.storm_id, &b.entity_id)));
    out
}

/// Nearest cell by scanning every row and column; `None` beyond half a cell
/// outside the outermost centers.
pub fn nearest_cell(lats: &[f64], lons: &[f64], lat: f64, lon: f64) -> Option<(usize, usize)> {
    let pick = |axis: &[f64], v: f64| -> Option<usize> {
        let half = if axis.len() > 1 {
            (axis[1] - axis[0]).abs() / 2.0
        } else {
            0.5
        };
        if v < axis[0] - half || v >= axis[axis.len() - 1] + half {
            return None;
        }
        let mut best = 0;
        for (i, a) in axis.iter().enumerate() {
            if (v - a).abs() < (v - axis[best]).abs() {
                best = i;
            }
        }
        Some(best)
    };
    Some((pick(lats, lat)?, pick(lons, lon)?))
}

pub fn mask_lookup(mask: &LandMask, lat: f64, lon: f64) -> Option<bool> {
    let g = &mask.grid;
    let lats: Vec<f64> = (0..g.nlat).map(|r| g.lat_at(r)).collect();
    let lons: Vec<f64> = (0..g.nlon).map(|c| g.lon_at(c)).collect();
    let (r, c) = nearest_cell(&lats, &lons, lat, lon)?;
    Some(mask.is_land(g.lat_at(r), g.lon_at(c)).expect("cell center inside mask"))
}

/// Window sum at the nearest cell: (total, partial).
pub fn precip_sum(grid: &PrecipGrid, inc: &Incident, days: i64) -> (Option<f64>, bool) {
    let g = &grid.grid;
    let lats: Vec<f64> = (0..g.nlat).map(|r| g.lat_at(r)).collect();
    let lons: Vec<f64> = (0..g.nlon).map(|c| g.lon_at(c)).collect();
    let Some((r, c)) = nearest_cell(&lats, &lons, inc.entity_lat, inc.entity_lon) else {
        return (None, false);
    };
    let back = (days - 1) / 2;
    let mut total = 0.0;
    let mut present = 0;
    let mut missing = 0;
    for off in -back..=(days - 1 - back) {
        let date = inc.impact_time.date() + chrono::Duration::days(off);
        let idx = (date - grid.start).num_days();
        let v = (0..grid.ndays as i64)
            .contains(&idx)
            .then(|| grid.get(idx as usize, r, c))
            .flatten();
        match v {
            Some(v) => {
                total += v as f64;
                present += 1;
            }
            None => missing += 1,
        }
    }
    ((present > 0).then_some(total), missing > 0)
}
