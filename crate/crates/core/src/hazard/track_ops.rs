use crate::ingest::{LandMask, Track, TrackPoint, TrackSet};

use super::geo::{haversine_km, KMH_PER_KT};

/// Ground speed of the storm center at each fix, kt.
///
/// Interior points use the central difference between their neighbours,
/// end points the one-sided difference. A single-point track, or a zero
/// elapsed time across the difference, yields `None`.
pub fn translation_speed(points: &[TrackPoint]) -> Vec<Option<f64>> {
    let n = points.len();
    if n < 2 {
        return vec![None; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            let (pa, pb) = (&points[a], &points[b]);
            let hours = (pb.time - pa.time).num_seconds() as f64 / 3600.0;
            if hours <= 0.0 {
                return None;
            }
            let km = haversine_km(pa.lat, pa.lon, pb.lat, pb.lon);
            Some(km / hours / KMH_PER_KT)
        })
        .collect()
}

/// Fills `trans_speed` on every point from the full track.
pub fn annotate_translation_speed(tracks: &mut TrackSet) {
    for t in &mut tracks.tracks {
        let speeds = translation_speed(&t.points);
        for (p, s) in t.points.iter_mut().zip(speeds) {
            p.trans_speed = s;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MaskReport {
    pub kept: usize,
    pub over_water: usize,
    pub outside_mask: usize,
    pub storms_removed: usize,
}

/// Keeps only fixes whose nearest land-mask cell is land. Fixes outside the
/// mask extent count as not-land. Storms left without fixes are removed.
pub fn mask_overland(tracks: &TrackSet, mask: &LandMask) -> (TrackSet, MaskReport) {
    let mut report = MaskReport::default();
    let mut out = Vec::with_capacity(tracks.len());
    for t in &tracks.tracks {
        let points: Vec<TrackPoint> = t
            .points
            .iter()
            .filter(|p| match mask.is_land(p.lat, p.lon) {
                Some(true) => {
                    report.kept += 1;
                    true
                }
                Some(false) => {
                    report.over_water += 1;
                    false
                }
                None => {
                    report.outside_mask += 1;
                    false
                }
            })
            .cloned()
            .collect();
        if points.is_empty() {
            report.storms_removed += 1;
        } else {
            out.push(Track {
                storm_id: t.storm_id.clone(),
                points,
            });
        }
    }
    (TrackSet { tracks: out }, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use chrono::NaiveDate;

    fn pt(h: i64, lat: f64, lon: f64) -> TrackPoint {
        TrackPoint {
            time: NaiveDate::from_ymd_opt(2005, 8, 29)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap()
                + chrono::TimeDelta::hours(h),
            lat,
            lon,
            max_wind: Some(50.0),
            min_pressure: None,
            trans_speed: None,
        }
    }

    #[test]
    fn stationary_storm_has_zero_speed() {
        let pts = vec![pt(0, 25.0, -80.0), pt(3, 25.0, -80.0), pt(6, 25.0, -80.0)];
        assert!(translation_speed(&pts).iter().all(|s| *s == Some(0.0)));
    }

    #[test]
    fn hundred_km_in_three_hours() {
        // 100 km due north along a meridian
        let dlat = (100.0 / 6371.0_f64).to_degrees();
        let pts = vec![pt(0, 25.0, -80.0), pt(3, 25.0 + dlat, -80.0)];
        let s = translation_speed(&pts);
        for v in s {
            assert!((v.unwrap() - 18.0).abs() < 0.01, "{v:?}");
        }
    }

    #[test]
    fn degenerate_tracks() {
        assert_eq!(translation_speed(&[pt(0, 25.0, -80.0)]), vec![None]);
        let pts = vec![pt(0, 25.0, -80.0), pt(0, 25.5, -80.0)];
        assert_eq!(translation_speed(&pts), vec![None, None]);
    }

    fn coastline_mask() -> LandMask {
        // land north of 30N on a 0.25 degree grid
        let grid = GridSpec::new(25.0, -95.0, 0.25, 0.25, 41, 61).unwrap();
        let mut m = LandMask::new(grid);
        for r in 0..grid.nlat {
            for c in 0..grid.nlon {
                m.set(r, c, grid.lat_at(r) >= 30.0);
            }
        }
        m
    }

    #[test]
    fn all_ocean_track_is_removed() {
        let ts = TrackSet {
            tracks: vec![Track {
                storm_id: "X".into(),
                points: vec![pt(0, 26.0, -90.0), pt(3, 27.0, -90.0)],
            }],
        };
        let (out, rep) = mask_overland(&ts, &coastline_mask());
        assert!(out.is_empty());
        assert_eq!(rep.storms_removed, 1);
        assert_eq!(rep.over_water, 2);
    }

    #[test]
    fn land_cell_center_retained_and_outside_counted() {
        let ts = TrackSet {
            tracks: vec![Track {
                storm_id: "X".into(),
                points: vec![pt(0, 30.0, -90.0), pt(3, 31.0, -90.0), pt(6, 40.0, -90.0)],
            }],
        };
        let (out, rep) = mask_overland(&ts, &coastline_mask());
        assert_eq!(out.n_points(), 2);
        assert_eq!(rep.outside_mask, 1);
    }
}
