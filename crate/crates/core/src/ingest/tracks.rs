use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDateTime;

use super::{csv_reader, opt_f64, read_text, Columns, ParseReport};
use crate::error::{Error, Result};

/// One best-track fix. Times are UTC.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPoint {
    pub time: NaiveDateTime,
    pub lat: f64,
    pub lon: f64,
    /// Maximum sustained wind, kt.
    pub max_wind: Option<f64>,
    /// Minimum central pressure, hPa.
    pub min_pressure: Option<f64>,
    /// Ground speed of the storm center, kt. Filled by
    /// [`annotate_translation_speed`](crate::hazard::annotate_translation_speed)
    /// on the full, unmasked track.
    pub trans_speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub storm_id: String,
    /// Strictly increasing in time; never empty.
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn peak_wind(&self) -> Option<f64> {
        self.points
            .iter()
            .filter_map(|p| p.max_wind)
            .fold(None, |acc, w| Some(acc.map_or(w, |a: f64| a.max(w))))
    }
}

/// Storms keyed and ordered by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackSet {
    pub tracks: Vec<Track>,
}

impl TrackSet {
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.tracks.iter().map(|t| t.points.len()).sum()
    }

    pub fn get(&self, storm_id: &str) -> Option<&Track> {
        self.tracks.iter().find(|t| t.storm_id == storm_id)
    }
}

pub(crate) const TRACK_COLUMNS: [&str; 6] = ["storm_id", "iso_time", "lat", "lon", "wind_kt", "pres_hpa"];

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim().trim_end_matches('Z');
    [
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M",
    ]
    .iter()
    .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn normalize_lon(lon: f64) -> Option<f64> {
    if (-180.0..180.0).contains(&lon) {
        Some(lon)
    } else if lon == 180.0 {
        Some(-180.0)
    } else {
        None
    }
}

/// Parses a best-track export with columns
/// `storm_id,iso_time,lat,lon,wind_kt,pres_hpa`.
///
/// Rows with unparseable or out-of-range time/position are dropped and counted.
/// Missing or invalid wind and pressure are kept as missing. Points are sorted
/// by time per storm and repeated timestamps are dropped.
pub fn parse_tracks(path: &Path) -> Result<(TrackSet, ParseReport)> {
    let text = read_text(path)?;
    let mut rdr = csv_reader(&text);
    let headers = rdr.headers()?.clone();
    let cols = Columns::resolve(&headers, &TRACK_COLUMNS, "tracks")?;

    let mut report = ParseReport::default();
    let mut by_storm: BTreeMap<String, Vec<TrackPoint>> = BTreeMap::new();
    for rec in rdr.records() {
        report.rows_read += 1;
        let rec = match rec {
            Ok(r) if r.len() == headers.len() => r,
            _ => {
                report.drop_row("malformed_row");
                continue;
            }
        };
        let storm_id = cols.get(&rec, 0).unwrap_or("").to_string();
        if storm_id.is_empty() {
            report.drop_row("missing_storm_id");
            continue;
        }
        let Some(time) = cols.get(&rec, 1).and_then(parse_time) else {
            report.drop_row("bad_time");
            continue;
        };
        let lat = opt_f64(cols.get(&rec, 2)).ok().flatten();
        let lon = opt_f64(cols.get(&rec, 3)).ok().flatten().and_then(normalize_lon);
        let (Some(lat), Some(lon)) = (lat.filter(|l| (-90.0..=90.0).contains(l)), lon) else {
            report.drop_row("bad_position");
            continue;
        };
        let max_wind = opt_f64(cols.get(&rec, 4)).ok().flatten().filter(|w| *w >= 0.0);
        let min_pressure = opt_f64(cols.get(&rec, 5))
            .ok()
            .flatten()
            .filter(|p| *p > 800.0 && *p < 1100.0);
        by_storm.entry(storm_id).or_default().push(TrackPoint {
            time,
            lat,
            lon,
            max_wind,
            min_pressure,
            trans_speed: None,
        });
    }

    let mut tracks = Vec::with_capacity(by_storm.len());
    for (storm_id, mut points) in by_storm {
        points.sort_by_key(|p| p.time);
        let before = points.len();
        points.dedup_by_key(|p| p.time);
        for _ in points.len()..before {
            report.drop_row("duplicate_time");
        }
        report.rows_kept += points.len();
        tracks.push(Track { storm_id, points });
    }
    debug_assert!(report.is_balanced());
    Ok((TrackSet { tracks }, report))
}

pub fn write_tracks(path: &Path, tracks: &TrackSet) -> Result<()> {
    let mut out = String::from("storm_id,iso_time,lat,lon,wind_kt,pres_hpa\n");
    for t in &tracks.tracks {
        for p in &t.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.storm_id,
                p.time.format("%Y-%m-%d %H:%M:%S"),
                p.lat,
                p.lon,
                super::fmt_opt(p.max_wind),
                super::fmt_opt(p.min_pressure)
            ));
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    const HEADER: &str = "storm_id,iso_time,lat,lon,wind_kt,pres_hpa\n";

    #[test]
    fn one_storm_four_rows() {
        let f = write(&format!(
            "{HEADER}AL01,2005-08-29 00:00:00,28.0,-89.0,120,920\n\
             AL01,2005-08-29 03:00:00,28.5,-89.3,110,\n\
             AL01,2005-08-29 06:00:00,29.0,-89.6,,\n\
             AL01,2005-08-29 09:00:00,29.5,-89.7,100,935\n"
        ));
        let (ts, rep) = parse_tracks(f.path()).unwrap();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts.tracks[0].points.len(), 4);
        assert_eq!(ts.tracks[0].points[2].max_wind, None);
        assert_eq!(ts.tracks[0].points[1].min_pressure, None);
        assert_eq!(rep.rows_kept, 4);
        assert!(rep.is_balanced());
    }

    #[test]
    fn out_of_bounds_latitude_is_dropped() {
        let f = write(&format!(
            "{HEADER}AL01,2005-08-29 00:00:00,91.0,-89.0,120,920\n\
             AL01,2005-08-29 03:00:00,28.5,-89.3,110,930\n"
        ));
        let (ts, rep) = parse_tracks(f.path()).unwrap();
        assert_eq!(ts.n_points(), 1);
        assert_eq!(rep.dropped.get("bad_position"), Some(&1));
        assert!(rep.is_balanced());
    }

    #[test]
    fn unsorted_and_duplicate_times() {
        let f = write(&format!(
            "{HEADER}B,2005-08-29 03:00:00,28.5,-89.3,110,930\n\
             B,2005-08-29 00:00:00,28.0,-89.0,120,920\n\
             B,2005-08-29 03:00:00,28.6,-89.3,110,930\n\
             A,2005-08-29T00:00:00Z,20.0,-60.0,30,1005\n"
        ));
        let (ts, rep) = parse_tracks(f.path()).unwrap();
        assert_eq!(ts.tracks[0].storm_id, "A");
        let b = ts.get("B").unwrap();
        assert!(b.points.windows(2).all(|w| w[0].time < w[1].time));
        assert_eq!(rep.dropped.get("duplicate_time"), Some(&1));
        assert!(rep.is_balanced());
    }

    #[test]
    fn header_and_empty_errors() {
        let f = write("storm,time,lat,lon\nA,2005-01-01 00:00:00,1,2\n");
        assert!(matches!(parse_tracks(f.path()), Err(Error::Format(_))));
        let f = write("");
        assert!(matches!(parse_tracks(f.path()), Err(Error::EmptyInput { .. })));
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"storm_id,iso_time,lat,lon,wind_kt,pres_hpa\n\xff\xfe,1,2\n")
            .unwrap();
        assert!(matches!(parse_tracks(f.path()), Err(Error::Encoding { .. })));
    }
}
