use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Days, NaiveDate};

use super::{csv_reader, read_text, Columns, ParseReport};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub const PRECIP_MAGIC: &[u8; 5] = b"SPGR1";

/// Daily precipitation on a regular grid, mm/day. Missing cells are NaN.
#[derive(Debug, Clone)]
pub struct PrecipGrid {
    pub grid: GridSpec,
    pub start: NaiveDate,
    pub ndays: usize,
    /// `[day][row][col]`, row-major.
    pub values: Vec<f32>,
}

impl PrecipGrid {
    pub fn new(grid: GridSpec, start: NaiveDate, ndays: usize) -> Self {
        PrecipGrid {
            grid,
            start,
            ndays,
            values: vec![f32::NAN; ndays * grid.cells()],
        }
    }

    pub fn day_index(&self, date: NaiveDate) -> Option<usize> {
        let d = (date - self.start).num_days();
        (d >= 0 && (d as usize) < self.ndays).then_some(d as usize)
    }

    pub fn date_at(&self, idx: usize) -> NaiveDate {
        self.start + Days::new(idx as u64)
    }

    fn offset(&self, day: usize, row: usize, col: usize) -> usize {
        day * self.grid.cells() + self.grid.flat(row, col)
    }

    pub fn get(&self, day: usize, row: usize, col: usize) -> Option<f32> {
        let v = self.values[self.offset(day, row, col)];
        (!v.is_nan()).then_some(v)
    }

    pub fn set(&mut self, day: usize, row: usize, col: usize, v: f32) {
        let o = self.offset(day, row, col);
        self.values[o] = v;
    }

    /// Value on `date` at the cell nearest to the point. `None` when the date or
    /// point is outside the grid, or the cell is missing.
    pub fn at(&self, date: NaiveDate, lat: f64, lon: f64) -> Option<f32> {
        let day = self.day_index(date)?;
        let (r, c) = self.grid.nearest(lat, lon)?;
        self.get(day, r, c)
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| !v.is_nan()).count()
    }

    /// Bitwise equality, treating every NaN payload as equal.
    pub fn bit_identical(&self, other: &PrecipGrid) -> bool {
        self.grid == other.grid
            && self.start == other.start
            && self.ndays == other.ndays
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()))
    }
}

/// Parses precipitation from either the long-format text (`date,lat,lon,precip_mm`)
/// or the packed binary format; the format is detected from the leading bytes.
pub fn parse_precip(path: &Path) -> Result<(PrecipGrid, ParseReport)> {
    let mut head = [0u8; 5];
    let is_binary = std::fs::File::open(path)
        .and_then(|mut f| f.read_exact(&mut head))
        .map(|_| &head == PRECIP_MAGIC)
        .unwrap_or(false);
    if is_binary {
        let grid = read_precip_binary(path)?;
        let report = ParseReport {
            rows_read: grid.values.len(),
            rows_kept: grid.values.len(),
            ..Default::default()
        };
        return Ok((grid, report));
    }
    parse_precip_csv(path)
}

struct PrecipRow {
    date: NaiveDate,
    lat: f64,
    lon: f64,
    value: Option<f32>,
}

fn parse_precip_csv(path: &Path) -> Result<(PrecipGrid, ParseReport)> {
    let text = read_text(path)?;
    let mut rdr = csv_reader(&text);
    let headers = rdr.headers()?.clone();
    let cols = Columns::resolve(&headers, &["date", "lat", "lon", "precip_mm"], "precipitation")?;

    let mut report = ParseReport::default();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        report.rows_read += 1;
        let rec = match rec {
            Ok(r) if r.len() == headers.len() => r,
            _ => {
                report.drop_row("malformed_row");
                continue;
            }
        };
        let Some(date) = cols
            .get(&rec, 0)
            .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
        else {
            report.drop_row("bad_date");
            continue;
        };
        let lat = cols.get(&rec, 1).and_then(|s| s.parse::<f64>().ok());
        let lon = cols.get(&rec, 2).and_then(|s| s.parse::<f64>().ok());
        let (Some(lat), Some(lon)) = (lat, lon) else {
            report.drop_row("bad_position");
            continue;
        };
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=360.0).contains(&lon) {
            report.drop_row("bad_position");
            continue;
        }
        let raw = cols.get(&rec, 3).unwrap_or("");
        let value = if raw.is_empty() || raw.eq_ignore_ascii_case("nan") || raw.eq_ignore_ascii_case("na") {
            None
        } else {
            match raw.parse::<f32>() {
                Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
                Ok(v) if v.is_finite() => {
                    report.drop_row("negative_value");
                    continue;
                }
                _ => {
                    report.drop_row("bad_value");
                    continue;
                }
            }
        };
        rows.push(PrecipRow { date, lat, lon, value });
    }
    if rows.is_empty() {
        return Err(Error::format(format!(
            "{}: no usable precipitation rows",
            path.display()
        )));
    }

    let lats: Vec<f64> = rows.iter().map(|r| r.lat).collect();
    let lons: Vec<f64> = rows.iter().map(|r| r.lon).collect();
    let grid = GridSpec::infer(&lats, &lons)?;
    let start = rows.iter().map(|r| r.date).min().unwrap();
    let end = rows.iter().map(|r| r.date).max().unwrap();
    let ndays = (end - start).num_days() as usize + 1;
    let mut out = PrecipGrid::new(grid, start, ndays);

    let mut seen = HashSet::with_capacity(rows.len());
    for r in &rows {
        let day = out.day_index(r.date).expect("date within inferred range");
        let (row, col) = grid.node_of(r.lat, r.lon).expect("coordinate on inferred lattice");
        if !seen.insert((day, row, col)) {
            return Err(Error::DuplicateKey(format!(
                "(date={}, lat={}, lon={})",
                r.date, r.lat, r.lon
            )));
        }
        if let Some(v) = r.value {
            out.set(day, row, col, v);
        }
        report.rows_kept += 1;
    }
    debug_assert!(report.is_balanced());
    Ok((out, report))
}

fn days_since_epoch(d: NaiveDate) -> i64 {
    (d - NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()).num_days()
}

/// Writes the packed binary layout: magic, eight little-endian 64-bit header
/// fields, then `ndays * nlat * nlon` little-endian f32 values.
pub fn write_precip_binary(path: &Path, grid: &PrecipGrid) -> Result<()> {
    let g = &grid.grid;
    let mut buf = Vec::with_capacity(5 + 64 + grid.values.len() * 4);
    buf.extend_from_slice(PRECIP_MAGIC);
    for v in [g.lat0, g.lon0, g.dlat, g.dlon] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in [g.nlat as u64, g.nlon as u64, grid.ndays as u64] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&days_since_epoch(grid.start).to_le_bytes());
    for v in &grid.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_precip_binary(path: &Path) -> Result<PrecipGrid> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 5 + 64 || &bytes[..5] != PRECIP_MAGIC {
        return Err(Error::format(format!(
            "{}: not a packed precipitation file",
            path.display()
        )));
    }
    let word = |i: usize| -> [u8; 8] { bytes[5 + 8 * i..13 + 8 * i].try_into().unwrap() };
    let f = |i| f64::from_le_bytes(word(i));
    let u = |i| u64::from_le_bytes(word(i)) as usize;
    let grid = GridSpec::new(f(0), f(1), f(2), f(3), u(4), u(5))?;
    let ndays = u(6);
    let start_days = i64::from_le_bytes(word(7));
    let start = NaiveDate::from_ymd_opt(1970, 1, 1)
        .unwrap()
        .checked_add_signed(chrono::TimeDelta::days(start_days))
        .ok_or_else(|| Error::format("start date out of range"))?;
    let n = ndays
        .checked_mul(grid.cells())
        .ok_or_else(|| Error::format("grid dimensions overflow"))?;
    let body = &bytes[69..];
    if body.len() != n * 4 {
        return Err(Error::format(format!(
            "{}: expected {} value bytes, found {}",
            path.display(),
            n * 4,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(PrecipGrid {
        grid,
        start,
        ndays,
        values,
    })
}

/// Writes long-format text, one row per present cell.
pub fn write_precip_csv(path: &Path, grid: &PrecipGrid) -> Result<()> {
    let mut out = String::from("date,lat,lon,precip_mm\n");
    for day in 0..grid.ndays {
        let date = grid.date_at(day);
        for r in 0..grid.grid.nlat {
            for c in 0..grid.grid.nlon {
                if let Some(v) = grid.get(day, r, c) {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        date.format("%Y-%m-%d"),
                        grid.grid.lat_at(r),
                        grid.grid.lon_at(c),
                        v
                    ));
                }
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
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

    #[test]
    fn two_by_two_two_days() {
        let f = write(
            "date,lat,lon,precip_mm\n\
             2005-08-29,30.0,-90.0,10\n2005-08-29,30.0,-89.5,11\n\
             2005-08-29,30.5,-90.0,12\n2005-08-29,30.5,-89.5,13\n\
             2005-08-30,30.0,-90.0,1\n2005-08-30,30.0,-89.5,2\n\
             2005-08-30,30.5,-90.0,3\n2005-08-30,30.5,-89.5,4.5\n",
        );
        let (g, rep) = parse_precip(f.path()).unwrap();
        assert_eq!(g.values.len(), 8);
        assert_eq!(g.present_count(), 8);
        assert_eq!(g.ndays, 2);
        let d = NaiveDate::from_ymd_opt(2005, 8, 30).unwrap();
        assert_eq!(g.at(d, 30.4, -89.6), Some(4.5));
        assert_eq!(rep.rows_kept, 8);
    }

    #[test]
    fn duplicate_key_is_named() {
        let f = write(
            "date,lat,lon,precip_mm\n2005-08-29,30.0,-90.0,10\n2005-08-29,30.5,-90.0,1\n\
             2005-08-29,30.0,-89.5,1\n2005-08-29,30.0,-90.0,11\n",
        );
        let err = parse_precip(f.path()).unwrap_err();
        assert!(matches!(err, Error::DuplicateKey(ref k) if k.contains("2005-08-29") && k.contains("-90")));
    }

    #[test]
    fn inconsistent_spacing_is_a_format_error() {
        let f = write(
            "date,lat,lon,precip_mm\n2005-08-29,30.0,-90.0,1\n2005-08-29,30.5,-90.0,1\n\
             2005-08-29,30.7,-89.5,1\n",
        );
        assert!(matches!(parse_precip(f.path()), Err(Error::Format(_))));
    }

    #[test]
    fn gaps_become_missing_and_binary_round_trips() {
        let f = write(
            "date,lat,lon,precip_mm\n2005-08-29,30.0,-90.0,0.1\n2005-08-31,30.5,-89.5,7.25\n\
             2005-08-31,30.5,-90.0,\n",
        );
        let (g, _) = parse_precip(f.path()).unwrap();
        assert_eq!(g.ndays, 3);
        assert_eq!(g.present_count(), 2);
        let bin = tempfile::NamedTempFile::new().unwrap();
        write_precip_binary(bin.path(), &g).unwrap();
        let (back, _) = parse_precip(bin.path()).unwrap();
        assert!(back.bit_identical(&g));
    }

    #[test]
    fn truncated_binary_rejected() {
        let f = write("SPGR1 too short");
        assert!(matches!(parse_precip(f.path()), Err(Error::Format(_))));
    }
}
