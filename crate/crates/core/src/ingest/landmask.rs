use std::path::Path;

use super::{csv_reader, read_text, Columns, ParseReport};
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Boolean land/sea raster. Cells absent from the input file are sea.
#[derive(Debug, Clone, PartialEq)]
pub struct LandMask {
    pub grid: GridSpec,
    pub land: Vec<bool>,
}

impl LandMask {
    pub fn new(grid: GridSpec) -> Self {
        LandMask {
            grid,
            land: vec![false; grid.cells()],
        }
    }

    pub fn set(&mut self, row: usize, col: usize, land: bool) {
        let i = self.grid.flat(row, col);
        self.land[i] = land;
    }

    /// Land flag of the nearest cell, or `None` when the point is outside the raster.
    pub fn is_land(&self, lat: f64, lon: f64) -> Option<bool> {
        let (r, c) = self.grid.nearest(lat, lon)?;
        Some(self.land[self.grid.flat(r, c)])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("lat,lon,land\n");
        for r in 0..self.grid.nlat {
            for c in 0..self.grid.nlon {
                out.push_str(&format!(
                    "{},{},{}\n",
                    self.grid.lat_at(r),
                    self.grid.lon_at(c),
                    u8::from(self.land[self.grid.flat(r, c)])
                ));
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Parses `lat,lon,land` rows (land is 0/1) on a regular grid.
pub fn parse_landmask(path: &Path) -> Result<(LandMask, ParseReport)> {
    let text = read_text(path)?;
    let mut rdr = csv_reader(&text);
    let headers = rdr.headers()?.clone();
    let cols = Columns::resolve(&headers, &["lat", "lon", "land"], "land mask")?;
    let mut report = ParseReport::default();
    let mut cells = Vec::new();
    for rec in rdr.records() {
        report.rows_read += 1;
        let rec = match rec {
            Ok(r) if r.len() == headers.len() => r,
            _ => {
                report.drop_row("malformed_row");
                continue;
            }
        };
        let lat = cols.get(&rec, 0).and_then(|s| s.parse::<f64>().ok());
        let lon = cols.get(&rec, 1).and_then(|s| s.parse::<f64>().ok());
        let land = match cols.get(&rec, 2) {
            Some("1") | Some("true") => Some(true),
            Some("0") | Some("false") => Some(false),
            _ => None,
        };
        match (lat, lon, land) {
            (Some(lat), Some(lon), Some(land)) if (-90.0..=90.0).contains(&lat) && (-180.0..=360.0).contains(&lon) => {
                cells.push((lat, lon, land));
                report.rows_kept += 1;
            }
            _ => report.drop_row("bad_value"),
        }
    }
    if cells.is_empty() {
        return Err(Error::format(format!("{}: no usable land-mask rows", path.display())));
    }
    let lats: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let lons: Vec<f64> = cells.iter().map(|c| c.1).collect();
    let grid = GridSpec::infer(&lats, &lons)?;
    let mut mask = LandMask::new(grid);
    for (lat, lon, land) in cells {
        let (r, c) = grid.node_of(lat, lon).expect("on inferred lattice");
        mask.set(r, c, land);
    }
    Ok((mask, report))
}
