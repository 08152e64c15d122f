//! Regular latitude/longitude grids shared by the precipitation and land-mask rasters.

use crate::error::{Error, Result};

/// A regular grid of cell centers: `lat0 + row * dlat`, `lon0 + col * dlon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
    pub nlat: usize,
    pub nlon: usize,
}

const REL_TOL: f64 = 1e-6;

impl GridSpec {
    pub fn new(lat0: f64, lon0: f64, dlat: f64, dlon: f64, nlat: usize, nlon: usize) -> Result<Self> {
        if !(dlat > 0.0 && dlon > 0.0) || !dlat.is_finite() || !dlon.is_finite() {
            return Err(Error::format(format!(
                "grid spacing must be positive (dlat={dlat}, dlon={dlon})"
            )));
        }
        if nlat == 0 || nlon == 0 {
            return Err(Error::format("grid must have at least one cell"));
        }
        Ok(GridSpec {
            lat0,
            lon0,
            dlat,
            dlon,
            nlat,
            nlon,
        })
    }

    /// Infers a grid from the coordinate values observed in a long-format file.
    /// Every coordinate must sit on a node of a single regular lattice.
    pub fn infer(lats: &[f64], lons: &[f64]) -> Result<Self> {
        let (lat0, dlat, nlat) = infer_axis(lats, "latitude")?;
        let (lon0, dlon, nlon) = infer_axis(lons, "longitude")?;
        GridSpec::new(lat0, lon0, dlat, dlon, nlat, nlon)
    }

    pub fn cells(&self) -> usize {
        self.nlat * self.nlon
    }

    pub fn lat_at(&self, row: usize) -> f64 {
        self.lat0 + row as f64 * self.dlat
    }

    pub fn lon_at(&self, col: usize) -> f64 {
        self.lon0 + col as f64 * self.dlon
    }

    /// Cell whose center is nearest to the point, or `None` outside the grid extent
    /// (extent = cell centers padded by half a cell).
    pub fn nearest(&self, lat: f64, lon: f64) -> Option<(usize, usize)> {
        let r = ((lat - self.lat0) / self.dlat).round();
        let c = ((lon - self.lon0) / self.dlon).round();
        if r < 0.0 || c < 0.0 || r >= self.nlat as f64 || c >= self.nlon as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    /// Exact node lookup for a coordinate pair read from file.
    pub fn node_of(&self, lat: f64, lon: f64) -> Option<(usize, usize)> {
        let r = on_axis(lat, self.lat0, self.dlat, self.nlat)?;
        let c = on_axis(lon, self.lon0, self.dlon, self.nlon)?;
        Some((r, c))
    }

    pub fn flat(&self, row: usize, col: usize) -> usize {
        row * self.nlon + col
    }
}

fn on_axis(v: f64, origin: f64, step: f64, n: usize) -> Option<usize> {
    let k = (v - origin) / step;
    let kr = k.round();
    if (k - kr).abs() > REL_TOL || kr < 0.0 || kr >= n as f64 {
        None
    } else {
        Some(kr as usize)
    }
}

fn infer_axis(values: &[f64], name: &str) -> Result<(f64, f64, usize)> {
    let mut uniq: Vec<f64> = values.to_vec();
    uniq.sort_by(f64::total_cmp);
    uniq.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    match uniq.len() {
        0 => Err(Error::format(format!("no {name} values"))),
        1 => Err(Error::format(format!(
            "cannot infer {name} spacing from a single coordinate"
        ))),
        _ => {
            let step = uniq.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let origin = uniq[0];
            let last = *uniq.last().unwrap();
            let n = ((last - origin) / step).round() as usize + 1;
            for &v in &uniq {
                if on_axis(v, origin, step, n).is_none() {
                    return Err(Error::format(format!(
                        "inconsistent {name} spacing: {v} is not on the {step}-degree lattice starting at {origin}"
                    )));
                }
            }
            Ok((origin, step, n))
        }
    }
}
