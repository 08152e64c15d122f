use std::collections::HashMap;

use super::geo::km_to_degrees;

/// Latitude above which the longitude window is abandoned and all columns scanned.
const POLAR_CLAMP_DEG: f64 = 80.0;

/// Buckets points on a regular lat/lon lattice and returns a superset of the
/// points within a given great-circle radius.
#[derive(Debug, Clone)]
pub struct GridIndex {
    cell_deg: f64,
    ncols: i64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl GridIndex {
    pub fn build(points: impl IntoIterator<Item = (f64, f64)>, cell_deg: f64) -> Self {
        assert!(cell_deg > 0.0 && cell_deg <= 90.0);
        let ncols = (360.0 / cell_deg).ceil() as i64;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, (lat, lon)) in points.into_iter().enumerate() {
            buckets
                .entry((Self::row(lat, cell_deg), Self::col(lon, cell_deg, ncols)))
                .or_default()
                .push(i);
        }
        GridIndex {
            cell_deg,
            ncols,
            buckets,
        }
    }

    fn row(lat: f64, cell: f64) -> i64 {
        ((lat + 90.0) / cell).floor() as i64
    }

    fn col(lon: f64, cell: f64, ncols: i64) -> i64 {
        (((lon + 180.0) / cell).floor() as i64).rem_euclid(ncols)
    }

    /// Calls `visit` with every indexed point that may lie within `radius_km` of
    /// (lat, lon). Candidates still need an exact distance check.
    pub fn candidates(&self, lat: f64, lon: f64, radius_km: f64, mut visit: impl FnMut(usize)) {
        let theta = km_to_degrees(radius_km) * 1.01 + 1e-9;
        let lat_lo = (lat - theta).max(-90.0);
        let lat_hi = (lat + theta).min(90.0);
        let reach = lat.abs() + theta;
        let all_cols = if reach >= POLAR_CLAMP_DEG {
            true
        } else {
            let dlon = theta / reach.to_radians().cos() * 1.01;
            2.0 * dlon + self.cell_deg >= 360.0
        };
        let (c_lo, c_hi) = if all_cols {
            (0, self.ncols - 1)
        } else {
            let dlon = theta / reach.to_radians().cos() * 1.01;
            let lo = ((lon - dlon + 180.0) / self.cell_deg).floor() as i64;
            let hi = ((lon + dlon + 180.0) / self.cell_deg).floor() as i64;
            (lo, hi.min(lo + self.ncols - 1))
        };
        for r in Self::row(lat_lo, self.cell_deg)..=Self::row(lat_hi, self.cell_deg) {
            for c in c_lo..=c_hi {
                if let Some(ids) = self.buckets.get(&(r, c.rem_euclid(self.ncols))) {
                    ids.iter().for_each(|&i| visit(i));
                }
            }
        }
    }
}
