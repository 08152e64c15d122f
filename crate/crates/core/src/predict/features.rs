use chrono::NaiveDateTime;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::ingest::Sector;
use crate::panel::{delta_column, is_known_feature, parse_delta_name, EventRow};
use crate::patterns::FeatureMatrix;

pub const DEFAULT_STORM_FEATURES: [&str; 7] = [
    "max_wind",
    "precip3d",
    "trans_speed",
    "min_distance",
    "impact_doy",
    "entity_lat",
    "entity_lon",
];

/// Ordered predictors and the target column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub features: Vec<String>,
    pub target: String,
}

impl FeatureSpec {
    /// Storm metrics, timing, location and the target sector's log10 basis,
    /// predicting its Month-1 change.
    pub fn default_for(sector: Sector) -> Self {
        let mut features: Vec<String> = DEFAULT_STORM_FEATURES.iter().map(|s| s.to_string()).collect();
        features.push(format!("log10_basis_{}", sector.name()));
        FeatureSpec {
            features,
            target: delta_column(sector, 1),
        }
    }

    pub fn new(features: Vec<String>, target: impl Into<String>) -> Result<Self> {
        let spec = FeatureSpec {
            features,
            target: target.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn target_sector(&self) -> Option<Sector> {
        parse_delta_name(&self.target).map(|(s, _)| s)
    }

    pub fn validate(&self) -> Result<()> {
        let sector = self
            .target_sector()
            .ok_or_else(|| Error::InvalidParameter(format!("target `{}` is not a delta column", self.target)))?;
        if self.features.is_empty() {
            return Err(Error::InvalidParameter("no features".into()));
        }
        for (i, f) in self.features.iter().enumerate() {
            if !is_known_feature(f) {
                return Err(Error::InvalidParameter(format!("unknown feature `{f}`")));
            }
            if self.features[..i].contains(f) {
                return Err(Error::InvalidParameter(format!("feature `{f}` listed twice")));
            }
            if f == "min_pressure" {
                return Err(Error::InvalidParameter(
                    "min_pressure is collinear with max_wind and is not allowed as a predictor".into(),
                ));
            }
            if f.starts_with("delta_") {
                return Err(Error::InvalidParameter(format!(
                    "employment change `{f}` cannot be a predictor"
                )));
            }
            if let Some(s) = f.strip_prefix("log10_basis_") {
                if s != sector.name() {
                    return Err(Error::InvalidParameter(format!(
                        "basis `{f}` belongs to another sector than the target `{}`",
                        self.target
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn index_of(&self, feature: &str) -> Option<usize> {
        self.features.iter().position(|f| f == feature)
    }
}

/// Complete-case rows in impact-time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: FeatureSpec,
    /// Raw (unscaled) predictors.
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    pub times: Vec<NaiveDateTime>,
    /// Source-row index for each dataset row.
    pub row_index: Vec<usize>,
    pub n_missing: usize,
}

impl Dataset {
    pub fn from_rows(rows: &[EventRow], spec: &FeatureSpec) -> Result<Self> {
        spec.validate()?;
        let mut cols = spec.features.clone();
        cols.push(spec.target.clone());
        let fm = FeatureMatrix::from_rows(rows, &cols)?;
        let p = spec.features.len();
        let mut order: Vec<usize> = (0..fm.row_index.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&rows[fm.row_index[a]].incident, &rows[fm.row_index[b]].incident);
            (ra.impact_time, &ra.storm_id, &ra.entity_id).cmp(&(rb.impact_time, &rb.storm_id, &rb.entity_id))
        });
        Ok(Dataset {
            spec: spec.clone(),
            x: DMatrix::from_fn(order.len(), p, |r, c| fm.x[(order[r], c)]),
            y: order.iter().map(|&r| fm.x[(r, p)]).collect(),
            times: order
                .iter()
                .map(|&r| rows[fm.row_index[r]].incident.impact_time)
                .collect(),
            row_index: order.iter().map(|&r| fm.row_index[r]).collect(),
            n_missing: fm.n_missing,
        })
    }

    /// Builds a dataset from plain arrays, rows assumed already in time order.
    pub fn from_arrays(spec: FeatureSpec, x: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        if x.nrows() != y.len() || x.ncols() != spec.features.len() {
            return Err(Error::InvalidParameter("dataset dimensions disagree".into()));
        }
        let n = y.len();
        let t0 = chrono::NaiveDate::from_ymd_opt(1970, 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("valid epoch");
        Ok(Dataset {
            spec,
            x,
            y,
            times: (0..n).map(|i| t0 + chrono::Duration::hours(i as i64)).collect(),
            row_index: (0..n).collect(),
            n_missing: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            spec: self.spec.clone(),
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            times: idx.iter().map(|&i| self.times[i]).collect(),
            row_index: idx.iter().map(|&i| self.row_index[i]).collect(),
            n_missing: 0,
        }
    }
}
