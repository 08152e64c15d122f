use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::panel::{is_known_feature, EventRow};

/// Complete-case feature matrix drawn from event rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    /// Index into the source rows for each matrix row.
    pub row_index: Vec<usize>,
    /// Rows dropped for a missing value.
    pub n_missing: usize,
}

impl FeatureMatrix {
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a EventRow>, names: &[String]) -> Result<Self> {
        if let Some(bad) = names.iter().find(|n| !is_known_feature(n)) {
            return Err(Error::InvalidParameter(format!("unknown feature `{bad}`")));
        }
        let mut data = Vec::new();
        let mut row_index = Vec::new();
        let mut n_missing = 0;
        for (i, row) in rows.into_iter().enumerate() {
            let vals: Option<Vec<f64>> = names.iter().map(|n| row.feature(n).filter(|v| v.is_finite())).collect();
            match vals {
                Some(v) => {
                    data.extend(v);
                    row_index.push(i);
                }
                None => n_missing += 1,
            }
        }
        Ok(FeatureMatrix {
            names: names.to_vec(),
            x: DMatrix::from_row_slice(row_index.len(), names.len(), &data),
            row_index,
            n_missing,
        })
    }
}
