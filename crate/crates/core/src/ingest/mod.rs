//! Parsers for the pipeline's input files.
//!
//! All text inputs are comma-separated with a header row (RFC 4180 quoting) and
//! must be UTF-8. Each parser returns its typed structure together with a
//! [`ParseReport`] that accounts for every data row read.

mod covariates;
mod employment;
mod entities;
mod landmask;
mod precip;
mod tracks;

pub use covariates::{interpolate_covariates, parse_covariates, CovariatePanel, CovariateVar, MonthlyCovariates};
pub use employment::{parse_employment, write_employment, EmploymentPanel, Ownership, Sector, SeriesKey};
pub use entities::{parse_entities, Entity, EntityRegistry};
pub use landmask::{parse_landmask, LandMask};
pub use precip::{parse_precip, read_precip_binary, write_precip_binary, write_precip_csv, PrecipGrid, PRECIP_MAGIC};
pub use tracks::{parse_tracks, write_tracks, Track, TrackPoint, TrackSet};

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Row accounting for one parsed file: `rows_read == rows_kept + sum(dropped)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dropped: BTreeMap<String, usize>,
}

impl ParseReport {
    pub(crate) fn drop_row(&mut self, reason: &str) {
        *self.dropped.entry(reason.to_string()).or_insert(0) += 1;
    }

    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.rows_read == self.rows_kept + self.dropped_total()
    }
}

/// Reads a whole file as UTF-8 text; strips a leading byte-order mark.
pub(crate) fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(Error::EmptyInput {
            path: path.to_path_buf(),
        });
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Encoding {
        path: path.to_path_buf(),
    })?;
    Ok(match text.strip_prefix('\u{feff}') {
        Some(rest) => rest.to_string(),
        None => text,
    })
}

pub(crate) fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// Column positions resolved from a header row.
pub(crate) struct Columns {
    idx: Vec<usize>,
}

impl Columns {
    pub(crate) fn resolve(headers: &csv::StringRecord, required: &[&str], what: &str) -> Result<Self> {
        let mut idx = Vec::with_capacity(required.len());
        for name in required {
            let pos = headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| {
                    Error::format(format!(
                        "{what}: malformed header, missing column '{name}' (expected {})",
                        required.join(",")
                    ))
                })?;
            idx.push(pos);
        }
        Ok(Columns { idx })
    }

    pub(crate) fn get<'r>(&self, rec: &'r csv::StringRecord, i: usize) -> Option<&'r str> {
        rec.get(self.idx[i])
    }
}

/// Parses an optional float field; empty, `NA`, `NaN` → `Ok(None)`; garbage → `Err(())`.
pub(crate) fn opt_f64(s: Option<&str>) -> std::result::Result<Option<f64>, ()> {
    match s.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) if v.eq_ignore_ascii_case("na") || v.eq_ignore_ascii_case("nan") => Ok(None),
        Some(v) => match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(Some(x)),
            _ => Err(()),
        },
    }
}

pub(crate) use crate::textio::fmt_opt;
