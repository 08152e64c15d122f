use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::hazard::{incident_fields, incident_from_fields, Incident, INCIDENT_COLUMNS};
use crate::ingest::{EmploymentPanel, EntityRegistry, MonthlyCovariates, Ownership, Sector, SeriesKey};
use crate::textio::{fmt_opt, opt_field, req_field};

/// Months after impact tracked per row: Month 0 through Month 12.
pub const N_LAGS: usize = 13;
pub const N_SECTORS: usize = 13;

pub const DEFAULT_MIN_EMPLOYMENT: f64 = 100.0;

/// Relative employment change from the month before impact to `impact_month + lag`.
///
/// `None` when the Month −1 count is missing or zero, or the later count is
/// missing or zero (zero counts in the census files mark suppressed cells).
pub fn fractional_change(panel: &EmploymentPanel, key: &SeriesKey, impact_month: YearMonth, lag: i64) -> Option<f64> {
    let series = panel.series(key)?;
    let base = *series.get(&impact_month.offset(-1))?;
    let later = *series.get(&impact_month.offset(lag))?;
    if base <= 0.0 || later <= 0.0 {
        return None;
    }
    Some((later - base) / base)
}

/// An incident joined with employment changes, employment basis and covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub incident: Incident,
    pub coastal_state: bool,
    /// Another storm hit the same entity within twelve months either side.
    pub overlap: bool,
    /// log10 of Month −1 employment per sector.
    pub log10_basis: [Option<f64>; N_SECTORS],
    /// `[sector][lag]` fractional changes.
    pub deltas: [[Option<f64>; N_LAGS]; N_SECTORS],
    /// Income per capita, work-age population, education at the impact month.
    pub covariates: Option<[f64; 3]>,
}

impl EventRow {
    pub fn delta(&self, sector: Sector, lag: usize) -> Option<f64> {
        self.deltas[sector.index()].get(lag).copied().flatten()
    }

    pub fn basis(&self, sector: Sector) -> Option<f64> {
        self.log10_basis[sector.index()]
    }

    pub fn covariates_available(&self) -> bool {
        self.covariates.is_some()
    }

    /// Looks up a numeric column by its name in the event-table file.
    pub fn feature(&self, name: &str) -> Option<f64> {
        let i = &self.incident;
        match name {
            "max_wind" => i.max_wind,
            "min_pressure" => i.min_pressure,
            "precip3d" => i.precip3d,
            "trans_speed" => i.trans_speed,
            "min_distance" => Some(i.min_distance),
            "impact_doy" => Some(i.impact_doy as f64),
            "entity_lat" => Some(i.entity_lat),
            "entity_lon" => Some(i.entity_lon),
            "income_per_capita" => self.covariates.map(|c| c[0]),
            "workage_pop" => self.covariates.map(|c| c[1]),
            "education" => self.covariates.map(|c| c[2]),
            _ => {
                if let Some(s) = name.strip_prefix("log10_basis_") {
                    return self.basis(Sector::from_name(s)?);
                }
                let (sector, lag) = parse_delta_name(name)?;
                self.delta(sector, lag)
            }
        }
    }
}

pub fn delta_column(sector: Sector, lag: usize) -> String {
    format!("delta_{}_m{lag}", sector.name())
}

/// Parses `delta_<sector>_m<lag>`.
pub fn parse_delta_name(name: &str) -> Option<(Sector, usize)> {
    let rest = name.strip_prefix("delta_")?;
    let (s, lag) = rest.rsplit_once("_m")?;
    let lag: usize = lag.parse().ok()?;
    (lag < N_LAGS).then_some(())?;
    Some((Sector::from_name(s)?, lag))
}

pub fn is_known_feature(name: &str) -> bool {
    matches!(
        name,
        "max_wind"
            | "min_pressure"
            | "precip3d"
            | "trans_speed"
            | "min_distance"
            | "impact_doy"
            | "entity_lat"
            | "entity_lon"
            | "income_per_capita"
            | "workage_pop"
            | "education"
    ) || name
        .strip_prefix("log10_basis_")
        .is_some_and(|s| Sector::from_name(s).is_some())
        || parse_delta_name(name).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableParams {
    pub ownership: Ownership,
    /// Minimum Month −1 employment in both the goods and service sectors.
    pub min_employment: f64,
}

impl Default for TableParams {
    fn default() -> Self {
        TableParams {
            ownership: Ownership::Private,
            min_employment: DEFAULT_MIN_EMPLOYMENT,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct EventTable {
    pub rows: Vec<EventRow>,
    /// Incidents excluded, by reason.
    pub exclusions: BTreeMap<String, usize>,
}

impl EventTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn build_row(
    inc: &Incident,
    panel: &EmploymentPanel,
    entities: &EntityRegistry,
    covariates: Option<&MonthlyCovariates>,
    params: &TableParams,
) -> std::result::Result<EventRow, &'static str> {
    let entity = entities.get(&inc.entity_id).ok_or("unknown_entity")?;
    let key = |s: Sector| SeriesKey::new(inc.entity_id.clone(), params.ownership, s);
    if panel.series(&key(Sector::Goods)).is_none() && panel.series(&key(Sector::Service)).is_none() {
        return Err("unmatched_area");
    }
    let m = inc.impact_month;
    let basis = |s: Sector| panel.get(&key(s), m.offset(-1));
    let (Some(goods), Some(service)) = (basis(Sector::Goods), basis(Sector::Service)) else {
        return Err("missing_basis");
    };
    if goods < params.min_employment || service < params.min_employment {
        return Err("min_employment");
    }
    let mut log10_basis = [None; N_SECTORS];
    let mut deltas = [[None; N_LAGS]; N_SECTORS];
    for s in Sector::ALL {
        let k = key(s);
        log10_basis[s.index()] = basis(s).filter(|v| *v > 0.0).map(f64::log10);
        for (lag, d) in deltas[s.index()].iter_mut().enumerate() {
            *d = fractional_change(panel, &k, m, lag as i64);
        }
    }
    Ok(EventRow {
        incident: inc.clone(),
        coastal_state: entity.coastal_state,
        overlap: false,
        log10_basis,
        deltas,
        covariates: covariates.and_then(|c| c.get(&inc.entity_id, m)),
    })
}

/// Joins incidents with employment changes at Months 0..12 relative to Month −1.
///
/// Excluded incidents are counted by reason: `unknown_entity`, `unmatched_area`
/// (no goods or service series for the entity), `missing_basis`, and
/// `min_employment`. Rows whose entity lacks covariates are kept with
/// `covariates = None`.
pub fn build_event_table(
    incidents: &[Incident],
    panel: &EmploymentPanel,
    entities: &EntityRegistry,
    covariates: Option<&MonthlyCovariates>,
    params: &TableParams,
) -> EventTable {
    let results: Vec<_> = incidents
        .par_iter()
        .map(|inc| build_row(inc, panel, entities, covariates, params))
        .collect();
    let mut table = EventTable::default();
    for r in results {
        match r {
            Ok(row) => table.rows.push(row),
            Err(reason) => *table.exclusions.entry(reason.to_string()).or_insert(0) += 1,
        }
    }
    flag_overlaps(&mut table.rows);
    table
}

fn flag_overlaps(rows: &mut [EventRow]) {
    let mut by_entity: BTreeMap<&str, Vec<(usize, i64, &str)>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        by_entity.entry(r.incident.entity_id.as_str()).or_default().push((
            i,
            r.incident.impact_month.ordinal(),
            r.incident.storm_id.as_str(),
        ));
    }
    let mut flagged = Vec::new();
    for hits in by_entity.values() {
        for &(i, m, s) in hits {
            if hits
                .iter()
                .any(|&(j, m2, s2)| j != i && s2 != s && (m2 - m).abs() <= 12)
            {
                flagged.push(i);
            }
        }
    }
    for i in flagged {
        rows[i].overlap = true;
    }
}

fn table_header() -> Vec<String> {
    let mut h: Vec<String> = INCIDENT_COLUMNS.iter().map(|s| s.to_string()).collect();
    for c in [
        "coastal_state",
        "overlap",
        "covariates_available",
        "income_per_capita",
        "workage_pop",
        "education",
    ] {
        h.push(c.to_string());
    }
    for s in Sector::ALL {
        h.push(format!("log10_basis_{}", s.name()));
    }
    for s in Sector::ALL {
        for lag in 0..N_LAGS {
            h.push(delta_column(s, lag));
        }
    }
    h
}

pub fn event_table_to_csv(table: &EventTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(table_header()).expect("in-memory write");
    for row in &table.rows {
        let mut fields = incident_fields(&row.incident);
        fields.push(u8::from(row.coastal_state).to_string());
        fields.push(u8::from(row.overlap).to_string());
        fields.push(u8::from(row.covariates_available()).to_string());
        for k in 0..3 {
            fields.push(fmt_opt(row.covariates.map(|c| c[k])));
        }
        fields.extend(row.log10_basis.iter().map(|v| fmt_opt(*v)));
        for s in &row.deltas {
            fields.extend(s.iter().map(|v| fmt_opt(*v)));
        }
        w.write_record(fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn write_event_table(path: &Path, table: &EventTable) -> Result<()> {
    std::fs::write(path, event_table_to_csv(table)).map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_event_table`]. Exclusion counts are not
/// stored in the file and come back empty.
pub fn read_event_table(path: &Path) -> Result<EventTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = table_header();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    if rdr.headers()?.iter().collect::<Vec<_>>() != header {
        return Err(Error::format(format!(
            "{}: unexpected event-table header",
            path.display()
        )));
    }
    let n_inc = INCIDENT_COLUMNS.len();
    let mut rows = Vec::new();
    for (ln, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let ctx = || format!("{} row {}", path.display(), ln + 2);
        if rec.len() != header.len() {
            return Err(Error::format(format!("{}: expected {} fields", ctx(), header.len())));
        }
        let incident = incident_from_fields(&rec, &ctx)?;
        let flag = |i: usize| &rec[n_inc + i] == "1";
        let cov = if flag(2) {
            Some([
                req_field(&rec[n_inc + 3], &ctx)?,
                req_field(&rec[n_inc + 4], &ctx)?,
                req_field(&rec[n_inc + 5], &ctx)?,
            ])
        } else {
            None
        };
        let mut log10_basis = [None; N_SECTORS];
        let b0 = n_inc + 6;
        for (k, v) in log10_basis.iter_mut().enumerate() {
            *v = opt_field(&rec[b0 + k], &ctx)?;
        }
        let d0 = b0 + N_SECTORS;
        let mut deltas = [[None; N_LAGS]; N_SECTORS];
        for (s, lags) in deltas.iter_mut().enumerate() {
            for (l, v) in lags.iter_mut().enumerate() {
                *v = opt_field(&rec[d0 + s * N_LAGS + l], &ctx)?;
            }
        }
        rows.push(EventRow {
            incident,
            coastal_state: flag(0),
            overlap: flag(1),
            log10_basis,
            deltas,
            covariates: cov,
        });
    }
    Ok(EventTable {
        rows,
        exclusions: BTreeMap::new(),
    })
}
