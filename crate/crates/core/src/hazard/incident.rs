use std::path::Path;

use chrono::{Datelike, NaiveDateTime};

use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::ingest::ParseReport;
use crate::textio::{fmt_opt, opt_field, req_field};

/// One storm's exposure of one entity, with the hazard features extracted from
/// the matched over-land fixes.
#[derive(Debug, Clone, PartialEq)]
pub struct Incident {
    pub storm_id: String,
    pub entity_id: String,
    /// Time of the closest-approach fix (UTC).
    pub impact_time: NaiveDateTime,
    pub impact_month: YearMonth,
    pub impact_doy: u32,
    /// Maximum over matched fixes, kt.
    pub max_wind: Option<f64>,
    /// Minimum over matched fixes, hPa.
    pub min_pressure: Option<f64>,
    /// Accumulated precipitation over the attribution window, mm.
    pub precip3d: Option<f64>,
    /// Some day of the precipitation window had no data.
    pub precip_partial: bool,
    /// Translation speed at the closest-approach fix, kt.
    pub trans_speed: Option<f64>,
    pub min_distance: f64,
    pub entity_lat: f64,
    pub entity_lon: f64,
}

impl Incident {
    pub fn impact_date(&self) -> chrono::NaiveDate {
        self.impact_time.date()
    }

    pub(crate) fn at_time(
        storm_id: &str,
        entity_id: &str,
        time: NaiveDateTime,
        entity_lat: f64,
        entity_lon: f64,
        min_distance: f64,
    ) -> Self {
        Incident {
            storm_id: storm_id.to_string(),
            entity_id: entity_id.to_string(),
            impact_time: time,
            impact_month: YearMonth::of_date(time.date()),
            impact_doy: time.ordinal(),
            max_wind: None,
            min_pressure: None,
            precip3d: None,
            precip_partial: false,
            trans_speed: None,
            min_distance,
            entity_lat,
            entity_lon,
        }
    }
}

pub const INCIDENT_COLUMNS: [&str; 13] = [
    "storm_id",
    "entity_id",
    "impact_time",
    "impact_month",
    "impact_doy",
    "max_wind",
    "min_pressure",
    "precip3d",
    "precip_partial",
    "trans_speed",
    "min_distance",
    "entity_lat",
    "entity_lon",
];

/// Sorts by (storm_id, entity_id), the canonical on-disk order.
pub fn sort_incidents(incidents: &mut [Incident]) {
    incidents.sort_by(|a, b| (&a.storm_id, &a.entity_id).cmp(&(&b.storm_id, &b.entity_id)));
}

/// Field values of one incident in [`INCIDENT_COLUMNS`] order.
pub(crate) fn incident_fields(i: &Incident) -> Vec<String> {
    vec![
        i.storm_id.clone(),
        i.entity_id.clone(),
        i.impact_time.format("%Y-%m-%dT%H:%M:%S").to_string(),
        i.impact_month.to_string(),
        i.impact_doy.to_string(),
        fmt_opt(i.max_wind),
        fmt_opt(i.min_pressure),
        fmt_opt(i.precip3d),
        u8::from(i.precip_partial).to_string(),
        fmt_opt(i.trans_speed),
        i.min_distance.to_string(),
        i.entity_lat.to_string(),
        i.entity_lon.to_string(),
    ]
}

pub(crate) fn incident_from_fields(rec: &csv::StringRecord, ctx: &impl Fn() -> String) -> Result<Incident> {
    let impact_time = NaiveDateTime::parse_from_str(&rec[2], "%Y-%m-%dT%H:%M:%S")
        .map_err(|_| Error::format(format!("{}: bad impact_time", ctx())))?;
    let mut inc = Incident::at_time(
        &rec[0],
        &rec[1],
        impact_time,
        req_field(&rec[11], ctx)?,
        req_field(&rec[12], ctx)?,
        req_field(&rec[10], ctx)?,
    );
    inc.max_wind = opt_field(&rec[5], ctx)?;
    inc.min_pressure = opt_field(&rec[6], ctx)?;
    inc.precip3d = opt_field(&rec[7], ctx)?;
    inc.precip_partial = &rec[8] == "1";
    inc.trans_speed = opt_field(&rec[9], ctx)?;
    Ok(inc)
}

pub fn incidents_to_csv(incidents: &[Incident]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(INCIDENT_COLUMNS).expect("in-memory write");
    for i in incidents {
        w.write_record(incident_fields(i)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn write_incidents(path: &Path, incidents: &[Incident]) -> Result<()> {
    std::fs::write(path, incidents_to_csv(incidents)).map_err(|e| Error::io(path, e))
}

/// Reads an incident file. A header-only file yields an empty set.
pub fn read_incidents(path: &Path) -> Result<(Vec<Incident>, ParseReport)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != INCIDENT_COLUMNS {
        return Err(Error::format(format!("{}: unexpected incident header", path.display())));
    }
    let mut out = Vec::new();
    let mut report = ParseReport::default();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        report.rows_read += 1;
        let ctx = || format!("{} row {}", path.display(), line + 2);
        if rec.len() != INCIDENT_COLUMNS.len() {
            return Err(Error::format(format!("{}: wrong field count", ctx())));
        }
        out.push(incident_from_fields(&rec, &ctx)?);
        report.rows_kept += 1;
    }
    Ok((out, report))
}
