#![allow(dead_code)]

pub mod oracle;

use chrono::NaiveDate;
use stormpanel_core::hazard::Incident;
use stormpanel_core::panel::{EventRow, N_LAGS, N_SECTORS};
use stormpanel_core::{Sector, YearMonth};

/// Event row with the given storm metrics; other fields get plain defaults.
pub fn row(i: usize, date: NaiveDate, wind: f64, precip: f64, trans: f64) -> EventRow {
    let time = date.and_hms_opt(12, 0, 0).unwrap();
    let incident = Incident {
        storm_id: format!("S{:04}", i / 7),
        entity_id: format!("{:05}", 10000 + i),
        impact_time: time,
        impact_month: YearMonth::of_date(date),
        impact_doy: chrono::Datelike::ordinal(&date),
        max_wind: Some(wind),
        min_pressure: Some(1010.0 - wind),
        precip3d: Some(precip),
        precip_partial: false,
        trans_speed: Some(trans),
        min_distance: 50.0 + (i % 150) as f64,
        entity_lat: 25.0 + (i % 13) as f64 * 0.5,
        entity_lon: -95.0 + (i % 17) as f64 * 0.7,
    };
    EventRow {
        incident,
        coastal_state: true,
        overlap: false,
        log10_basis: [Some(3.0); N_SECTORS],
        deltas: [[Some(0.0); N_LAGS]; N_SECTORS],
        covariates: Some([40_000.0, 60_000.0, 30.0]),
    }
}

pub fn set_delta(row: &mut EventRow, sector: Sector, lag: usize, v: f64) {
    row.deltas[sector.index()][lag] = Some(v);
}

pub fn day(offset: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(1990, 6, 1).unwrap() + chrono::Duration::days(offset)
}
