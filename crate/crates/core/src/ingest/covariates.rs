use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{csv_reader, opt_f64, read_text, Columns, ParseReport};
use crate::calendar::{MonthRange, YearMonth};
use crate::error::Result;

/// Socioeconomic covariates entering the fixed-effects regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CovariateVar {
    IncomePerCapita,
    WorkagePop,
    Education,
}

impl CovariateVar {
    pub const ALL: [CovariateVar; 3] = [
        CovariateVar::IncomePerCapita,
        CovariateVar::WorkagePop,
        CovariateVar::Education,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CovariateVar::IncomePerCapita => "income_per_capita",
            CovariateVar::WorkagePop => "workage_pop",
            CovariateVar::Education => "education",
        }
    }
}

/// Sparse covariate observations ("anchors") per entity and variable.
/// Annual values are anchored at January of their year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CovariatePanel {
    pub anchors: BTreeMap<String, [Vec<(YearMonth, f64)>; 3]>,
}

impl CovariatePanel {
    pub fn add(&mut self, entity: &str, var: CovariateVar, month: YearMonth, value: f64) {
        let slot = &mut self.anchors.entry(entity.to_string()).or_default()[var as usize];
        slot.push((month, value));
        slot.sort_by_key(|a| a.0);
    }
}

fn parse_period(s: &str) -> Option<YearMonth> {
    let s = s.trim();
    if s.contains('-') {
        s.parse().ok()
    } else {
        YearMonth::new(s.parse().ok()?, 1)
    }
}

/// Parses `entity_id,period,income_per_capita,workage_pop,education`, where
/// `period` is `YYYY` (anchored at January) or `YYYY-MM`. Empty fields are
/// missing; negative values or education outside [0, 100] drop the row.
pub fn parse_covariates(path: &Path) -> Result<(CovariatePanel, ParseReport)> {
    let text = read_text(path)?;
    let mut rdr = csv_reader(&text);
    let headers = rdr.headers()?.clone();
    let cols = Columns::resolve(
        &headers,
        &["entity_id", "period", "income_per_capita", "workage_pop", "education"],
        "covariates",
    )?;
    let mut report = ParseReport::default();
    let mut panel = CovariatePanel::default();
    let mut seen = BTreeSet::new();
    for rec in rdr.records() {
        report.rows_read += 1;
        let rec = match rec {
            Ok(r) if r.len() == headers.len() => r,
            _ => {
                report.drop_row("malformed_row");
                continue;
            }
        };
        let entity = cols.get(&rec, 0).unwrap_or("").to_string();
        let Some(month) = cols.get(&rec, 1).and_then(parse_period) else {
            report.drop_row("bad_period");
            continue;
        };
        if entity.is_empty() {
            report.drop_row("missing_id");
            continue;
        }
        let mut vals = [None; 3];
        let mut ok = true;
        for (i, var) in CovariateVar::ALL.iter().enumerate() {
            match opt_f64(cols.get(&rec, 2 + i)) {
                Ok(Some(v)) if v >= 0.0 && (*var != CovariateVar::Education || v <= 100.0) => vals[i] = Some(v),
                Ok(None) => {}
                _ => ok = false,
            }
        }
        if !ok {
            report.drop_row("invalid_value");
            continue;
        }
        if !seen.insert((entity.clone(), month)) {
            report.drop_row("duplicate_key");
            continue;
        }
        for (var, v) in CovariateVar::ALL.iter().zip(vals) {
            if let Some(v) = v {
                panel.add(&entity, *var, month, v);
            }
        }
        report.rows_kept += 1;
    }
    Ok((panel, report))
}

/// Covariates on a monthly calendar.
#[derive(Debug, Clone)]
pub struct MonthlyCovariates {
    pub calendar: MonthRange,
    /// Per entity, per variable, one value per calendar month.
    pub series: BTreeMap<String, [Vec<f64>; 3]>,
    /// Entities lacking anchors for at least one variable.
    pub missing: BTreeSet<String>,
}

impl MonthlyCovariates {
    pub fn get(&self, entity: &str, month: YearMonth) -> Option<[f64; 3]> {
        let idx = self.calendar.index_of(month)?;
        let s = self.series.get(entity)?;
        Some([s[0][idx], s[1][idx], s[2][idx]])
    }

    pub fn is_available(&self, entity: &str) -> bool {
        self.series.contains_key(entity)
    }
}

fn value_at(anchors: &[(YearMonth, f64)], t: i64, extrapolate: bool) -> f64 {
    let first = anchors[0];
    let last = anchors[anchors.len() - 1];
    if anchors.len() == 1 || t <= first.0.ordinal() {
        return first.1;
    }
    if t >= last.0.ordinal() {
        if !extrapolate {
            return last.1;
        }
        let prev = anchors[anchors.len() - 2];
        let slope = (last.1 - prev.1) / (last.0.ordinal() - prev.0.ordinal()) as f64;
        return last.1 + slope * (t - last.0.ordinal()) as f64;
    }
    let hi = anchors.partition_point(|a| a.0.ordinal() <= t);
    let (m0, v0) = anchors[hi - 1];
    let (m1, v1) = anchors[hi];
    let span = (m1.ordinal() - m0.ordinal()) as f64;
    v0 + (v1 - v0) * (t - m0.ordinal()) as f64 / span
}

/// Linear interpolation between anchors on the monthly calendar. Before the first
/// anchor values are held constant; after the last anchor education continues
/// along the slope of its last two anchors (clamped to [0, 100]) and the other
/// variables are held constant. One anchor gives a constant series.
pub fn interpolate_covariates(cov: &CovariatePanel, calendar: MonthRange) -> MonthlyCovariates {
    let mut series = BTreeMap::new();
    let mut missing = BTreeSet::new();
    for (entity, vars) in &cov.anchors {
        if vars.iter().any(Vec::is_empty) {
            missing.insert(entity.clone());
            continue;
        }
        let build = |var: CovariateVar| -> Vec<f64> {
            let anchors = &vars[var as usize];
            calendar
                .iter()
                .map(|m| {
                    let v = value_at(anchors, m.ordinal(), var == CovariateVar::Education);
                    if var == CovariateVar::Education {
                        v.clamp(0.0, 100.0)
                    } else {
                        v.max(0.0)
                    }
                })
                .collect()
        };
        series.insert(
            entity.clone(),
            [
                build(CovariateVar::IncomePerCapita),
                build(CovariateVar::WorkagePop),
                build(CovariateVar::Education),
            ],
        );
    }
    MonthlyCovariates {
        calendar,
        series,
        missing,
    }
}
