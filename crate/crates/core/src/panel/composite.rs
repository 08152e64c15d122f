use rayon::prelude::*;

use super::table::{EventRow, EventTable};
use crate::error::{Error, Result};
use crate::ingest::Sector;
use crate::stats::{self, TTest};

/// Hazard thresholds used by the named conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardThresholds {
    pub strong_wind_kt: f64,
    pub extreme_wind_kt: f64,
    pub extreme_precip_mm: f64,
}

impl Default for HazardThresholds {
    fn default() -> Self {
        HazardThresholds {
            strong_wind_kt: 64.0,
            extreme_wind_kt: 96.0,
            extreme_precip_mm: 150.0,
        }
    }
}

/// Row filter over event-table fields. Missing values never satisfy a threshold.
#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    All,
    Never,
    WindAtLeast(f64),
    PrecipAtLeast(f64),
    Coastal(bool),
    And(Vec<Condition>),
}

pub const CONDITION_NAMES: [&str; 5] = ["all", "strong_wind", "extreme_wind", "extreme_precip", "compound"];

impl Condition {
    /// `compound` is strong wind together with extreme precipitation.
    pub fn named(name: &str, th: &HazardThresholds) -> Option<Condition> {
        Some(match name {
            "all" => Condition::All,
            "strong_wind" => Condition::WindAtLeast(th.strong_wind_kt),
            "extreme_wind" => Condition::WindAtLeast(th.extreme_wind_kt),
            "extreme_precip" => Condition::PrecipAtLeast(th.extreme_precip_mm),
            "compound" => Condition::And(vec![
                Condition::WindAtLeast(th.strong_wind_kt),
                Condition::PrecipAtLeast(th.extreme_precip_mm),
            ]),
            _ => return None,
        })
    }

    pub fn matches(&self, row: &EventRow) -> bool {
        match self {
            Condition::All => true,
            Condition::Never => false,
            Condition::WindAtLeast(t) => row.incident.max_wind.is_some_and(|w| w >= *t),
            Condition::PrecipAtLeast(t) => row.incident.precip3d.is_some_and(|p| p >= *t),
            Condition::Coastal(c) => row.coastal_state == *c,
            Condition::And(cs) => cs.iter().all(|c| c.matches(row)),
        }
    }

    pub fn select<'a>(&'a self, table: &'a EventTable) -> impl Iterator<Item = &'a EventRow> + 'a {
        table.rows.iter().filter(move |r| self.matches(r))
    }
}

pub const MIN_GROUP_SIZE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub skew: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedSample {
    pub sector: Sector,
    pub lag: usize,
    pub values: Vec<f64>,
    /// Absent for empty samples, and for samples below the minimum group size
    /// unless small groups were explicitly allowed.
    pub summary: Option<Summary>,
    pub below_min_size: bool,
}

fn summarize(values: &[f64]) -> Option<Summary> {
    Some(Summary {
        n: values.len(),
        mean: stats::mean(values)?,
        sd: stats::std_dev(values, 1).unwrap_or(f64::NAN),
        skew: stats::skewness(values),
    })
}

/// Employment changes of `sector` at `lag` for rows satisfying `condition`.
pub fn conditioned_distribution(
    table: &EventTable,
    condition: &Condition,
    sector: Sector,
    lag: usize,
    min_size: usize,
    allow_small: bool,
) -> ConditionedSample {
    let values: Vec<f64> = condition.select(table).filter_map(|r| r.delta(sector, lag)).collect();
    let below = values.len() < min_size;
    let summary = if below && !allow_small {
        None
    } else {
        summarize(&values)
    };
    ConditionedSample {
        sector,
        lag,
        values,
        summary,
        below_min_size: below,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestStatus {
    Tested,
    TooFewObservations,
    ZeroVariance,
}

impl TestStatus {
    pub fn name(self) -> &'static str {
        match self {
            TestStatus::Tested => "tested",
            TestStatus::TooFewObservations => "too_few",
            TestStatus::ZeroVariance => "zero_variance",
        }
    }
}

/// Mean change for one (sector, lag) cell with a two-sided one-sample t-test against zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeCell {
    pub sector: Sector,
    pub lag: usize,
    pub mean: f64,
    pub n: usize,
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
    pub significant_99: bool,
    pub status: TestStatus,
}

pub const SIGNIFICANCE_99: f64 = 0.01;

pub fn composite_cell(sector: Sector, lag: usize, values: &[f64]) -> Option<CompositeCell> {
    let mean = stats::mean(values)?;
    let (t_stat, p_value, status) = match stats::one_sample_t_test(values) {
        TTest::Done { t, p, .. } => (Some(t), Some(p), TestStatus::Tested),
        TTest::TooFewObservations => (None, None, TestStatus::TooFewObservations),
        TTest::ZeroVariance => (None, None, TestStatus::ZeroVariance),
    };
    Some(CompositeCell {
        sector,
        lag,
        mean,
        n: values.len(),
        t_stat,
        p_value,
        significant_99: p_value.is_some_and(|p| p < SIGNIFICANCE_99),
        status,
    })
}

/// Sector × lag grid of composite means. Cells with no observations are omitted.
pub fn composite_matrix(
    table: &EventTable,
    condition: &Condition,
    sectors: &[Sector],
    lags: std::ops::RangeInclusive<usize>,
) -> Result<Vec<CompositeCell>> {
    if *lags.end() >= super::table::N_LAGS {
        return Err(Error::InvalidParameter(format!("lag {} beyond Month 12", lags.end())));
    }
    let rows: Vec<&EventRow> = condition.select(table).collect();
    let cells: Vec<(Sector, usize)> = sectors
        .iter()
        .flat_map(|&s| lags.clone().map(move |l| (s, l)))
        .collect();
    Ok(cells
        .par_iter()
        .filter_map(|&(s, l)| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.delta(s, l)).collect();
            composite_cell(s, l, &vals)
        })
        .collect())
}

pub fn composites_to_csv(cells: &[CompositeCell]) -> String {
    let mut out = String::from("sector,lag,mean,n,t,p,sig99,status\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.sector.name(),
            c.lag,
            c.mean,
            c.n,
            crate::textio::fmt_opt(c.t_stat),
            crate::textio::fmt_opt(c.p_value),
            u8::from(c.significant_99),
            c.status.name()
        ));
    }
    out
}
