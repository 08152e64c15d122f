use std::fmt::Write as _;

use super::matrix::FeatureMatrix;
use super::pca::PcaModel;
use crate::error::{Error, Result};
use crate::panel::EventRow;
use crate::stats::quantile_sorted;
use crate::textio::fmt_opt;

pub const SMALL_GROUP: usize = 10;
pub const COMPOSITE_METRICS: [&str; 5] = [
    "max_wind",
    "precip3d",
    "trans_speed",
    "delta_goods_m1",
    "delta_service_m1",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Group {
    Low,
    High,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Low => "low",
            Group::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group: Group,
    /// Source-row indices in the group.
    pub members: Vec<usize>,
    pub small_sample: bool,
    /// Mean of each of [`COMPOSITE_METRICS`] over members with a value.
    pub means: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeComposites {
    pub pc: usize,
    pub low_threshold: f64,
    pub high_threshold: f64,
    pub low: GroupSummary,
    pub high: GroupSummary,
}

fn summarize(group: Group, members: Vec<usize>, rows: &[EventRow]) -> GroupSummary {
    let means = COMPOSITE_METRICS
        .iter()
        .map(|m| {
            let vals: Vec<f64> = members.iter().filter_map(|&i| rows[i].feature(m)).collect();
            crate::stats::mean(&vals)
        })
        .collect();
    GroupSummary {
        group,
        small_sample: members.len() < SMALL_GROUP,
        members,
        means,
    }
}

/// Splits rows by their score on component `pc`: strictly below the `low_q`
/// quantile, and strictly above the `high_q` quantile.
pub fn extreme_composites(
    model: &PcaModel,
    fm: &FeatureMatrix,
    rows: &[EventRow],
    pc: usize,
    low_q: f64,
    high_q: f64,
) -> Result<ExtremeComposites> {
    if pc >= model.n_components() {
        return Err(Error::InvalidParameter(format!(
            "component {pc} of {}",
            model.n_components()
        )));
    }
    if !(0.0..=1.0).contains(&low_q) || !(0.0..=1.0).contains(&high_q) || low_q > high_q {
        return Err(Error::InvalidParameter(format!("quantiles {low_q} / {high_q}")));
    }
    if fm.row_index.len() != model.scores.nrows() {
        return Err(Error::InvalidParameter(
            "scores do not align with the feature matrix".into(),
        ));
    }
    let scores: Vec<f64> = model.scores.column(pc).iter().copied().collect();
    let mut sorted = scores.clone();
    sorted.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&sorted, low_q).ok_or_else(|| Error::InsufficientData("no scores".into()))?;
    let hi = quantile_sorted(&sorted, high_q).ok_or_else(|| Error::InsufficientData("no scores".into()))?;
    let pick = |f: &dyn Fn(f64) -> bool| -> Vec<usize> {
        scores
            .iter()
            .zip(&fm.row_index)
            .filter(|(s, _)| f(**s))
            .map(|(_, &i)| i)
            .collect()
    };
    Ok(ExtremeComposites {
        pc,
        low_threshold: lo,
        high_threshold: hi,
        low: summarize(Group::Low, pick(&|s| s < lo), rows),
        high: summarize(Group::High, pick(&|s| s > hi), rows),
    })
}

pub fn loadings_to_csv(model: &PcaModel) -> String {
    let mut out = String::from("pc,feature,loading\n");
    for pc in 0..model.n_components() {
        for (j, name) in model.names().iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", pc + 1, name, fmt_opt(Some(model.components[(j, pc)])));
        }
    }
    out
}

pub fn variance_to_csv(model: &PcaModel) -> String {
    let mut out = String::from("pc,explained_variance,explained_variance_ratio\n");
    for (pc, (v, r)) in model
        .explained_variance
        .iter()
        .zip(&model.explained_variance_ratio)
        .enumerate()
    {
        let _ = writeln!(out, "{},{},{}", pc + 1, fmt_opt(Some(*v)), fmt_opt(Some(*r)));
    }
    out
}

pub fn composites_to_csv(all: &[ExtremeComposites]) -> String {
    let mut out = String::from("pc,group,metric,value,n,small_sample\n");
    for c in all {
        for g in [&c.low, &c.high] {
            for (m, v) in COMPOSITE_METRICS.iter().zip(&g.means) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    c.pc + 1,
                    g.group.name(),
                    m,
                    fmt_opt(*v),
                    g.members.len(),
                    u8::from(g.small_sample)
                );
            }
        }
    }
    out
}

/// Per-row group membership, for mapping.
pub fn membership_to_csv(all: &[ExtremeComposites], rows: &[EventRow]) -> String {
    let mut out = String::from("pc,group,storm_id,entity_id,impact_month\n");
    for c in all {
        for g in [&c.low, &c.high] {
            for &i in &g.members {
                let inc = &rows[i].incident;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    c.pc + 1,
                    g.group.name(),
                    inc.storm_id,
                    inc.entity_id,
                    inc.impact_month
                );
            }
        }
    }
    out
}
