use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::model::Predictor;
use crate::error::{Error, Result};
use crate::textio::fmt_opt;

pub const TAIL_BAND: (f64, f64) = (-0.10, -0.05);
pub const LOWER_BOUND_NOTE: &str =
    "random forests underestimate the most extreme losses; treat scenario tails as a lower bound";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            lo: -0.3,
            hi: 0.3,
            bins: 60,
        }
    }
}

/// Bin counts plus values below `lo` and at or above `hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<usize>,
    pub below: usize,
    pub above: usize,
}

impl HistogramSpec {
    pub fn edge(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / self.bins as f64
    }

    pub fn count(&self, values: &[f64]) -> Histogram {
        let mut h = Histogram {
            counts: vec![0; self.bins],
            below: 0,
            above: 0,
        };
        let width = (self.hi - self.lo) / self.bins as f64;
        for &v in values {
            if v < self.lo {
                h.below += 1;
            } else if v >= self.hi {
                h.above += 1;
            } else {
                let i = (((v - self.lo) / width) as usize).min(self.bins - 1);
                h.counts[i] += 1;
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub wind_factor: f64,
    pub precip_factor: f64,
    pub baseline: Vec<f64>,
    pub scenario: Vec<f64>,
    pub mean_baseline: f64,
    pub mean_scenario: f64,
    pub hist_spec: HistogramSpec,
    pub hist_baseline: Histogram,
    pub hist_scenario: Histogram,
    pub band: (f64, f64),
    pub band_mass_baseline: f64,
    pub band_mass_scenario: f64,
    /// Scenario over baseline band mass; `None` when the baseline mass is 0.
    pub band_ratio: Option<f64>,
    pub identical_to_baseline: bool,
}

fn band_mass(v: &[f64], band: (f64, f64)) -> f64 {
    v.iter().filter(|x| (band.0..=band.1).contains(*x)).count() as f64 / v.len() as f64
}

/// Scales raw wind and 3-day precipitation, rescales with the training scaler
/// and predicts.
pub fn scenario_predict(
    pred: &Predictor,
    x_raw: &DMatrix<f64>,
    wind_factor: f64,
    precip_factor: f64,
    hist: HistogramSpec,
) -> Result<ScenarioResult> {
    if !(wind_factor > 0.0 && wind_factor.is_finite() && precip_factor > 0.0 && precip_factor.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scaling factors must be positive, got wind {wind_factor} precip {precip_factor}"
        )));
    }
    if hist.bins == 0 || hist.lo >= hist.hi {
        return Err(Error::InvalidParameter("histogram range".into()));
    }
    if x_raw.ncols() != pred.spec.features.len() {
        return Err(Error::InvalidParameter(
            "feature matrix does not match the model".into(),
        ));
    }
    if x_raw.nrows() == 0 {
        return Err(Error::InsufficientData("no rows to score".into()));
    }
    let mut scaled = x_raw.clone();
    for (name, f) in [("max_wind", wind_factor), ("precip3d", precip_factor)] {
        match pred.spec.index_of(name) {
            Some(j) => scaled.column_mut(j).iter_mut().for_each(|v| *v *= f),
            None if f != 1.0 => {
                return Err(Error::InvalidParameter(format!(
                    "model has no `{name}` feature to scale"
                )));
            }
            None => {}
        }
    }
    let baseline = pred.predict_raw(x_raw);
    let scenario = pred.predict_raw(&scaled);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mb, ms) = (band_mass(&baseline, TAIL_BAND), band_mass(&scenario, TAIL_BAND));
    Ok(ScenarioResult {
        wind_factor,
        precip_factor,
        mean_baseline: mean(&baseline),
        mean_scenario: mean(&scenario),
        hist_spec: hist,
        hist_baseline: hist.count(&baseline),
        hist_scenario: hist.count(&scenario),
        band: TAIL_BAND,
        band_mass_baseline: mb,
        band_mass_scenario: ms,
        band_ratio: (mb > 0.0).then(|| ms / mb),
        identical_to_baseline: baseline.iter().zip(&scenario).all(|(a, b)| a.to_bits() == b.to_bits()),
        baseline,
        scenario,
    })
}

pub fn scenario_summary_to_csv(r: &ScenarioResult) -> String {
    let mut out = String::from("key,value\n");
    let rows = [
        ("wind_factor", fmt_opt(Some(r.wind_factor))),
        ("precip_factor", fmt_opt(Some(r.precip_factor))),
        ("n", r.baseline.len().to_string()),
        ("mean_baseline", fmt_opt(Some(r.mean_baseline))),
        ("mean_scenario", fmt_opt(Some(r.mean_scenario))),
        ("band_low", fmt_opt(Some(r.band.0))),
        ("band_high", fmt_opt(Some(r.band.1))),
        ("band_mass_baseline", fmt_opt(Some(r.band_mass_baseline))),
        ("band_mass_scenario", fmt_opt(Some(r.band_mass_scenario))),
        ("band_ratio", fmt_opt(r.band_ratio)),
        ("identical_to_baseline", u8::from(r.identical_to_baseline).to_string()),
        ("estimate", "lower_bound".to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
    let _ = writeln!(out, "# {LOWER_BOUND_NOTE}");
    out
}

pub fn scenario_histogram_to_csv(r: &ScenarioResult) -> String {
    let mut out = String::from("bin_low,bin_high,baseline,scenario\n");
    let h = &r.hist_spec;
    let _ = writeln!(
        out,
        "-inf,{},{},{}",
        fmt_opt(Some(h.lo)),
        r.hist_baseline.below,
        r.hist_scenario.below
    );
    for i in 0..h.bins {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_opt(Some(h.edge(i))),
            fmt_opt(Some(h.edge(i + 1))),
            r.hist_baseline.counts[i],
            r.hist_scenario.counts[i]
        );
    }
    let _ = writeln!(
        out,
        "{},inf,{},{}",
        fmt_opt(Some(h.hi)),
        r.hist_baseline.above,
        r.hist_scenario.above
    );
    out
}

/// Per-row predictions; `ids` labels each row.
pub fn scenario_distribution_to_csv(r: &ScenarioResult, ids: &[(String, String)]) -> String {
    let mut out = String::from("storm_id,entity_id,baseline,scenario\n");
    for ((s, e), (b, x)) in ids.iter().zip(r.baseline.iter().zip(&r.scenario)) {
        let _ = writeln!(out, "{s},{e},{},{}", fmt_opt(Some(*b)), fmt_opt(Some(*x)));
    }
    out
}
