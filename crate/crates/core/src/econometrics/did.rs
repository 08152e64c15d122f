use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::calendar::{MonthRange, YearMonth};
use crate::error::{Error, Result};
use crate::hazard::Incident;
use crate::ingest::{EmploymentPanel, MonthlyCovariates, Ownership, Sector, SeriesKey};
use crate::linalg::least_squares;
use crate::stats::quantile_sorted;

/// Outcome levels per entity on a shared monthly calendar, with the months in
/// which each entity was hit.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomePanel {
    pub calendar: MonthRange,
    pub entities: Vec<String>,
    /// `values[entity][calendar index]`
    pub values: Vec<Vec<Option<f64>>>,
    pub events: Vec<BTreeSet<YearMonth>>,
    /// Optional covariates per entity and calendar index, used by the adjusted mode.
    pub covariates: Option<Vec<Vec<Option<[f64; 3]>>>>,
}

impl OutcomePanel {
    pub fn new(calendar: MonthRange) -> Self {
        OutcomePanel {
            calendar,
            entities: Vec::new(),
            values: Vec::new(),
            events: Vec::new(),
            covariates: None,
        }
    }

    /// Adds an entity. `values` must span the calendar.
    pub fn push(
        &mut self,
        entity: impl Into<String>,
        values: Vec<Option<f64>>,
        events: BTreeSet<YearMonth>,
    ) -> Result<()> {
        if values.len() != self.calendar.len() {
            return Err(Error::InvalidParameter(format!(
                "outcome series has {} months, calendar has {}",
                values.len(),
                self.calendar.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("outcome series".into()));
        }
        self.entities.push(entity.into());
        self.values.push(values);
        self.events.push(events);
        Ok(())
    }

    fn value(&self, e: usize, m: YearMonth) -> Option<f64> {
        self.calendar.index_of(m).and_then(|i| self.values[e][i])
    }

    fn covariate(&self, e: usize, m: YearMonth) -> Option<[f64; 3]> {
        let cov = self.covariates.as_ref()?;
        self.calendar.index_of(m).and_then(|i| cov[e][i])
    }

    /// log10 employment of one sector, with events taken from incident impact
    /// months. Entities without the series are skipped.
    pub fn from_employment(
        panel: &EmploymentPanel,
        ownership: Ownership,
        sector: Sector,
        incidents: &[Incident],
        covariates: Option<&MonthlyCovariates>,
        calendar: MonthRange,
    ) -> Result<Self> {
        let mut hits: BTreeMap<&str, BTreeSet<YearMonth>> = BTreeMap::new();
        for inc in incidents {
            hits.entry(inc.entity_id.as_str()).or_default().insert(inc.impact_month);
        }
        let entities: BTreeSet<&str> = panel
            .series
            .keys()
            .filter(|k| k.ownership == ownership && k.sector == sector)
            .map(|k| k.entity.as_str())
            .collect();
        let mut out = OutcomePanel::new(calendar);
        let mut cov_rows = Vec::new();
        for entity in entities {
            if covariates.is_some_and(|c| !c.is_available(entity)) {
                continue;
            }
            let key = SeriesKey::new(entity, ownership, sector);
            let values = calendar
                .iter()
                .map(|m| panel.get(&key, m).filter(|v| *v > 0.0).map(f64::log10))
                .collect();
            out.push(entity, values, hits.get(entity).cloned().unwrap_or_default())?;
            if let Some(c) = covariates {
                cov_rows.push(calendar.iter().map(|m| c.get(entity, m)).collect());
            }
        }
        if covariates.is_some() {
            out.covariates = Some(cov_rows);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DidParams {
    pub pre: i64,
    pub post: i64,
    pub n_boot: usize,
    pub seed: u64,
    pub confidence: f64,
    /// Residualize outcome changes on covariates before differencing.
    pub adjust: bool,
}

impl Default for DidParams {
    fn default() -> Self {
        DidParams {
            pre: 4,
            post: 12,
            n_boot: 1000,
            seed: 42,
            confidence: 0.95,
            adjust: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelMonthEffect {
    pub rel_month: i64,
    pub att: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Treated entity-events with an observed outcome at this relative month.
    pub n_treated: usize,
    pub n_control: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DidResult {
    pub effects: Vec<RelMonthEffect>,
    pub n_treated: usize,
    pub n_control: usize,
    pub skipped_months: Vec<YearMonth>,
    pub n_boot_used: usize,
}

impl DidResult {
    pub fn at(&self, rel_month: i64) -> Option<&RelMonthEffect> {
        self.effects.iter().find(|e| e.rel_month == rel_month)
    }
}

/// One entity's contribution to one event month: changes indexed by
/// `rel_month + pre`.
struct Unit {
    entity: usize,
    changes: Vec<Option<f64>>,
}

struct Cohort {
    month: YearMonth,
    treated: Vec<Unit>,
    control: Vec<Unit>,
}

fn build_cohorts(panel: &OutcomePanel, params: &DidParams) -> (Vec<Cohort>, Vec<YearMonth>) {
    let width = (params.pre + params.post + 1) as usize;
    let event_months: BTreeSet<YearMonth> = panel.events.iter().flatten().copied().collect();
    let changes = |e: usize, m: YearMonth| -> Option<Vec<Option<f64>>> {
        let base = panel.value(e, m.offset(-1))?;
        Some(
            (0..width)
                .map(|k| panel.value(e, m.offset(k as i64 - params.pre)).map(|v| v - base))
                .collect(),
        )
    };
    let mut cohorts = Vec::new();
    let mut skipped = Vec::new();
    for m in event_months {
        let window = m.offset(-params.pre)..=m.offset(params.post);
        let in_window = |e: usize| panel.events[e].range(window.clone()).count();
        let treated: Vec<Unit> = (0..panel.entities.len())
            .filter(|&e| panel.events[e].contains(&m) && in_window(e) == 1)
            .filter_map(|e| changes(e, m).map(|c| Unit { entity: e, changes: c }))
            .collect();
        if treated.is_empty() {
            continue;
        }
        let control: Vec<Unit> = (0..panel.entities.len())
            .filter(|&e| in_window(e) == 0)
            .filter_map(|e| changes(e, m).map(|c| Unit { entity: e, changes: c }))
            .collect();
        if control.is_empty() {
            log::warn!("no eligible controls for event month {m}; skipped");
            skipped.push(m);
            continue;
        }
        cohorts.push(Cohort {
            month: m,
            treated,
            control,
        });
    }
    (cohorts, skipped)
}

/// Replaces each change by its residual from a pooled linear regression on the
/// covariates at the reference month (with intercept), separately per relative
/// month.
fn residualize(panel: &OutcomePanel, cohorts: &mut [Cohort], params: &DidParams) -> Result<()> {
    let width = (params.pre + params.post + 1) as usize;
    let names: Vec<String> = ["intercept", "income_per_capita", "workage_pop", "education"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for k in 0..width {
        if k as i64 == params.pre - 1 {
            continue;
        }
        let mut rows = Vec::new();
        for (ci, cohort) in cohorts.iter().enumerate() {
            let m = cohort.month;
            for (side, units) in [(0, &cohort.treated), (1, &cohort.control)] {
                for (ui, u) in units.iter().enumerate() {
                    if let (Some(y), Some(x)) = (u.changes[k], panel.covariate(u.entity, m.offset(-1))) {
                        rows.push((ci, side, ui, y, x));
                    }
                }
            }
        }
        if rows.len() <= names.len() {
            continue;
        }
        let x = DMatrix::from_fn(rows.len(), 4, |r, c| if c == 0 { 1.0 } else { rows[r].4[c - 1] });
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.3));
        let ls = least_squares(&x, &y, &names)?;
        for (r, &(ci, side, ui, _, _)) in rows.iter().enumerate() {
            let units = if side == 0 {
                &mut cohorts[ci].treated
            } else {
                &mut cohorts[ci].control
            };
            units[ui].changes[k] = Some(ls.residuals[r]);
        }
    }
    Ok(())
}

/// Weighted ATT per relative month; `weight[e]` is the bootstrap multiplicity
/// of entity `e`. Returns `(att, n_treated, n_control)` per slot.
fn estimate(cohorts: &[Cohort], width: usize, weight: impl Fn(usize) -> f64) -> Vec<(Option<f64>, f64, f64)> {
    (0..width)
        .map(|k| {
            let (mut num, mut den, mut nc) = (0.0, 0.0, 0.0);
            for c in cohorts {
                let (mut st, mut wt) = (0.0, 0.0);
                for u in &c.treated {
                    if let Some(v) = u.changes[k] {
                        let w = weight(u.entity);
                        st += w * v;
                        wt += w;
                    }
                }
                let (mut sc, mut wc) = (0.0, 0.0);
                for u in &c.control {
                    if let Some(v) = u.changes[k] {
                        let w = weight(u.entity);
                        sc += w * v;
                        wc += w;
                    }
                }
                if wt > 0.0 && wc > 0.0 {
                    num += wt * (st / wt - sc / wc);
                    den += wt;
                    nc += wc;
                }
            }
            ((den > 0.0).then(|| num / den), den, nc)
        })
        .collect()
}

/// Event-study difference-in-differences with an entity-level bootstrap CI.
pub fn did_event_study(panel: &OutcomePanel, params: &DidParams) -> Result<DidResult> {
    if params.pre < 1 || params.post < 0 {
        return Err(Error::InvalidParameter("window needs pre ≥ 1 and post ≥ 0".into()));
    }
    if !(0.0..1.0).contains(&params.confidence) || params.confidence == 0.0 {
        return Err(Error::InvalidParameter("confidence must lie in (0, 1)".into()));
    }
    let width = (params.pre + params.post + 1) as usize;
    let (mut cohorts, skipped) = build_cohorts(panel, params);
    if cohorts.is_empty() {
        return Err(Error::InsufficientData(
            "no treated entity-event with eligible controls".into(),
        ));
    }
    if params.adjust {
        if panel.covariates.is_none() {
            return Err(Error::InvalidParameter("covariate adjustment needs covariates".into()));
        }
        residualize(panel, &mut cohorts, params)?;
    }

    let point = estimate(&cohorts, width, |_| 1.0);
    let n_ent = panel.entities.len();
    let draws: Vec<Vec<Option<f64>>> = (0..params.n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(b as u64 + 1);
            let mut counts = vec![0u32; n_ent];
            for _ in 0..n_ent {
                counts[rng.random_range(0..n_ent)] += 1;
            }
            estimate(&cohorts, width, |e| f64::from(counts[e]))
                .into_iter()
                .map(|p| p.0)
                .collect()
        })
        .collect();

    let alpha = 1.0 - params.confidence;
    let n_boot_used = draws.iter().filter(|d| d.iter().any(Option::is_some)).count();
    let effects = (0..width)
        .map(|k| {
            let rel_month = k as i64 - params.pre;
            let (att, nt, nc) = point[k];
            let mut samples: Vec<f64> = draws.iter().filter_map(|d| d[k]).collect();
            samples.sort_by(f64::total_cmp);
            let ci = (att.is_some() && !samples.is_empty()).then_some(()).and_then(|_| {
                Some((
                    quantile_sorted(&samples, alpha / 2.0)?,
                    quantile_sorted(&samples, 1.0 - alpha / 2.0)?,
                ))
            });
            RelMonthEffect {
                rel_month,
                att,
                ci_low: ci.map(|c| c.0),
                ci_high: ci.map(|c| c.1),
                n_treated: nt as usize,
                n_control: nc as usize,
            }
        })
        .collect();
    let n_treated = cohorts.iter().map(|c| c.treated.len()).sum();
    let n_control = cohorts
        .iter()
        .flat_map(|c| c.control.iter().map(|u| u.entity))
        .collect::<BTreeSet<_>>()
        .len();
    Ok(DidResult {
        effects,
        n_treated,
        n_control,
        skipped_months: skipped,
        n_boot_used,
    })
}
