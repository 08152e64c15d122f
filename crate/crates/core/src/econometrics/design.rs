use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::calendar::{MonthRange, YearMonth};
use crate::error::{Error, Result};
use crate::hazard::Incident;
use crate::ingest::{CovariateVar, EmploymentPanel, MonthlyCovariates, Ownership, Sector, SeriesKey};

pub const DUMMY_NAME: &str = "hurricane_dummy";

/// Long-format panel for `y_it = α_i + λ_t + δ D_it + β X_it + ε_it`.
///
/// Row `k` is observation (entity[k], period[k]); `x` holds one vector per
/// covariate column.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDesign {
    pub y: Vec<f64>,
    pub d: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub x_names: Vec<String>,
    pub entity: Vec<usize>,
    pub period: Vec<usize>,
    pub n_entities: usize,
    pub n_periods: usize,
    pub entity_ids: Vec<String>,
    pub period_labels: Vec<String>,
}

impl PanelDesign {
    /// Assembles and validates a design from raw observation tuples
    /// `(entity label, period label, y, d, x)`.
    pub fn from_observations<E, P>(
        obs: impl IntoIterator<Item = (E, P, f64, f64, Vec<f64>)>,
        x_names: Vec<String>,
    ) -> Result<Self>
    where
        E: Ord + Clone + ToString,
        P: Ord + Clone + ToString,
    {
        let obs: Vec<_> = obs.into_iter().collect();
        let ents: BTreeSet<E> = obs.iter().map(|o| o.0.clone()).collect();
        let pers: BTreeSet<P> = obs.iter().map(|o| o.1.clone()).collect();
        let ent_idx: HashMap<String, usize> = ents.iter().enumerate().map(|(i, e)| (e.to_string(), i)).collect();
        let per_idx: HashMap<String, usize> = pers.iter().enumerate().map(|(i, p)| (p.to_string(), i)).collect();
        let p = x_names.len();
        let mut design = PanelDesign {
            y: Vec::with_capacity(obs.len()),
            d: Vec::with_capacity(obs.len()),
            x: vec![Vec::with_capacity(obs.len()); p],
            x_names,
            entity: Vec::with_capacity(obs.len()),
            period: Vec::with_capacity(obs.len()),
            n_entities: ents.len(),
            n_periods: pers.len(),
            entity_ids: ents.iter().map(ToString::to_string).collect(),
            period_labels: pers.iter().map(ToString::to_string).collect(),
        };
        let mut seen = BTreeSet::new();
        for (e, t, y, d, x) in obs {
            if x.len() != p {
                return Err(Error::InvalidParameter(format!(
                    "expected {p} covariates, got {}",
                    x.len()
                )));
            }
            let (ei, ti) = (ent_idx[&e.to_string()], per_idx[&t.to_string()]);
            if !seen.insert((ei, ti)) {
                return Err(Error::DuplicateKey(format!("({}, {})", e.to_string(), t.to_string())));
            }
            design.entity.push(ei);
            design.period.push(ti);
            design.y.push(y);
            design.d.push(d);
            for (col, v) in design.x.iter_mut().zip(x) {
                col.push(v);
            }
        }
        design.validate()?;
        Ok(design)
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .y
            .iter()
            .chain(&self.d)
            .chain(self.x.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("panel design".into()));
        }
        if self.d.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidParameter("hurricane dummy must be 0 or 1".into()));
        }
        Ok(())
    }

    /// Observation count per entity.
    pub fn entity_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_entities];
        self.entity.iter().for_each(|&e| c[e] += 1);
        c
    }

    /// Builds the monthly design for one employment series: `y` is log10
    /// employment, `D` marks the impact month of any incident, `X` holds the
    /// interpolated covariates. Entities without covariates or with fewer than
    /// two usable months are left out.
    pub fn from_panel(
        panel: &EmploymentPanel,
        ownership: Ownership,
        sector: Sector,
        incidents: &[Incident],
        covariates: &MonthlyCovariates,
    ) -> Result<Self> {
        let calendar: MonthRange = covariates.calendar;
        let mut hits: BTreeMap<&str, BTreeSet<YearMonth>> = BTreeMap::new();
        for inc in incidents {
            hits.entry(inc.entity_id.as_str()).or_default().insert(inc.impact_month);
        }
        let mut obs = Vec::new();
        for entity in covariates.series.keys() {
            let key = SeriesKey::new(entity.clone(), ownership, sector);
            let Some(series) = panel.series(&key) else { continue };
            let rows: Vec<_> = series
                .iter()
                .filter(|(m, e)| **e > 0.0 && calendar.index_of(**m).is_some())
                .filter_map(|(m, e)| {
                    let x = covariates.get(entity, *m)?;
                    let d = hits.get(entity.as_str()).is_some_and(|s| s.contains(m));
                    Some((entity.clone(), *m, e.log10(), f64::from(u8::from(d)), x.to_vec()))
                })
                .collect();
            if rows.len() >= 2 {
                obs.extend(rows);
            }
        }
        if obs.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no usable observations for {} / {}",
                ownership.name(),
                sector.name()
            )));
        }
        Self::from_observations(obs, CovariateVar::ALL.iter().map(|v| v.name().to_string()).collect())
    }
}
