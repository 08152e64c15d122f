use nalgebra::{DMatrix, DVector};

use super::design::{PanelDesign, DUMMY_NAME};
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::stats::student_t_two_sided_p;

pub const WITHIN_TOL: f64 = 1e-10;
pub const WITHIN_MAX_SWEEPS: usize = 1000;

/// One column after two-way demeaning, with the absorbed effects:
/// `raw[k] = values[k] + entity_effect[entity[k]] + period_effect[period[k]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemeanedColumn {
    pub values: Vec<f64>,
    pub entity_effect: Vec<f64>,
    pub period_effect: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demeaned {
    pub y: DemeanedColumn,
    pub d: DemeanedColumn,
    pub x: Vec<DemeanedColumn>,
    pub sweeps: usize,
}

fn group_means(v: &[f64], group: &[usize], n_groups: usize) -> Vec<f64> {
    let mut sum = vec![0.0; n_groups];
    let mut cnt = vec![0usize; n_groups];
    for (val, &g) in v.iter().zip(group) {
        sum[g] += val;
        cnt[g] += 1;
    }
    sum.iter()
        .zip(&cnt)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}

fn demean_column(raw: &[f64], design: &PanelDesign) -> Result<(DemeanedColumn, usize)> {
    let mut values = raw.to_vec();
    let mut entity_effect = vec![0.0; design.n_entities];
    let mut period_effect = vec![0.0; design.n_periods];
    let mut last_change = f64::INFINITY;
    for sweep in 1..=WITHIN_MAX_SWEEPS {
        let em = group_means(&values, &design.entity, design.n_entities);
        for (v, &e) in values.iter_mut().zip(&design.entity) {
            *v -= em[e];
        }
        let tm = group_means(&values, &design.period, design.n_periods);
        for (v, &t) in values.iter_mut().zip(&design.period) {
            *v -= tm[t];
        }
        entity_effect.iter_mut().zip(&em).for_each(|(a, m)| *a += m);
        period_effect.iter_mut().zip(&tm).for_each(|(a, m)| *a += m);
        last_change = em.iter().chain(&tm).fold(0.0f64, |m, v| m.max(v.abs()));
        // the first sweep always moves; convergence is judged from the second on
        if sweep > 1 && last_change < WITHIN_TOL {
            return Ok((
                DemeanedColumn {
                    values,
                    entity_effect,
                    period_effect,
                },
                sweep,
            ));
        }
    }
    Err(Error::NonConvergence {
        sweeps: WITHIN_MAX_SWEEPS,
        last_change,
    })
}

/// Removes entity and period means by alternating projections until no mean
/// moves by more than `1e-10`. Balanced panels converge after one pass.
pub fn within_transform(design: &PanelDesign) -> Result<Demeaned> {
    design.validate()?;
    if let Some(e) = design.entity_counts().iter().position(|&c| c < 2) {
        return Err(Error::InsufficientData(format!(
            "entity {} has fewer than two periods",
            design.entity_ids[e]
        )));
    }
    let (y, s0) = demean_column(&design.y, design)?;
    let (d, s1) = demean_column(&design.d, design)?;
    let mut sweeps = s0.max(s1);
    let mut x = Vec::with_capacity(design.x.len());
    for col in &design.x {
        let (c, s) = demean_column(col, design)?;
        sweeps = sweeps.max(s);
        x.push(c);
    }
    Ok(Demeaned { y, d, x, sweeps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    /// Entity-clustered standard error and its p-value (G − 1 degrees of freedom).
    pub se_cluster: Option<f64>,
    pub p_cluster: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedEffectsFit {
    /// Hurricane dummy first, then the covariates in design order.
    pub coefficients: Vec<Coefficient>,
    /// Squared correlation between `y` and `δD + βX` on the raw data.
    pub r2_overall: f64,
    pub r2_within: f64,
    pub n_obs: usize,
    pub n_entities: usize,
    pub n_periods: usize,
    /// `n − k − n_entities − n_periods + 1`.
    pub dof: usize,
    pub sigma2: f64,
    pub sweeps: usize,
}

impl FixedEffectsFit {
    pub fn delta(&self) -> &Coefficient {
        &self.coefficients[0]
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

fn pearson_r2(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab * sab / (saa * sbb)
}

/// Two-way fixed-effects OLS on the demeaned design, with conventional and
/// entity-clustered standard errors.
pub fn fit_fixed_effects(design: &PanelDesign) -> Result<FixedEffectsFit> {
    let dm = within_transform(design)?;
    let n = design.n_obs();
    let k = 1 + design.x.len();
    let absorbed = design.n_entities + design.n_periods - 1;
    if n <= k + absorbed {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} coefficients and {absorbed} absorbed effects"
        )));
    }
    let dof = n - k - absorbed;

    let mut names = vec![DUMMY_NAME.to_string()];
    names.extend(design.x_names.iter().cloned());
    let x = DMatrix::from_fn(n, k, |r, c| if c == 0 { dm.d.values[r] } else { dm.x[c - 1].values[r] });
    let y = DVector::from_column_slice(&dm.y.values);
    let ls = least_squares(&x, &y, &names)?;
    let sigma2 = ls.rss / dof as f64;

    // entity-clustered sandwich
    let g = design.n_entities;
    let mut scores = DMatrix::<f64>::zeros(g, k);
    for r in 0..n {
        let u = ls.residuals[r];
        for c in 0..k {
            scores[(design.entity[r], c)] += x[(r, c)] * u;
        }
    }
    let meat = scores.transpose() * &scores;
    let v_cluster = (&ls.xtx_inv * meat * &ls.xtx_inv) * (g as f64 / (g as f64 - 1.0));

    let coefficients = (0..k)
        .map(|j| {
            let est = ls.coef[j];
            let se = (sigma2 * ls.xtx_inv[(j, j)]).sqrt();
            let t = est / se;
            let se_c = (g > 1).then(|| v_cluster[(j, j)].sqrt());
            Coefficient {
                name: names[j].clone(),
                estimate: est,
                se,
                t,
                p: student_t_two_sided_p(t, dof as f64),
                se_cluster: se_c,
                p_cluster: se_c.map(|s| student_t_two_sided_p(est / s, (g - 1) as f64)),
            }
        })
        .collect();

    let fitted: Vec<f64> = (0..n)
        .map(|r| ls.coef[0] * design.d[r] + (1..k).map(|c| ls.coef[c] * design.x[c - 1][r]).sum::<f64>())
        .collect();
    let tss_within = dm.y.values.iter().map(|v| v * v).sum::<f64>();
    Ok(FixedEffectsFit {
        coefficients,
        r2_overall: pearson_r2(&design.y, &fitted),
        r2_within: if tss_within > 0.0 {
            1.0 - ls.rss / tss_within
        } else {
            0.0
        },
        n_obs: n,
        n_entities: design.n_entities,
        n_periods: design.n_periods,
        dof,
        sigma2,
        sweeps: dm.sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(obs: Vec<(&str, i32, f64, f64, Vec<f64>)>, names: &[&str]) -> PanelDesign {
        PanelDesign::from_observations(
            obs.into_iter().map(|(e, t, y, d, x)| (e.to_string(), t, y, d, x)),
            names.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn balanced_two_by_two_matches_closed_form() {
        let ys = [[1.0, 4.0], [2.0, 9.0]];
        let d = design(
            vec![
                ("a", 0, ys[0][0], 0.0, vec![]),
                ("a", 1, ys[0][1], 0.0, vec![]),
                ("b", 0, ys[1][0], 0.0, vec![]),
                ("b", 1, ys[1][1], 1.0, vec![]),
            ],
            &[],
        );
        let dm = within_transform(&d).unwrap();
        let grand = 4.0;
        let em = [2.5, 5.5];
        let tm = [1.5, 6.5];
        for r in 0..4 {
            let (e, t) = (d.entity[r], d.period[r]);
            let expect = ys[e][t] - em[e] - tm[t] + grand;
            assert!((dm.y.values[r] - expect).abs() < 1e-14);
        }
        assert_eq!(dm.sweeps, 2);
    }

    #[test]
    fn constant_outcome_demeans_to_zero() {
        let obs = (0..3)
            .flat_map(|e| (0..4i32).map(move |t| (["a", "b", "c"][e], t, 7.5, 0.0, vec![])))
            .collect();
        let dm = within_transform(&design(obs, &[])).unwrap();
        assert!(dm.y.values.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn all_zero_dummy_is_rank_error() {
        let obs = (0..4usize)
            .flat_map(|e| {
                (0..5i32).map(move |t| {
                    (
                        ["a", "b", "c", "d"][e],
                        t,
                        (e as i32 * t) as f64 + 0.1 * t as f64,
                        0.0,
                        vec![(t * t) as f64 + e as f64 * 0.3 * t as f64],
                    )
                })
            })
            .collect();
        match fit_fixed_effects(&design(obs, &["x"])) {
            Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec![DUMMY_NAME.to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singleton_entity_rejected() {
        let d = design(
            vec![
                ("a", 0, 1.0, 0.0, vec![]),
                ("a", 1, 2.0, 1.0, vec![]),
                ("b", 0, 1.0, 0.0, vec![]),
            ],
            &[],
        );
        assert!(matches!(within_transform(&d), Err(Error::InsufficientData(_))));
    }
}
