use std::fmt::Write as _;

use super::did::DidResult;
use super::fixed_effects::FixedEffectsFit;
use crate::textio::fmt_opt;

pub const SIGNIFICANCE: f64 = 0.05;

/// One row per coefficient plus fit statistics as trailing `#` lines.
pub fn fit_to_csv(fit: &FixedEffectsFit) -> String {
    let mut out = String::from("term,estimate,se,t,p,se_cluster,p_cluster,significant\n");
    for c in &fit.coefficients {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.name,
            fmt_opt(Some(c.estimate)),
            fmt_opt(Some(c.se)),
            fmt_opt(Some(c.t)),
            fmt_opt(Some(c.p)),
            fmt_opt(c.se_cluster),
            fmt_opt(c.p_cluster),
            u8::from(c.p < SIGNIFICANCE)
        );
    }
    let _ = writeln!(out, "# r2_overall,{}", fmt_opt(Some(fit.r2_overall)));
    let _ = writeln!(out, "# r2_within,{}", fmt_opt(Some(fit.r2_within)));
    let _ = writeln!(out, "# n_obs,{}", fit.n_obs);
    let _ = writeln!(out, "# n_entities,{}", fit.n_entities);
    let _ = writeln!(out, "# n_periods,{}", fit.n_periods);
    let _ = writeln!(out, "# dof,{}", fit.dof);
    let _ = writeln!(out, "# sigma2,{}", fmt_opt(Some(fit.sigma2)));
    out
}

pub fn did_to_csv(res: &DidResult) -> String {
    let mut out = String::from("rel_month,att,ci_low,ci_high,n_treated,n_control\n");
    for e in &res.effects {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.rel_month,
            fmt_opt(e.att),
            fmt_opt(e.ci_low),
            fmt_opt(e.ci_high),
            e.n_treated,
            e.n_control
        );
    }
    out
}
