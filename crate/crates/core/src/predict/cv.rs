use std::fmt::Write as _;

use rayon::prelude::*;

use super::features::Dataset;
use super::kfold::temporal_kfold;
use super::model::{Model, ModelKind, Predictor};
use crate::error::{Error, Result};
use crate::stats::{mean, std_dev};
use crate::textio::fmt_opt;

/// `1 − SS_res / SS_tot`; `None` when the target has no variance.
pub fn r_squared(y: &[f64], pred: &[f64]) -> Option<f64> {
    let m = mean(y)?;
    let ss_tot: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    if ss_tot == 0.0 {
        return None;
    }
    let ss_res: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    Some(1.0 - ss_res / ss_tot)
}

pub fn mean_absolute_error(y: &[f64], pred: &[f64]) -> f64 {
    y.iter().zip(pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldScore {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub r2: Option<f64>,
    pub mae: f64,
    /// Forest impurity importances for this fold's model.
    pub importances: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCv {
    pub kind: ModelKind,
    pub folds: Vec<FoldScore>,
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

fn mean_sd(v: &[f64]) -> Option<MeanSd> {
    Some(MeanSd {
        mean: mean(v)?,
        sd: std_dev(v, 0)?,
        n: v.len(),
    })
}

impl ModelCv {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Over folds with a defined R².
    pub fn r2(&self) -> Option<MeanSd> {
        mean_sd(&self.folds.iter().filter_map(|f| f.r2).collect::<Vec<_>>())
    }

    pub fn mae(&self) -> Option<MeanSd> {
        mean_sd(&self.folds.iter().map(|f| f.mae).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub k: usize,
    pub n: usize,
    pub features: Vec<String>,
    pub target: String,
    pub models: Vec<ModelCv>,
}

impl CvReport {
    pub fn model(&self, name: &str) -> Option<&ModelCv> {
        self.models.iter().find(|m| m.name() == name)
    }
}

/// Blocked k-fold over time-ordered rows. The scaler is refit on each
/// training split.
pub fn cross_validate(ds: &Dataset, kinds: &[ModelKind], k: usize) -> Result<CvReport> {
    if ds.len() < 2 * k {
        return Err(Error::InsufficientData(format!(
            "{} rows for {k} folds; need {}",
            ds.len(),
            2 * k
        )));
    }
    if ds.times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("dataset rows are not in time order".into()));
    }
    let blocks = temporal_kfold(ds.len(), k)?;
    let mut models = Vec::with_capacity(kinds.len());
    for kind in kinds {
        let folds = blocks
            .par_iter()
            .enumerate()
            .map(|(fold, test)| {
                let train_idx: Vec<usize> = (0..ds.len()).filter(|i| !test.contains(i)).collect();
                let test_idx: Vec<usize> = test.clone().collect();
                let train = ds.subset(&train_idx);
                let held = ds.subset(&test_idx);
                let pred = Predictor::train(&train, kind)?;
                let yhat = pred.predict_raw(&held.x);
                Ok(FoldScore {
                    fold,
                    n_train: train.len(),
                    n_test: held.len(),
                    r2: r_squared(&held.y, &yhat),
                    mae: mean_absolute_error(&held.y, &yhat),
                    importances: match &pred.model {
                        Model::Forest(f) => Some(f.importances.clone()),
                        Model::Linear(_) => None,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        models.push(ModelCv { kind: *kind, folds });
    }
    Ok(CvReport {
        k,
        n: ds.len(),
        features: ds.spec.features.clone(),
        target: ds.spec.target.clone(),
        models,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean: f64,
    pub sd: f64,
}

/// Per-feature mean and sd of forest importances across folds.
pub fn feature_importance(report: &CvReport) -> Option<Vec<FeatureImportance>> {
    let rf = report.models.iter().find(|m| matches!(m.kind, ModelKind::Forest(_)))?;
    let per_fold: Vec<&Vec<f64>> = rf.folds.iter().filter_map(|f| f.importances.as_ref()).collect();
    Some(
        report
            .features
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let v: Vec<f64> = per_fold.iter().map(|imp| imp[j]).collect();
                let ms = mean_sd(&v).unwrap_or(MeanSd {
                    mean: 0.0,
                    sd: 0.0,
                    n: 0,
                });
                FeatureImportance {
                    feature: name.clone(),
                    mean: ms.mean,
                    sd: ms.sd,
                }
            })
            .collect(),
    )
}

pub fn cv_to_csv(report: &CvReport) -> String {
    let mut out = String::from("model,fold,n_train,n_test,r2,mae\n");
    for m in &report.models {
        for f in &m.folds {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                m.name(),
                f.fold + 1,
                f.n_train,
                f.n_test,
                fmt_opt(f.r2),
                fmt_opt(Some(f.mae))
            );
        }
        let r2 = m.r2();
        let mae = m.mae();
        let _ = writeln!(
            out,
            "{},mean,,,{},{}",
            m.name(),
            fmt_opt(r2.map(|v| v.mean)),
            fmt_opt(mae.map(|v| v.mean))
        );
        let _ = writeln!(
            out,
            "{},sd,,,{},{}",
            m.name(),
            fmt_opt(r2.map(|v| v.sd)),
            fmt_opt(mae.map(|v| v.sd))
        );
    }
    for m in &report.models {
        if let ModelKind::Forest(p) = m.kind {
            let _ = writeln!(
                out,
                "# rf n_trees={} max_depth={} min_samples_leaf={} features_per_split={} seed={}",
                p.n_trees,
                p.max_depth.map_or("none".to_string(), |d| d.to_string()),
                p.min_samples_leaf,
                p.mtry(report.features.len()),
                p.seed
            );
        }
    }
    let _ = writeln!(out, "# target={} n={} folds={}", report.target, report.n, report.k);
    out
}

pub fn importance_to_csv(imp: &[FeatureImportance]) -> String {
    let mut out = String::from("feature,importance_mean,importance_sd\n");
    for f in imp {
        let _ = writeln!(out, "{},{},{}", f.feature, fmt_opt(Some(f.mean)), fmt_opt(Some(f.sd)));
    }
    out
}
