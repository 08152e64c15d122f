//! Employment-change prediction: linear regression and random forests,
//! blocked temporal cross-validation, and hazard-scaling scenarios.

mod cv;
mod features;
mod forest;
mod kfold;
mod linear;
mod model;
mod scenario;

pub use cv::{
    cross_validate, cv_to_csv, feature_importance, importance_to_csv, mean_absolute_error, r_squared, CvReport,
    FeatureImportance, FoldScore, MeanSd, ModelCv,
};
pub use features::{Dataset, FeatureSpec, DEFAULT_STORM_FEATURES};
pub use forest::{fit_forest, ForestModel, ForestParams, Node, Tree};
pub use kfold::{temporal_kfold, temporal_kfold_by_time, DEFAULT_FOLDS};
pub use linear::{fit_mlr, LinearModel};
pub use model::{Model, ModelKind, Predictor, Regressor};
pub use scenario::{
    scenario_distribution_to_csv, scenario_histogram_to_csv, scenario_predict, scenario_summary_to_csv, Histogram,
    HistogramSpec, ScenarioResult, LOWER_BOUND_NOTE, TAIL_BAND,
};
