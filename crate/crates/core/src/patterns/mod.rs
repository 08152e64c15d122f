//! Standardization, principal components and extreme-score composites.

mod composites;
mod matrix;
mod pca;
mod scaler;

pub use composites::{
    composites_to_csv, extreme_composites, loadings_to_csv, membership_to_csv, variance_to_csv, ExtremeComposites,
    Group, GroupSummary, COMPOSITE_METRICS, SMALL_GROUP,
};
pub use matrix::FeatureMatrix;
pub use pca::{fit_pca, pca_from_raw, PcaModel};
pub use scaler::{standardize, Scaler, Standardized};

/// Default PCA inputs: storm metrics, timing and location, goods and service
/// employment basis, and their Month-1 changes.
pub const DEFAULT_PCA_FEATURES: [&str; 12] = [
    "max_wind",
    "min_pressure",
    "precip3d",
    "trans_speed",
    "min_distance",
    "impact_doy",
    "entity_lat",
    "entity_lon",
    "log10_basis_goods",
    "log10_basis_service",
    "delta_goods_m1",
    "delta_service_m1",
];
