//! The run configuration: a flat TOML file of typed keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stormpanel_core::panel::{HazardThresholds, CONDITION_NAMES};
use stormpanel_core::predict::ForestParams;
use stormpanel_core::{Ownership, Sector};

use crate::error::CliError;

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_radius() -> f64 {
    200.0
}
fn default_min_employment() -> f64 {
    100.0
}
fn default_window() -> u32 {
    3
}
fn default_strong() -> f64 {
    64.0
}
fn default_extreme_wind() -> f64 {
    96.0
}
fn default_extreme_precip() -> f64 {
    150.0
}
fn default_ownership() -> String {
    "private".into()
}
fn default_sectors() -> Vec<String> {
    Sector::ALL.iter().map(|s| s.name().to_string()).collect()
}
fn default_predict_sectors() -> Vec<String> {
    vec!["goods".into(), "service".into()]
}
fn default_k() -> usize {
    5
}
fn default_trees() -> usize {
    300
}
fn default_leaf() -> usize {
    5
}
fn default_boot() -> usize {
    1000
}
fn default_pre() -> i64 {
    4
}
fn default_post() -> i64 {
    12
}
fn default_confidence() -> f64 {
    0.95
}
fn default_low_q() -> f64 {
    0.10
}
fn default_high_q() -> f64 {
    0.90
}
fn default_components() -> usize {
    2
}
fn default_wind_factor() -> f64 {
    1.05
}
fn default_precip_factor() -> f64 {
    1.14
}
fn default_scenario_model() -> String {
    "rf".into()
}
fn default_seed() -> u64 {
    42
}

/// Every key of the configuration file. Relative paths resolve against the
/// directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub tracks: PathBuf,
    pub precip: PathBuf,
    pub employment: PathBuf,
    pub entities: PathBuf,
    pub covariates: PathBuf,
    pub landmask: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,

    #[serde(default = "default_radius")]
    pub radius_km: f64,
    #[serde(default = "default_min_employment")]
    pub min_employment: f64,
    #[serde(default = "default_window")]
    pub precip_window_days: u32,
    #[serde(default = "default_strong")]
    pub strong_wind_kt: f64,
    #[serde(default = "default_extreme_wind")]
    pub extreme_wind_kt: f64,
    #[serde(default = "default_extreme_precip")]
    pub extreme_precip_mm: f64,
    #[serde(default)]
    pub allow_small_groups: bool,

    #[serde(default = "default_ownership")]
    pub ownership: String,
    /// Sectors for the fixed-effects and event-study stages.
    #[serde(default = "default_sectors")]
    pub sectors: Vec<String>,
    /// Target sectors of the predictive models.
    #[serde(default = "default_predict_sectors")]
    pub predict_sectors: Vec<String>,

    #[serde(default = "default_k")]
    pub k_folds: usize,
    #[serde(default = "default_trees")]
    pub rf_n_trees: usize,
    #[serde(default)]
    pub rf_max_depth: Option<usize>,
    #[serde(default = "default_leaf")]
    pub rf_min_samples_leaf: usize,
    #[serde(default)]
    pub rf_features_per_split: Option<usize>,

    #[serde(default = "default_boot")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_pre")]
    pub did_pre: i64,
    #[serde(default = "default_post")]
    pub did_post: i64,
    #[serde(default = "default_confidence")]
    pub did_confidence: f64,
    #[serde(default)]
    pub did_adjust: bool,

    #[serde(default = "default_low_q")]
    pub pca_low_quantile: f64,
    #[serde(default = "default_high_q")]
    pub pca_high_quantile: f64,
    #[serde(default = "default_components")]
    pub pca_composite_components: usize,

    #[serde(default = "default_wind_factor")]
    pub wind_factor: f64,
    #[serde(default = "default_precip_factor")]
    pub precip_factor: f64,
    #[serde(default = "default_scenario_model")]
    pub scenario_model: String,

    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// Input files by their configuration key.
pub const INPUT_KEYS: [&str; 6] = ["tracks", "precip", "employment", "entities", "covariates", "landmask"];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
    }

    /// Reads, resolves paths against the file's directory and validates.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.tracks,
            &mut self.precip,
            &mut self.employment,
            &mut self.entities,
            &mut self.covariates,
            &mut self.landmask,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn input(&self, key: &str) -> &Path {
        match key {
            "tracks" => &self.tracks,
            "precip" => &self.precip,
            "employment" => &self.employment,
            "entities" => &self.entities,
            "covariates" => &self.covariates,
            "landmask" => &self.landmask,
            _ => unreachable!("unknown input key {key}"),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(msg));
        for key in INPUT_KEYS {
            let p = self.input(key);
            if !p.is_file() {
                return bad(format!("{key}: file not found: {}", p.display()));
            }
        }
        for (name, v) in [
            ("radius_km", self.radius_km),
            ("strong_wind_kt", self.strong_wind_kt),
            ("extreme_wind_kt", self.extreme_wind_kt),
            ("extreme_precip_mm", self.extreme_precip_mm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.min_employment >= 0.0 && self.min_employment.is_finite()) {
            return bad(format!(
                "min_employment must be non-negative, got {}",
                self.min_employment
            ));
        }
        if self.precip_window_days == 0 {
            return bad("precip_window_days must be at least 1".into());
        }
        if self.k_folds < 2 {
            return bad(format!("k_folds must be at least 2, got {}", self.k_folds));
        }
        if self.bootstrap_resamples == 0 {
            return bad("bootstrap_resamples must be positive".into());
        }
        if self.did_pre < 1 || self.did_post < 0 {
            return bad(format!("event window {}..{} is invalid", -self.did_pre, self.did_post));
        }
        if !(self.did_confidence > 0.0 && self.did_confidence < 1.0) {
            return bad(format!(
                "did_confidence must lie in (0, 1), got {}",
                self.did_confidence
            ));
        }
        if !(0.0..=1.0).contains(&self.pca_low_quantile)
            || !(0.0..=1.0).contains(&self.pca_high_quantile)
            || self.pca_low_quantile > self.pca_high_quantile
        {
            return bad(format!(
                "pca quantiles {} / {}",
                self.pca_low_quantile, self.pca_high_quantile
            ));
        }
        if !(self.wind_factor > 0.0 && self.precip_factor > 0.0) {
            return bad("scenario factors must be positive".into());
        }
        if !matches!(self.scenario_model.as_str(), "rf" | "mlr") {
            return bad(format!("scenario_model must be rf or mlr, got {}", self.scenario_model));
        }
        self.ownership()?;
        self.sector_list(&self.sectors)?;
        self.sector_list(&self.predict_sectors)?;
        self.forest_params()
            .validate(usize::MAX)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(())
    }

    pub fn ownership(&self) -> Result<Ownership, CliError> {
        Ownership::from_name(&self.ownership)
            .ok_or_else(|| CliError::Validation(format!("unknown ownership '{}'", self.ownership)))
    }

    pub fn sector_list(&self, names: &[String]) -> Result<Vec<Sector>, CliError> {
        names
            .iter()
            .map(|n| Sector::from_name(n).ok_or_else(|| CliError::Validation(format!("unknown sector '{n}'"))))
            .collect()
    }

    pub fn thresholds(&self) -> HazardThresholds {
        HazardThresholds {
            strong_wind_kt: self.strong_wind_kt,
            extreme_wind_kt: self.extreme_wind_kt,
            extreme_precip_mm: self.extreme_precip_mm,
        }
    }

    pub fn forest_params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.rf_n_trees,
            max_depth: self.rf_max_depth,
            min_samples_leaf: self.rf_min_samples_leaf,
            features_per_split: self.rf_features_per_split,
            seed: self.seed,
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        crate::manifest::sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

pub fn check_condition(name: &str) -> Result<(), CliError> {
    if CONDITION_NAMES.contains(&name) {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "unknown condition '{name}', expected one of {}",
            CONDITION_NAMES.join(", ")
        )))
    }
}

/// The configuration written next to a generated fixture.
pub fn fixture_config_text() -> String {
    "\
tracks = \"tracks.csv\"
precip = \"precip.spgr\"
employment = \"employment.csv\"
entities = \"entities.csv\"
covariates = \"covariates.csv\"
landmask = \"landmask.csv\"
output_dir = \"out\"

radius_km = 200.0
min_employment = 100.0
precip_window_days = 3
strong_wind_kt = 64.0
extreme_wind_kt = 96.0
extreme_precip_mm = 150.0
allow_small_groups = true

k_folds = 5
rf_n_trees = 100
rf_min_samples_leaf = 3
bootstrap_resamples = 200
did_pre = 4
did_post = 12

wind_factor = 1.05
precip_factor = 1.14
seed = 42
"
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        "tracks = \"t\"\nprecip = \"p\"\nemployment = \"e\"\nentities = \"n\"\ncovariates = \"c\"\nlandmask = \"l\"\n"
            .into()
    }

    #[test]
    fn defaults_follow_documented_constants() {
        let cfg = RunConfig::from_toml(&minimal()).unwrap();
        assert_eq!(cfg.radius_km, 200.0);
        assert_eq!(cfg.min_employment, 100.0);
        assert_eq!(cfg.precip_window_days, 3);
        assert_eq!(
            (cfg.strong_wind_kt, cfg.extreme_wind_kt, cfg.extreme_precip_mm),
            (64.0, 96.0, 150.0)
        );
        assert_eq!(cfg.k_folds, 5);
        assert_eq!(cfg.sectors.len(), 13);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = RunConfig::from_toml(&(minimal() + "radius = 100\n")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("radius"));
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut cfg = RunConfig::from_toml(&minimal()).unwrap();
        cfg.resolve_paths(Path::new("/data/run"));
        assert_eq!(cfg.tracks, PathBuf::from("/data/run/t"));
        assert_eq!(cfg.output_dir, PathBuf::from("/data/run/out"));
    }

    #[test]
    fn fixture_config_parses() {
        let cfg = RunConfig::from_toml(&fixture_config_text()).unwrap();
        assert_eq!(cfg.seed, 42);
        assert!(cfg.allow_small_groups);
    }
}
