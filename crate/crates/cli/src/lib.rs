//! Config-driven command-line pipeline over `stormpanel-core`.

pub mod config;
pub mod error;
pub mod manifest;
pub mod stages;

use std::path::Path;

pub use config::RunConfig;
pub use error::CliError;
pub use manifest::{RunManifest, StageRecord};
pub use stages::{Options, Pipeline};

use stormpanel_core::synth::{generate, write_fixture, SynthConfig};

pub const COMMANDS: [&str; 9] = [
    "link",
    "table",
    "composite",
    "fe",
    "did",
    "pca",
    "predict",
    "scenario",
    "run",
];

/// Runs one pipeline subcommand against a configuration file.
pub fn run_command(command: &str, config: &Path, opts: &Options) -> Result<Pipeline, CliError> {
    let cfg = RunConfig::load(config)?;
    let mut p = Pipeline::new(cfg, opts)?;
    match command {
        "link" => p.link(),
        "table" => p.table(),
        "composite" => p.composite(),
        "fe" => p.fe(),
        "did" => p.did(),
        "pca" => p.pca(),
        "predict" => p.predict(),
        "scenario" => p.scenario(),
        "run" => p.run_all(),
        other => Err(CliError::Validation(format!("unknown command '{other}'"))),
    }?;
    Ok(p)
}

/// Writes the synthetic fixture and a matching `run.toml` into `dir`.
pub fn write_synthetic_fixture(dir: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg = SynthConfig::default();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let data = generate(&cfg).map_err(CliError::stage("synth"))?;
    write_fixture(dir, &data).map_err(CliError::stage("synth"))?;
    stormpanel_core::textio::write_atomic(&dir.join("run.toml"), config::fixture_config_text().as_bytes())
        .map_err(CliError::stage("synth"))
}
