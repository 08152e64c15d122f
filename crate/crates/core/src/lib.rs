//! Links tropical-cyclone tracks to county employment panels and runs the
//! downstream analytics: hazard-conditioned composites, two-way fixed effects,
//! event-study difference-in-differences, PCA, and random-forest prediction with
//! hazard-scaling scenarios.

pub mod calendar;
pub mod econometrics;
pub mod error;
pub mod grid;
pub mod hazard;
pub mod ingest;
pub mod linalg;
pub mod panel;
pub mod patterns;
pub mod predict;
pub mod stats;
pub mod synth;
pub mod textio;

pub use calendar::{MonthRange, YearMonth};
pub use error::{Error, Result};
pub use hazard::Incident;
pub use ingest::{EmploymentPanel, Entity, EntityRegistry, Ownership, PrecipGrid, Sector, TrackSet};
