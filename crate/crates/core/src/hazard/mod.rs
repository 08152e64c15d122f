//! Storm hazard extraction: over-land masking, storm–entity radius matching,
//! and per-incident features (wind, precipitation, translation speed, closest
//! approach).

pub mod geo;
mod incident;
mod index;
mod matching;
mod track_ops;

pub use geo::{haversine_km, EARTH_RADIUS_KM, KMH_PER_KT};
pub(crate) use incident::{incident_fields, incident_from_fields};
pub use incident::{incidents_to_csv, read_incidents, sort_incidents, write_incidents, Incident, INCIDENT_COLUMNS};
pub use index::GridIndex;
pub use matching::{attach_precip, match_incidents, window_offsets, DEFAULT_PRECIP_WINDOW_DAYS, DEFAULT_RADIUS_KM};
pub use track_ops::{annotate_translation_speed, mask_overland, translation_speed, MaskReport};
