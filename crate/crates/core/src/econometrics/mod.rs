//! Two-way fixed effects and event-study difference-in-differences.

mod design;
mod did;
mod fixed_effects;
mod report;

pub use design::{PanelDesign, DUMMY_NAME};
pub use did::{did_event_study, DidParams, DidResult, OutcomePanel, RelMonthEffect};
pub use fixed_effects::{
    fit_fixed_effects, within_transform, Coefficient, Demeaned, DemeanedColumn, FixedEffectsFit, WITHIN_MAX_SWEEPS,
    WITHIN_TOL,
};
pub use report::{did_to_csv, fit_to_csv, SIGNIFICANCE};
