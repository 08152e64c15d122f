//! The analytic event table and its descriptive statistics.

mod composite;
mod table;

pub use composite::{
    composite_cell, composite_matrix, composites_to_csv, conditioned_distribution, CompositeCell, Condition,
    ConditionedSample, HazardThresholds, Summary, TestStatus, CONDITION_NAMES, MIN_GROUP_SIZE, SIGNIFICANCE_99,
};
pub use table::{
    build_event_table, delta_column, event_table_to_csv, fractional_change, is_known_feature, parse_delta_name,
    read_event_table, write_event_table, EventRow, EventTable, TableParams, DEFAULT_MIN_EMPLOYMENT, N_LAGS, N_SECTORS,
};
