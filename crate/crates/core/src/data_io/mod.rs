//! Cohort ingestion and standardisation, the synthetic SCD-style cohort
//! generator, and result serialisation.

mod cohort;
mod generator;
mod json;
mod result_io;

pub use cohort::{
    load_csv, save_cohort, standardize, unstandardize, Cohort, Column, ColumnType, Scaling, Schema,
};
pub use generator::{generate_scd_cohort, GeneratedCohort, GroundTruth, IndicatorSpec, ScdGenParams};
pub use json::{to_json_string, write_json};
pub use result_io::{load_result, result_from_str, result_to_string, save_result};
