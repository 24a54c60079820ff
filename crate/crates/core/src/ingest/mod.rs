//! Loading student data: OULAD tables, per-source bundles and the synthetic
//! benchmark.

pub mod bundle;
pub mod oulad;
pub mod sources;
pub mod synthetic;

pub use bundle::{
    AssessmentInfo, AssessmentKind, AssessmentRecord, FinalResult, InteractionEvent, SourceBundle,
    SourceTag, StudentDemographics, StudentId, Vocabularies,
};
pub use oulad::{load_oulad, LoadOptions, RawTables, TableKind};
pub use sources::{
    build_additional_source, build_primary_source, experiment_cohort, CohortSummary,
};
pub use synthetic::{generate_synthetic, write_synthetic, SyntheticSpec, SYNTHETIC_FILES};
