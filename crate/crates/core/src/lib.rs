//! Confidence-gated multi-source early prediction of student outcomes.

pub mod error;
pub mod experiment;
pub mod features;
pub mod ingest;
pub mod learner;
pub mod metrics;
pub mod pipeline;

pub use error::{Error, ErrorKind, Result};
