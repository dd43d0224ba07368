//! Dwell-time aware valid-read modeling: log ingestion, log-normal dwell
//! statistics, valid-read labeling, normalized dwell-time weights, a
//! two-tower multi-task model with its trainer, offline evaluation and a
//! synthetic log generator.

mod binio;
pub mod config;
pub mod dwell_stats;
pub mod error;
pub mod evaluator;
pub mod ingest;
pub mod labeler;
pub mod mtl_model;
pub mod ndt;
pub mod profiles;
pub mod simgen;
pub mod trainer;

pub use error::{Error, Result};
