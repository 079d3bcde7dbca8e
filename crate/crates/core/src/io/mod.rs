//! Configuration, seeding, persistence and the stage pipeline.

pub mod config;
pub mod field_file;
pub mod pipeline;
pub mod seeds;

pub use config::{load_config, ExperimentConfig};
pub use field_file::{read_fields, write_fields, FieldRecord};
pub use pipeline::{Pipeline, Stage};
pub use seeds::{indexed_seed, seed_tree};
