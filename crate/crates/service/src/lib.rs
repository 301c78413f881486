//! Pipeline orchestration, run store and read-only HTTP query service.

pub mod config;
pub mod http;
pub mod pipeline;
pub mod store;

pub use config::{ConfigError, PipelineConfig};
pub use pipeline::{
    filter_stage, ingest_paths, run_corpus, run_pipeline, signal_backend, stance_stage, topics_stage, Ingested, PipelineError,
    RunOptions, StageError, STAGES,
};
pub use store::{RunManifest, RunStatus, RunStore, StoreError};
