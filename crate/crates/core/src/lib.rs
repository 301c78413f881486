//! Analytics engine for social-media comment corpora.
//!
//! The crate is organised as a set of pipeline stages that each operate on an
//! immutable [`corpus::Corpus`]:
//!
//! * [`corpus`]: data model, JSONL ingestion, remote fetching, creator exclusion,
//!   snapshot diffing and discrepancy audits.
//! * [`filter`]: labelling functions, a generative label model and a hashed
//!   n-gram logistic classifier for irrelevant-comment removal.
//! * [`embed`]: pluggable text embeddings and the shared cosine kernel.
//! * [`topics`]: transcript normalisation, projection, HDBSCAN clustering,
//!   class-based TF-IDF keywords and topic quality metrics.
//! * [`signals`]: lexicon sentiment and emotion scoring.
//! * [`stance`]: explicit markers, ensemble scoring and reply propagation.
//! * [`analytics`]: Mann-Whitney U, quartiles, correlation, ECDFs and time series.
//! * [`synth`]: deterministic synthetic corpora used by tests, benches and demos.

pub mod analytics;
pub mod corpus;
pub mod embed;
pub mod filter;
pub mod lexicon;
pub mod signals;
pub mod stance;
pub mod synth;
pub mod text;
pub mod topics;

pub use corpus::{Category, Channel, Comment, Corpus, Video};
pub use embed::{cosine, EmbeddingBackend, EmbeddingVector};
