//! Graph-based positional encodings and a bidirectional LSTM resident
//! tagger for multi-resident smart-home sensor logs.
//!
//! The pipeline runs layout map -> accessibility graph -> accessibility
//! probability graph -> node embeddings, then turns annotated sensor
//! events into chunked feature sequences for the tagger.

pub mod embedding;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod ingest;
pub mod model;
pub mod rng;
pub mod simulator;
pub mod timecodec;

pub use error::{Error, Result};
