//! File formats, the on-disk vector store, ingestion, benchmarking and the
//! HTTP service of the semantic sketch retrieval engine. The algorithms
//! themselves live in [`semsketch_core`].

pub mod bench;
pub mod cli;
mod error;
pub mod ingest;
pub mod label_map_file;
pub mod report;
pub mod service;
pub mod store;
pub mod table_file;
pub mod vocab_file;

pub use error::{Error, Result};
pub use semsketch_core as core;
