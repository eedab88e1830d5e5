//! Core of the semantic sketch retrieval engine.
//!
//! Pixel-wise concept label maps are reduced to an `n × n` majority-vote
//! grid, each cell is replaced by a low-dimensional concept coordinate
//! obtained with t-SNE over word vectors, and the cells are concatenated in
//! row-major order into an `n²·d` feature vector. Query sketches go through
//! the same encoding, and retrieval is an exact top-k scan under the
//! Manhattan (L1) metric.
//!
//! The crate is `no_std` (with `alloc`); file formats, storage and the
//! service live in the `semsketch` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod embedding;
pub mod encode;
mod error;
pub mod grid;
pub mod knn;
pub mod palette;
mod rng;
pub mod tsne;
pub mod vocab;

pub use embedding::EmbeddingTable;
pub use encode::{
    BaselineBinaryVector, BitDepth, EncoderConfig, QuantizedVector, SemanticFeatureVector, StorageReport,
    DEFAULT_BASELINE_BITS,
};
pub use error::{Error, Result};
pub use grid::{GridMap, LabelMap};
pub use knn::{QueryResult, TopK};
pub use palette::PaletteEntry;
pub use rng::SeededRng;
pub use tsne::{Affinities, TsneParams};
pub use vocab::{Concept, ConceptId, ConceptVocabulary, WordVectorTable};
