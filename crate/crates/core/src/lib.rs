//! Core algorithms for trainable semantic chunking and chunking-aware RAG
//! evaluation.
//!
//! Everything here is `no_std` with `alloc`: sentence segmentation, the
//! embedding provider interface and test encoder, training-pair
//! construction, the projected-similarity (PSC) and metric-fusion (MFC)
//! boundary scorers with their SGD trainer, the baseline chunkers, exact
//! brute-force retrieval, and the generation metrics. File formats, XML
//! ingestion, timing and the command line live in the `segrag` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod boundary;
pub mod chunkers;
pub mod document;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod pairgen;
pub mod retrieval;
pub mod segmenter;
pub mod text;

pub use document::{Document, QaRecord, Section};
pub use error::{Error, Result};
