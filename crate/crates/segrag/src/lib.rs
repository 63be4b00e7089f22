//! Corpus ingestion, file formats, evaluation harness and CLI plumbing
//! around [`segrag_core`].

pub mod cache;
pub mod cli;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod jats;
pub mod modelfile;
pub mod provider;
pub mod synth;

pub use error::{Error, Result};
