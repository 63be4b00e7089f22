//! Embedding provider selection from a textual spec.

use std::path::PathBuf;
use std::str::FromStr;

use segrag_core::embedding::{EmbeddingProvider, TestEncoder};

use crate::cache::open_cache;
use crate::error::{Error, Result};

pub type DynProvider = Box<dyn EmbeddingProvider + Send + Sync>;

/// `test:<dim>:<seed>` or `cache:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSpec {
    Test { dim: usize, seed: u64 },
    Cache(PathBuf),
}

impl FromStr for ProviderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ProviderSpec(s.to_string());
        match s.split_once(':') {
            Some(("test", rest)) => {
                let (dim, seed) = rest.split_once(':').ok_or_else(bad)?;
                Ok(ProviderSpec::Test { dim: dim.parse().map_err(|_| bad())?, seed: seed.parse().map_err(|_| bad())? })
            }
            Some(("cache", path)) if !path.is_empty() => Ok(ProviderSpec::Cache(path.into())),
            _ => Err(bad()),
        }
    }
}

impl ProviderSpec {
    pub fn open(&self) -> Result<DynProvider> {
        Ok(match self {
            ProviderSpec::Test { dim, seed } => Box::new(TestEncoder::new(*dim, *seed)?),
            ProviderSpec::Cache(path) => Box::new(open_cache(path)?),
        })
    }
}
