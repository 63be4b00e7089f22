//! Binary embedding cache.
//!
//! Little-endian layout:
//!
//! ```text
//! "SEGRAGEC"  8 bytes magic
//! u16         version (1)
//! u32         dimension d
//! u64         record count
//! records:    [16-byte key hash][u32 normalized text length][d x f32]
//! ```
//!
//! Keys are [`CacheKey`]s. Vectors are stored exactly as produced.

use std::collections::HashMap;
use std::path::Path;

use segrag_core::embedding::{CacheKey, Embedding, EmbeddingProvider};

use crate::error::{Error, Result};
use crate::io::write_atomic;

pub const MAGIC: &[u8; 8] = b"SEGRAGEC";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 8 + 2 + 4 + 8;

/// One cache record: key and vector.
pub type Entry = (CacheKey, Vec<f32>);

pub fn encode(dim: usize, entries: &[Entry]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + entries.len() * (20 + 4 * dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for (key, v) in entries {
        if v.len() != dim {
            return Err(segrag_core::Error::DimensionMismatch { expected: dim, actual: v.len() }.into());
        }
        out.extend_from_slice(&key.hash);
        out.extend_from_slice(&key.text_len.to_le_bytes());
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(usize, Vec<Entry>)> {
    let corrupt = |message: String| Error::Corruption { path: path.into(), message };
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(Error::Format { path: path.into(), message: "not an embedding cache (bad magic)".into() });
    }
    if bytes.len() < HEADER_LEN {
        return Err(corrupt(format!("header truncated at {} bytes", bytes.len())));
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != VERSION {
        return Err(Error::Format { path: path.into(), message: format!("unsupported cache version {version}") });
    }
    let dim = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
    if dim == 0 {
        return Err(corrupt("dimension 0 in header".into()));
    }
    let record = 16 + 4 + 4 * dim;
    let body = &bytes[HEADER_LEN..];
    if !body.len().is_multiple_of(record) || (body.len() / record) as u64 != count {
        return Err(corrupt(format!(
            "header declares {count} records of dimension {dim} ({} bytes) but {} bytes follow",
            count.saturating_mul(record as u64),
            body.len()
        )));
    }
    let mut entries = Vec::with_capacity(count as usize);
    for rec in body.chunks_exact(record) {
        let mut hash = [0u8; 16];
        hash.copy_from_slice(&rec[..16]);
        let text_len = u32::from_le_bytes(rec[16..20].try_into().unwrap());
        let v: Vec<f32> = rec[20..].chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        entries.push((CacheKey { hash, text_len }, v));
    }
    Ok((dim, entries))
}

pub fn write_cache(path: &Path, dim: usize, entries: &[Entry]) -> Result<()> {
    write_atomic(path, &encode(dim, entries)?)
}

/// Embeds each distinct text with `provider` and writes the vectors as a
/// cache, in first-seen order.
pub fn export_texts<P: EmbeddingProvider + ?Sized>(path: &Path, provider: &P, texts: &[&str]) -> Result<usize> {
    let mut seen = std::collections::HashSet::new();
    let mut entries = Vec::new();
    for t in texts {
        let key = CacheKey::of(t);
        if seen.insert(key.hash) {
            entries.push((key, provider.embed(t)?.into_inner()));
        }
    }
    write_cache(path, provider.dimension(), &entries)?;
    Ok(entries.len())
}

/// Read-only provider backed by a cache file.
#[derive(Debug, Clone)]
pub struct CacheProvider {
    dim: usize,
    name: String,
    map: HashMap<[u8; 16], (u32, Vec<f32>)>,
}

impl CacheProvider {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn contains(&self, text: &str) -> bool {
        let k = CacheKey::of(text);
        self.map.get(&k.hash).is_some_and(|(len, _)| *len == k.text_len)
    }
}

pub fn open_cache(path: &Path) -> Result<CacheProvider> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (dim, entries) = decode(&bytes, path)?;
    let mut map = HashMap::with_capacity(entries.len());
    for (key, v) in entries {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Corruption { path: path.into(), message: format!("non-finite value for key {key}") });
        }
        match map.get(&key.hash) {
            Some((len, _)) if *len != key.text_len => {
                return Err(Error::Corruption { path: path.into(), message: format!("conflicting records for key {key}") });
            }
            Some(_) => {}
            None => {
                map.insert(key.hash, (key.text_len, v));
            }
        }
    }
    Ok(CacheProvider { dim, name: format!("cache:{}", path.display()), map })
}

impl EmbeddingProvider for CacheProvider {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn embed(&self, text: &str) -> segrag_core::Result<Embedding> {
        if text.trim().is_empty() {
            return Err(segrag_core::Error::EmptyText);
        }
        let key = CacheKey::of(text);
        match self.map.get(&key.hash) {
            Some((len, v)) if *len == key.text_len => Ok(Embedding::new(v.clone()).expect("checked finite on open")),
            _ => Err(segrag_core::Error::MissingEmbedding { key: key.to_string() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use segrag_core::embedding::TestEncoder;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        let texts = ["first sentence", "second one", "third, with\ttabs"];
        let enc = TestEncoder::new(16, 5).unwrap();
        assert_eq!(export_texts(&p, &enc, &texts).unwrap(), 3);
        let cache = open_cache(&p).unwrap();
        assert_eq!(cache.dimension(), 16);
        for t in texts {
            let a = enc.embed(t).unwrap();
            let b = cache.embed(t).unwrap();
            let bits = |e: &Embedding| e.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a), bits(&b));
        }
        assert!(cache.embed("third, with tabs").is_ok());
        match cache.embed("absent") {
            Err(segrag_core::Error::MissingEmbedding { key }) => assert_eq!(key, CacheKey::of("absent").to_string()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode(2, &[(CacheKey::of("a"), vec![1.0, -2.0])]).unwrap();
        assert_eq!(&bytes[..8], b"SEGRAGEC");
        assert_eq!(&bytes[8..10], &[1, 0]);
        assert_eq!(&bytes[10..14], &[2, 0, 0, 0]);
        assert_eq!(&bytes[14..22], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(bytes.len(), 22 + 16 + 4 + 8);
        assert_eq!(&bytes[38..42], &[1, 0, 0, 0]);
        assert_eq!(&bytes[42..46], &1.0f32.to_le_bytes());
    }

    #[test]
    fn truncation_and_bad_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        let good = encode(4, &[(CacheKey::of("a"), vec![0.5; 4]), (CacheKey::of("b"), vec![0.25; 4])]).unwrap();
        for cut in [good.len() - 1, good.len() - 20, 30, 15] {
            std::fs::write(&p, &good[..cut]).unwrap();
            assert!(matches!(open_cache(&p), Err(Error::Corruption { .. })), "cut {cut}");
        }
        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(open_cache(&p), Err(Error::Format { .. })));
        let mut bad = good.clone();
        bad[8] = 2;
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(open_cache(&p), Err(Error::Format { .. })));
        // header dimension disagrees with record size
        let mut bad = good.clone();
        bad[10] = 3;
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(open_cache(&p), Err(Error::Corruption { .. })));
        let empty = encode(8, &[]).unwrap();
        std::fs::write(&p, &empty).unwrap();
        assert!(open_cache(&p).unwrap().is_empty());
    }
}
