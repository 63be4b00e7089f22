//! Sentence vectors and the providers that produce them.
//!
//! The primary pipeline never runs a neural encoder. Vectors come either
//! from [`TestEncoder`], a deterministic bag-of-words random projection, or
//! from an on-disk cache keyed by [`CacheKey`] (see `segrag::cache`).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::text::{collapse_whitespace, tokenize};

/// A fixed-length vector of finite `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    /// Wraps `values`, rejecting non-finite entries.
    pub fn new(values: Vec<f32>) -> Option<Self> {
        values.iter().all(|v| v.is_finite()).then_some(Embedding(values))
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(dot(&self.0, &self.0))
    }
}

/// Dot product accumulated in `f64`.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Cosine similarity; zero when either vector is all zeros.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let na = libm::sqrt(dot(a, a));
    let nb = libm::sqrt(dot(b, b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

/// Anything that maps text to a fixed-dimension vector deterministically.
pub trait EmbeddingProvider {
    fn dimension(&self) -> usize;
    fn name(&self) -> &str;
    fn embed(&self, text: &str) -> Result<Embedding>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
    fn embed(&self, text: &str) -> Result<Embedding> {
        (**self).embed(text)
    }
}

/// Lookup key for the embedding cache: the first 16 bytes of SHA-256 over
/// the NFC-normalized, whitespace-collapsed text, plus that normalized
/// text's UTF-8 length as a collision check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CacheKey {
    pub hash: [u8; 16],
    pub text_len: u32,
}

/// NFC normalization followed by whitespace collapsing.
pub fn normalize_for_key(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    collapse_whitespace(&nfc)
}

impl CacheKey {
    pub fn of(text: &str) -> Self {
        let norm = normalize_for_key(text);
        let digest = Sha256::digest(norm.as_bytes());
        let mut hash = [0u8; 16];
        hash.copy_from_slice(&digest[..16]);
        CacheKey { hash, text_len: norm.len() as u32 }
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.hash {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

pub const DEFAULT_TEST_DIMENSION: usize = 64;

/// Deterministic stand-in for a sentence encoder.
///
/// Each token (see [`tokenize`]) maps through a seeded hash to a fixed
/// random unit vector; a text embeds as the L2-normalized sum of its token
/// vectors. Topically disjoint texts land near-orthogonal, near-duplicates
/// land close together.
#[derive(Debug, Clone)]
pub struct TestEncoder {
    dim: usize,
    seed: u64,
    name: String,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal draw by Box-Muller.
pub(crate) fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

impl TestEncoder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim < 8 {
            return Err(Error::Config(alloc::format!("test encoder dimension {dim} < 8")));
        }
        Ok(TestEncoder { dim, seed, name: alloc::format!("test:{dim}:{seed}") })
    }

    /// The unit vector assigned to one token.
    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.seed ^ fnv1a(token.as_bytes())));
        let mut v: Vec<f64> = (0..self.dim).map(|_| gaussian(&mut rng)).collect();
        let n = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    /// Unnormalized sum of token vectors. Text without alphanumeric tokens
    /// is treated as one token, its whitespace-collapsed self.
    pub fn token_sum(&self, text: &str) -> Vec<f64> {
        let mut tokens = tokenize(text);
        if tokens.is_empty() {
            tokens.push(collapse_whitespace(text));
        }
        let mut acc = alloc::vec![0.0f64; self.dim];
        for t in &tokens {
            for (a, x) in acc.iter_mut().zip(self.token_vector(t)) {
                *a += x;
            }
        }
        acc
    }
}

impl EmbeddingProvider for TestEncoder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn embed(&self, text: &str) -> Result<Embedding> {
        if text.trim().is_empty() {
            return Err(Error::EmptyText);
        }
        let sum = self.token_sum(text);
        let n = libm::sqrt(sum.iter().map(|x| x * x).sum::<f64>());
        // opposite tokens cancelling exactly is measure-zero; fall back to the raw sum
        let scale = if n > 0.0 { n } else { 1.0 };
        Ok(Embedding(sum.iter().map(|x| (x / scale) as f32).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn enc() -> TestEncoder {
        TestEncoder::new(64, 7).unwrap()
    }

    #[test]
    fn dimension_and_unit_norm() {
        let e = enc().embed("Insulin resistance rose in the treated cohort.").unwrap();
        assert_eq!(e.dim(), 64);
        assert!((e.l2_norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn determinism_across_instances() {
        let a = TestEncoder::new(64, 3).unwrap().embed("same text here").unwrap();
        let b = TestEncoder::new(64, 3).unwrap().embed("same text here").unwrap();
        assert_eq!(a, b);
        let c = TestEncoder::new(64, 4).unwrap().embed("same text here").unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_token_is_its_unit_vector() {
        let e = enc();
        let v = e.embed("Glucose").unwrap();
        let t: Vec<f32> = e.token_vector("glucose").iter().map(|&x| x as f32).collect();
        assert_eq!(v.values(), &t[..]);
    }

    #[test]
    fn topical_separation() {
        let e = enc();
        let a = e.embed("insulin glucose pancreas diabetes metformin").unwrap();
        let b = e.embed("tumor chemotherapy radiation oncology biopsy").unwrap();
        let a2 = e.embed("insulin glucose pancreas diabetes metformin dose").unwrap();
        let ab = cosine(a.values(), b.values());
        assert!(ab.abs() < 0.3, "{ab}");
        assert!(ab < 0.5);
        assert!(cosine(a.values(), a2.values()) > 0.9);
    }

    #[test]
    fn rejects_small_dimension_and_empty_text() {
        assert!(TestEncoder::new(4, 0).is_err());
        assert_eq!(enc().embed("   "), Err(Error::EmptyText));
        assert_eq!(enc().embed("--").unwrap().dim(), 64);
    }

    #[test]
    fn cache_key_normalizes() {
        assert_eq!(CacheKey::of("  a \n b "), CacheKey::of("a b"));
        assert_eq!(CacheKey::of("caf\u{65}\u{301}"), CacheKey::of("caf\u{e9}"));
        assert_ne!(CacheKey::of("a b"), CacheKey::of("a  c"));
        assert_eq!(CacheKey::of("a b").text_len, 3);
        assert_eq!(alloc::format!("{}", CacheKey::of("x")).len(), 32);
    }

    proptest! {
        #[test]
        fn union_is_normalized_sum_of_parts(
            a in proptest::collection::vec("[a-e]{1,3}", 1..6),
            b in proptest::collection::vec("[a-e]{1,3}", 1..6),
        ) {
            let e = TestEncoder::new(16, 11).unwrap();
            let ta = a.join(" ");
            let tb = b.join(" ");
            let whole = e.embed(&alloc::format!("{ta} {tb}")).unwrap();
            let sa = e.token_sum(&ta);
            let sb = e.token_sum(&tb);
            let s: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| x + y).collect();
            let n = libm::sqrt(s.iter().map(|x| x * x).sum::<f64>());
            prop_assume!(n > 1e-6);
            for (w, x) in whole.values().iter().zip(&s) {
                prop_assert!((*w as f64 - x / n).abs() < 1e-6);
            }
        }

        #[test]
        fn output_finite_and_sized(t in "[ -~]{1,40}") {
            prop_assume!(!t.trim().is_empty());
            let v = enc().embed(&t).unwrap();
            prop_assert_eq!(v.dim(), 64);
            prop_assert!(v.values().iter().all(|x| x.is_finite()));
        }
    }
}
