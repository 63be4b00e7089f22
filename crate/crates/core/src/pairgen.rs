//! Labelled sentence-pair construction with 1:1 negative sampling.
//!
//! Positives are adjacent sentences inside one section. Negatives pair
//! sentences from different sections of the same document whose texts never
//! share a section anywhere in that document.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub doc_id: String,
    pub a: String,
    pub b: String,
    /// 1 for adjacent same-section sentences, 0 for cross-section.
    pub label: u8,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub positives: usize,
    pub negatives: usize,
    /// Documents that could not supply negatives.
    pub skipped: usize,
}

impl DatasetStats {
    pub fn positive_fraction(&self) -> f64 {
        let total = self.positives + self.negatives;
        if total == 0 {
            0.0
        } else {
            self.positives as f64 / total as f64
        }
    }
}

pub fn positive_pairs(doc: &Document) -> Vec<SentencePair> {
    doc.sections
        .iter()
        .flat_map(|sec| sec.sentences.windows(2))
        .map(|w| SentencePair { doc_id: doc.id.clone(), a: w[0].clone(), b: w[1].clone(), label: 1 })
        .collect()
}

/// Every unordered cross-section text pair whose members never share a
/// section, in canonical (section, position) order.
fn negative_pool(doc: &Document) -> Vec<(&str, &str)> {
    let mut homes: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (si, sec) in doc.sections.iter().enumerate() {
        for s in &sec.sentences {
            homes.entry(s.as_str()).or_default().insert(si);
        }
    }
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut pool = Vec::new();
    for (p, sp) in doc.sections.iter().enumerate() {
        for sq in &doc.sections[p + 1..] {
            for a in &sp.sentences {
                for b in &sq.sentences {
                    let (a, b) = (a.as_str(), b.as_str());
                    if !homes[a].is_disjoint(&homes[b]) {
                        continue;
                    }
                    let key = if a <= b { (a, b) } else { (b, a) };
                    if seen.insert(key) {
                        pool.push((a, b));
                    }
                }
            }
        }
    }
    pool
}

/// Draws `count` negative pairs uniformly from the valid candidate pool,
/// without replacement until the pool is exhausted and with replacement
/// after that.
pub fn negative_pairs(doc: &Document, count: usize, seed: u64) -> Result<Vec<SentencePair>> {
    if doc.sections.len() < 2 {
        return Err(Error::InsufficientSections { doc_id: doc.id.clone(), sections: doc.sections.len() });
    }
    let mut pool = negative_pool(doc);
    if pool.is_empty() {
        return Err(Error::InsufficientSections { doc_id: doc.id.clone(), sections: doc.sections.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    let mut out: Vec<SentencePair> = pool
        .iter()
        .take(count)
        .map(|&(a, b)| SentencePair { doc_id: doc.id.clone(), a: a.into(), b: b.into(), label: 0 })
        .collect();
    while out.len() < count {
        let (a, b) = pool[rng.random_range(0..pool.len())];
        out.push(SentencePair { doc_id: doc.id.clone(), a: a.into(), b: b.into(), label: 0 });
    }
    Ok(out)
}

fn doc_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    z ^ (z >> 33)
}

/// Builds the shuffled training set: all positives of every document plus
/// `round(positives * neg_ratio)` negatives from each document that can
/// supply them.
pub fn build_dataset(docs: &[Document], seed: u64, neg_ratio: f64) -> Result<(Vec<SentencePair>, DatasetStats)> {
    if !(neg_ratio >= 0.0 && neg_ratio.is_finite()) {
        return Err(Error::Config(alloc::format!("neg_ratio must be finite and >= 0, got {neg_ratio}")));
    }
    let mut pairs = Vec::new();
    let mut stats = DatasetStats::default();
    for (i, doc) in docs.iter().enumerate() {
        let pos = positive_pairs(doc);
        let want = libm::round(pos.len() as f64 * neg_ratio) as usize;
        stats.positives += pos.len();
        pairs.extend(pos);
        if want == 0 {
            continue;
        }
        match negative_pairs(doc, want, doc_seed(seed, i)) {
            Ok(neg) => {
                stats.negatives += neg.len();
                pairs.extend(neg);
            }
            Err(Error::InsufficientSections { .. }) => stats.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if stats.negatives == 0 && neg_ratio > 0.0 {
        log::warn!("no document could supply negative pairs; dataset holds positives only");
    }
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((pairs, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Section;
    use alloc::format;
    use alloc::vec;

    fn doc(id: &str, sections: &[&[&str]]) -> Document {
        Document::new(id, sections.iter().map(|s| Section::new(None, s.iter().copied())).collect())
    }

    fn pair(p: &SentencePair) -> (&str, &str, u8) {
        (p.a.as_str(), p.b.as_str(), p.label)
    }

    #[test]
    fn positives_are_adjacent_in_order() {
        let d = doc("d", &[&["s1", "s2", "s3"], &["s4", "s5"]]);
        let got: Vec<_> = positive_pairs(&d).iter().map(|p| (p.a.clone(), p.b.clone(), p.label)).collect();
        let want = [("s1", "s2", 1), ("s2", "s3", 1), ("s4", "s5", 1)];
        assert_eq!(got.len(), 3);
        for (g, w) in got.iter().zip(want) {
            assert_eq!((g.0.as_str(), g.1.as_str(), g.2), w);
        }
        assert!(positive_pairs(&doc("x", &[&["only"]])).is_empty());
    }

    #[test]
    fn positive_count_identity() {
        let d = doc("d", &[&["a", "b", "c", "d"], &["e"], &["f", "g"]]);
        // 3 + 0 + 1 adjacent pairs
        assert_eq!(positive_pairs(&d).len(), 4);
    }

    #[test]
    fn negatives_from_hand_enumerated_pool() {
        let d = doc("d", &[&["s1", "s2"], &["s3"]]);
        let got = negative_pairs(&d, 2, 5).unwrap();
        let mut set: Vec<_> = got.iter().map(pair).collect();
        set.sort();
        assert_eq!(set, [("s1", "s3", 0), ("s2", "s3", 0)]);
    }

    #[test]
    fn negatives_need_two_sections() {
        let d = doc("d", &[&["a", "b"]]);
        assert!(matches!(negative_pairs(&d, 1, 0), Err(Error::InsufficientSections { sections: 1, .. })));
    }

    #[test]
    fn negatives_respect_duplicated_sentences() {
        // "x" lives in both sections, so it can never be part of a negative
        let d = doc("d", &[&["x", "a"], &["b", "x"]]);
        let got = negative_pairs(&d, 10, 1).unwrap();
        assert_eq!(got.len(), 10);
        assert!(got.iter().all(|p| pair(p) == ("a", "b", 0)));
    }

    #[test]
    fn negatives_deterministic_and_replacement_after_exhaustion() {
        let d = doc("d", &[&["a", "b", "c"], &["d", "e"], &["f"]]);
        let x = negative_pairs(&d, 20, 9).unwrap();
        assert_eq!(x, negative_pairs(&d, 20, 9).unwrap());
        // pool has 3*2 + 3*1 + 2*1 = 11 pairs: the first 11 draws are distinct
        let first: BTreeSet<_> = x[..11].iter().map(pair).collect();
        assert_eq!(first.len(), 11);
    }

    #[test]
    fn dataset_balance_on_multi_section_docs() {
        let docs: Vec<Document> = (0..100)
            .map(|i| {
                let secs: Vec<Vec<String>> = (0..2 + i % 4)
                    .map(|s| (0..3 + (i + s) % 5).map(|k| format!("doc {i} sec {s} sent {k}")).collect())
                    .collect();
                Document::new(format!("d{i}"), secs.into_iter().map(|s| Section::new(None, s)).collect())
            })
            .collect();
        let (pairs, stats) = build_dataset(&docs, 42, 1.0).unwrap();
        // brute-force recount
        let pos = pairs.iter().filter(|p| p.label == 1).count();
        assert_eq!(pos, stats.positives);
        assert_eq!(pairs.len(), stats.positives + stats.negatives);
        let frac = pos as f64 / pairs.len() as f64;
        assert!((0.49..=0.51).contains(&frac), "{frac}");
        let (again, _) = build_dataset(&docs, 42, 1.0).unwrap();
        assert_eq!(pairs, again);
    }

    #[test]
    fn single_section_corpus_yields_positives_only() {
        let docs = vec![doc("a", &[&["1", "2", "3"]]), doc("b", &[&["4", "5"]])];
        let (pairs, stats) = build_dataset(&docs, 1, 1.0).unwrap();
        assert_eq!(stats, DatasetStats { positives: 3, negatives: 0, skipped: 2 });
        assert!(pairs.iter().all(|p| p.label == 1));
    }

    #[test]
    fn empty_dataset_error() {
        let docs = vec![doc("a", &[&["1"]])];
        assert_eq!(build_dataset(&docs, 1, 1.0).unwrap_err(), Error::EmptyDataset);
        assert_eq!(build_dataset(&[], 1, 1.0).unwrap_err(), Error::EmptyDataset);
    }

    proptest::proptest! {
        #[test]
        fn labels_match_document_structure(
            lens in proptest::collection::vec(1usize..5, 1..5),
            vocab in 3usize..30,
            seed in 0u64..1000,
        ) {
            // small vocab forces duplicated sentences across sections
            let mut k = 0;
            let secs: Vec<Section> = lens.iter().map(|&n| {
                let s: Vec<String> = (0..n).map(|_| { k += 7; format!("s{}", k % vocab) }).collect();
                Section::new(None, s)
            }).collect();
            let d = Document::new("p", secs);
            let (pairs, _) = match build_dataset(core::slice::from_ref(&d), seed, 1.0) {
                Ok(x) => x,
                Err(Error::EmptyDataset) => return Ok(()),
                Err(e) => panic!("{e}"),
            };
            for p in &pairs {
                let together = d.sections.iter().any(|s| s.sentences.contains(&p.a) && s.sentences.contains(&p.b));
                let adjacent = d.sections.iter().any(|s| s.sentences.windows(2).any(|w| w[0] == p.a && w[1] == p.b));
                if p.label == 1 {
                    proptest::prop_assert!(adjacent);
                } else {
                    proptest::prop_assert!(!together);
                }
            }
        }
    }
}
