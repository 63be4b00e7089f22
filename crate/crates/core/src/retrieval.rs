//! Exact brute-force dense retrieval, relevance judging and rank metrics.
//!
//! Timing is the caller's business; `segrag::retrieval` wraps these with a
//! wall clock.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::chunkers::Chunk;
use crate::embedding::{dot, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::text::{collapse_whitespace, tokenize};

/// Identifies a chunk inside an index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChunkRef {
    pub doc_id: String,
    pub index: usize,
}

impl From<&Chunk> for ChunkRef {
    fn from(c: &Chunk) -> Self {
        ChunkRef { doc_id: c.doc_id.clone(), index: c.index }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    chunk: ChunkRef,
    vector: Vec<f32>,
    norm: f64,
}

/// Flat index of chunk vectors in insertion order.
#[derive(Debug, Clone)]
pub struct ChunkIndex {
    dim: usize,
    entries: Vec<Entry>,
}

/// One ranked hit. `entry` is the position in the index.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub entry: usize,
    pub score: f64,
}

impl ChunkIndex {
    pub fn new(dim: usize) -> Self {
        ChunkIndex { dim, entries: Vec::new() }
    }

    /// Embeds every chunk's text with `provider`, preserving order.
    pub fn build<P: EmbeddingProvider + ?Sized>(chunks: &[Chunk], provider: &P) -> Result<Self> {
        let mut idx = ChunkIndex::new(provider.dimension());
        for c in chunks {
            let e = provider.embed(&c.text).map_err(|e| match e {
                Error::MissingEmbedding { key } => Error::MissingEmbedding {
                    key: alloc::format!("{key} (chunk {}#{})", c.doc_id, c.index),
                },
                other => other,
            })?;
            idx.push(ChunkRef::from(c), e.into_inner())?;
        }
        Ok(idx)
    }

    pub fn push(&mut self, chunk: ChunkRef, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: vector.len() });
        }
        let norm = libm::sqrt(dot(&vector, &vector));
        self.entries.push(Entry { chunk, vector, norm });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chunk(&self, entry: usize) -> &ChunkRef {
        &self.entries[entry].chunk
    }

    pub fn vector(&self, entry: usize) -> &[f32] {
        &self.entries[entry].vector
    }

    fn similarities(&self, query: &[f32]) -> Result<Vec<f64>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: query.len() });
        }
        let qn = libm::sqrt(dot(query, query));
        Ok(self
            .entries
            .iter()
            .map(|e| {
                let denom = qn * e.norm;
                if denom == 0.0 {
                    0.0
                } else {
                    // adding +0.0 folds -0.0 into 0.0 so zero scores tie
                    dot(query, &e.vector) / denom + 0.0
                }
            })
            .collect())
    }

    /// Every entry ranked by cosine similarity, highest first; ties go to
    /// the lower entry position.
    pub fn rank_all(&self, query: &[f32]) -> Result<Vec<Hit>> {
        let sims = self.similarities(query)?;
        let mut hits: Vec<Hit> = sims.into_iter().enumerate().map(|(entry, score)| Hit { entry, score }).collect();
        hits.sort_by(hit_order);
        Ok(hits)
    }

    /// The `k` best entries, in the same order [`rank_all`](Self::rank_all)
    /// would list them.
    pub fn top_k(&self, query: &[f32], k: usize) -> Result<Vec<Hit>> {
        let sims = self.similarities(query)?;
        let mut hits: Vec<Hit> = sims.into_iter().enumerate().map(|(entry, score)| Hit { entry, score }).collect();
        if k < hits.len() {
            if k == 0 {
                return Ok(Vec::new());
            }
            hits.select_nth_unstable_by(k - 1, hit_order);
            hits.truncate(k);
        }
        hits.sort_by(hit_order);
        Ok(hits)
    }
}

fn hit_order(a: &Hit, b: &Hit) -> Ordering {
    b.score.total_cmp(&a.score).then(a.entry.cmp(&b.entry))
}

/// Which relevance tests are active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelevanceConfig {
    /// Normalized gold sentence is a substring of the normalized chunk.
    pub substring: bool,
    /// Token-overlap F1 against some equal-length chunk window reaches this.
    pub overlap_f1: Option<f64>,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        RelevanceConfig { substring: true, overlap_f1: Some(0.8) }
    }
}

fn normalize_text(s: &str) -> String {
    let lower: String = s.chars().flat_map(char::to_lowercase).collect();
    collapse_whitespace(&lower)
}

fn normalize_gold(s: &str) -> String {
    let n = normalize_text(s);
    String::from(n.trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace()))
}

/// Best multiset-overlap F1 between `gold` and any window of the chunk with
/// the same token count. Both sides have equal length, so F1 = overlap/len.
fn best_window_f1(chunk: &[String], gold: &[String]) -> f64 {
    let m = gold.len();
    if m == 0 || chunk.len() < m {
        return 0.0;
    }
    let mut need: BTreeMap<&str, i64> = BTreeMap::new();
    for t in gold {
        *need.entry(t).or_default() += 1;
    }
    let mut have: BTreeMap<&str, i64> = BTreeMap::new();
    let mut overlap: i64 = 0;
    let mut best = 0;
    for (i, t) in chunk.iter().enumerate() {
        let h = have.entry(t).or_default();
        *h += 1;
        if *h <= need.get(t.as_str()).copied().unwrap_or(0) {
            overlap += 1;
        }
        if i >= m {
            let old = chunk[i - m].as_str();
            let h = have.get_mut(old).expect("counted on entry");
            if *h <= need.get(old).copied().unwrap_or(0) {
                overlap -= 1;
            }
            *h -= 1;
        }
        if i + 1 >= m {
            best = best.max(overlap);
        }
    }
    best as f64 / m as f64
}

/// True when any gold sentence matches the chunk under the active tests.
pub fn judge_relevant(chunk_text: &str, gold: &[String], config: &RelevanceConfig) -> bool {
    let norm_chunk = normalize_text(chunk_text);
    let chunk_tokens = config.overlap_f1.map(|_| tokenize(chunk_text));
    gold.iter().any(|g| {
        let ng = normalize_gold(g);
        if ng.is_empty() {
            return false;
        }
        if config.substring && norm_chunk.contains(ng.as_str()) {
            return true;
        }
        match (config.overlap_f1, &chunk_tokens) {
            (Some(th), Some(ct)) => best_window_f1(ct, &tokenize(g)) >= th,
            _ => false,
        }
    })
}

/// 1-based rank of the first relevant entry in `ranking`, if any.
pub fn first_relevant_rank(ranking: &[Hit], mut is_relevant: impl FnMut(usize) -> bool) -> Option<usize> {
    ranking.iter().position(|h| is_relevant(h.entry)).map(|p| p + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub queries: usize,
    /// `(k, hits@k)` in the order requested.
    pub hits: Vec<(usize, f64)>,
    pub mrr: f64,
}

/// Hits@k and MRR from first-relevant ranks (`None` = never relevant).
pub fn summarize_ranks(ranks: &[Option<usize>], ks: &[usize]) -> RankSummary {
    let n = ranks.len();
    let frac = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let hits = ks
        .iter()
        .map(|&k| (k, frac(ranks.iter().filter(|r| matches!(r, Some(x) if *x <= k)).count())))
        .collect();
    let mrr = if n == 0 {
        0.0
    } else {
        ranks.iter().map(|r| r.map_or(0.0, |x| 1.0 / x as f64)).sum::<f64>() / n as f64
    };
    RankSummary { queries: n, hits, mrr }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunkers::Unit;
    use alloc::vec;
    use alloc::vec::Vec;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| String::from(*s)).collect()
    }

    #[test]
    fn orthogonal_ties_keep_index_order() {
        // dot products of +0 and -0 both score zero
        let idx = index(&[vec![1.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let order: Vec<usize> = idx.rank_all(&[0.0, 1.0]).unwrap().iter().map(|h| h.entry).collect();
        assert_eq!(order, [2, 0, 3, 1]);
        let order: Vec<usize> = idx.rank_all(&[-1.0, 0.0]).unwrap().iter().map(|h| h.entry).collect();
        assert_eq!(order, [3, 1, 2, 0]);
    }

    fn index(vectors: &[Vec<f32>]) -> ChunkIndex {
        let mut idx = ChunkIndex::new(vectors[0].len());
        for (i, v) in vectors.iter().enumerate() {
            idx.push(ChunkRef { doc_id: "d".into(), index: i }, v.clone()).unwrap();
        }
        idx
    }

    #[test]
    fn self_similarity_ranks_first() {
        let idx = index(&[vec![1.0, 0.0, 0.0], vec![0.3, 0.7, 0.1], vec![0.0, 0.0, 2.0]]);
        let hits = idx.top_k(&[0.3, 0.7, 0.1], 2).unwrap();
        assert_eq!(hits[0].entry, 1);
        assert!((hits[0].score - 1.0).abs() < 1e-6);
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn k_beyond_index_returns_all() {
        let idx = index(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let hits = idx.top_k(&[1.0, 0.2], 10).unwrap();
        assert_eq!(hits.iter().map(|h| h.entry).collect::<Vec<_>>(), [0, 2, 1]);
        assert!(idx.top_k(&[1.0, 0.0], 0).unwrap().is_empty());
    }

    #[test]
    fn ties_prefer_lower_entry() {
        let idx = index(&[vec![0.0, 1.0], vec![2.0, 0.0], vec![1.0, 0.0], vec![3.0, 0.0]]);
        let hits = idx.top_k(&[1.0, 0.0], 3).unwrap();
        assert_eq!(hits.iter().map(|h| h.entry).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn empty_index_and_dimension_check() {
        let idx = ChunkIndex::new(3);
        assert!(idx.rank_all(&[1.0, 0.0, 0.0]).unwrap().is_empty());
        assert!(idx.top_k(&[1.0, 0.0], 5).is_err());
        let chunks: Vec<Chunk> = Vec::new();
        let enc = crate::embedding::TestEncoder::new(8, 1).unwrap();
        assert!(ChunkIndex::build(&chunks, &enc).unwrap().is_empty());
    }

    #[test]
    fn build_one_entry_per_chunk() {
        let enc = crate::embedding::TestEncoder::new(8, 1).unwrap();
        let chunks: Vec<Chunk> = (0..4)
            .map(|i| Chunk { doc_id: "d".into(), index: i, span: [i, i + 1], unit: Unit::Sentence, text: alloc::format!("text {i}") })
            .collect();
        let idx = ChunkIndex::build(&chunks, &enc).unwrap();
        assert_eq!(idx.len(), 4);
        assert!((0..4).all(|i| idx.vector(i).len() == 8 && idx.chunk(i).index == i));
    }

    #[test]
    fn relevance_rules() {
        let cfg = RelevanceConfig::default();
        let gold = strings(&["Insulin levels rose sharply."]);
        assert!(judge_relevant("Before. Insulin levels rose sharply. After.", &gold, &cfg));
        assert!(judge_relevant("before  INSULIN levels\nrose sharply and more", &gold, &cfg));
        assert!(!judge_relevant("Completely unrelated content", &gold, &cfg));
        // four of five tokens in a five-token window: F1 = 0.8
        assert!(judge_relevant("x insulin levels fell sharply z", &strings(&["insulin levels rose sharply z"]), &cfg));
        let sub_only = RelevanceConfig { substring: true, overlap_f1: None };
        assert!(!judge_relevant("x insulin levels fell sharply z", &strings(&["insulin levels rose sharply z"]), &sub_only));
        assert!(!judge_relevant("anything", &strings(&[" . "]), &cfg));
    }

    #[test]
    fn window_f1_counts_multisets() {
        let t = |s: &str| tokenize(s);
        assert_eq!(best_window_f1(&t("a a b"), &t("a b")), 1.0);
        assert_eq!(best_window_f1(&t("a a a"), &t("a b")), 0.5);
        assert_eq!(best_window_f1(&t("a"), &t("a b")), 0.0);
    }

    #[test]
    fn rank_summary_examples() {
        let s = summarize_ranks(&[Some(1), Some(2), Some(4)], &[3, 5]);
        assert!((s.mrr - (1.0 + 0.5 + 0.25) / 3.0).abs() < 1e-15);
        assert_eq!(s.hits, vec![(3, 2.0 / 3.0), (5, 1.0)]);
        let s = summarize_ranks(&[Some(1); 4], &[1, 3, 5]);
        assert_eq!((s.mrr, s.hits), (1.0, vec![(1, 1.0), (3, 1.0), (5, 1.0)]));
        let s = summarize_ranks(&[None, None], &[3, 5]);
        assert_eq!((s.mrr, s.hits), (0.0, vec![(3, 0.0), (5, 0.0)]));
    }

    proptest::proptest! {
        #[test]
        fn substring_relevance_survives_extension(prefix in "[a-z ]{0,20}", suffix in "[a-z .]{0,20}") {
            let gold = strings(&["the marker was elevated."]);
            let cfg = RelevanceConfig { substring: true, overlap_f1: None };
            let base = "The marker was elevated.";
            proptest::prop_assert!(judge_relevant(base, &gold, &cfg));
            let ext = alloc::format!("{prefix} {base} {suffix}");
            proptest::prop_assert!(judge_relevant(&ext, &gold, &cfg));
        }

        #[test]
        fn hits_monotone_in_k(ranks in proptest::collection::vec(proptest::option::of(1usize..20), 0..30)) {
            let s = summarize_ranks(&ranks, &[1, 3, 5, 10]);
            for w in s.hits.windows(2) { proptest::prop_assert!(w[0].1 <= w[1].1); }
            proptest::prop_assert!((0.0..=1.0).contains(&s.mrr));
        }
    }
}
