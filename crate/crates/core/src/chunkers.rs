//! Document chunkers: the trained boundary-model chunker and the fixed,
//! sentence-window, recursive and cosine-percentile baselines.

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryModel;
use crate::document::Document;
use crate::embedding::{cosine, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::text::count_words;

/// What a chunk's span counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Sentence,
    Char,
    Token,
}

/// A contiguous piece of one document: the retrieval unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub index: usize,
    /// Half-open `[start, end)` in `unit`s of the source.
    pub span: [usize; 2],
    pub unit: Unit,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkerKind {
    Fixed,
    Sentence,
    Recursive,
    CosineSemantic,
    Model,
}

/// Size unit for the fixed and recursive chunkers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeUnit {
    #[default]
    Tokens,
    Chars,
}

impl SizeUnit {
    fn measure(self, s: &str) -> usize {
        match self {
            SizeUnit::Tokens => count_words(s),
            SizeUnit::Chars => s.chars().count(),
        }
    }

    fn unit(self) -> Unit {
        match self {
            SizeUnit::Tokens => Unit::Token,
            SizeUnit::Chars => Unit::Char,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkerConfig {
    pub kind: ChunkerKind,
    pub size: usize,
    pub overlap: usize,
    pub size_unit: SizeUnit,
    pub window: usize,
    pub window_overlap: usize,
    pub percentile: f64,
    pub threshold: f64,
    pub max_sentences: Option<usize>,
}

impl ChunkerConfig {
    pub fn new(kind: ChunkerKind) -> Self {
        ChunkerConfig {
            kind,
            size: 1000,
            overlap: 200,
            size_unit: SizeUnit::Tokens,
            window: 3,
            window_overlap: 1,
            percentile: 95.0,
            threshold: 0.5,
            max_sentences: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        match self.kind {
            ChunkerKind::Fixed | ChunkerKind::Recursive => {
                if self.size == 0 {
                    return bad("size must be positive");
                }
                if self.overlap >= self.size {
                    return bad("overlap must be smaller than size");
                }
            }
            ChunkerKind::Sentence => {
                if self.window == 0 {
                    return bad("window must be at least 1");
                }
                if self.window_overlap >= self.window {
                    return bad("window overlap must be smaller than window");
                }
            }
            ChunkerKind::CosineSemantic => {
                if !(self.percentile > 0.0 && self.percentile < 100.0) {
                    return bad("percentile must lie in (0, 100)");
                }
            }
            ChunkerKind::Model => {
                if !(self.threshold > 0.0 && self.threshold < 1.0) {
                    return bad("threshold must lie in (0, 1)");
                }
                if self.max_sentences == Some(0) {
                    return bad("max sentences must be positive");
                }
            }
        }
        Ok(())
    }
}

/// Start/end pairs of windows of `size` advancing by `size - overlap`,
/// covering `0..len`; the last window may be shorter.
fn windows(len: usize, size: usize, overlap: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    if len == 0 {
        return out;
    }
    let stride = size - overlap;
    let mut start = 0;
    loop {
        let end = (start + size).min(len);
        out.push(start..end);
        if end == len {
            return out;
        }
        start += stride;
    }
}

fn sentence_chunk(doc: &Document, sentences: &[&str], index: usize, r: Range<usize>) -> Chunk {
    Chunk {
        doc_id: doc.id.clone(),
        index,
        span: [r.start, r.end],
        unit: Unit::Sentence,
        text: sentences[r].join(" "),
    }
}

fn chunks_from_breaks(doc: &Document, sentences: &[&str], breaks: &[usize]) -> Vec<Chunk> {
    // breaks[i] = a new chunk starts at sentence breaks[i]
    let mut out = Vec::new();
    let mut start = 0;
    for &b in breaks.iter().chain(core::iter::once(&sentences.len())) {
        if b > start {
            out.push(sentence_chunk(doc, sentences, out.len(), start..b));
            start = b;
        }
    }
    out
}

/// Fixed-length windows over the text, measured in tokens or characters.
pub fn chunk_fixed(doc_id: &str, text: &str, size: usize, overlap: usize, unit: SizeUnit) -> Result<Vec<Chunk>> {
    if size == 0 || overlap >= size {
        return Err(Error::Config(alloc::format!("invalid fixed chunker size {size} / overlap {overlap}")));
    }
    let chunk = |index: usize, r: Range<usize>, text: String| Chunk {
        doc_id: doc_id.into(),
        index,
        span: [r.start, r.end],
        unit: unit.unit(),
        text,
    };
    Ok(match unit {
        SizeUnit::Tokens => {
            let tokens: Vec<&str> = text.split_whitespace().collect();
            windows(tokens.len(), size, overlap)
                .into_iter()
                .enumerate()
                .map(|(i, r)| chunk(i, r.clone(), tokens[r].join(" ")))
                .collect()
        }
        SizeUnit::Chars => {
            let chars: Vec<char> = text.chars().collect();
            windows(chars.len(), size, overlap)
                .into_iter()
                .enumerate()
                .map(|(i, r)| chunk(i, r.clone(), chars[r].iter().collect()))
                .collect()
        }
    })
}

/// Windows of `window` whole sentences overlapping by `overlap`.
pub fn chunk_sentences(doc: &Document, window: usize, overlap: usize) -> Result<Vec<Chunk>> {
    if window == 0 || overlap >= window {
        return Err(Error::Config(alloc::format!("invalid sentence window {window} / overlap {overlap}")));
    }
    let sentences: Vec<&str> = doc.sentences().collect();
    Ok(windows(sentences.len(), window, overlap)
        .into_iter()
        .enumerate()
        .map(|(i, r)| sentence_chunk(doc, &sentences, i, r))
        .collect())
}

#[derive(Clone, Copy)]
enum Separator {
    Paragraph,
    Line,
    Sentence,
    Space,
}

const SEPARATORS: [Separator; 4] = [Separator::Paragraph, Separator::Line, Separator::Sentence, Separator::Space];

fn trimmed(text: &str, r: Range<usize>) -> Option<Range<usize>> {
    let s = &text[r.clone()];
    let lead = s.len() - s.trim_start().len();
    let tail = s.len() - s.trim_end().len();
    (lead + tail < s.len()).then(|| r.start + lead..r.end - tail)
}

fn split_on(text: &str, r: Range<usize>, sep: Separator) -> Vec<Range<usize>> {
    let s = &text[r.clone()];
    let mut cuts: Vec<(usize, usize)> = Vec::new(); // (piece end, next piece start), relative
    match sep {
        Separator::Paragraph | Separator::Line => {
            let pat = if matches!(sep, Separator::Paragraph) { "\n\n" } else { "\n" };
            cuts.extend(s.match_indices(pat).map(|(i, m)| (i, i + m.len())));
        }
        Separator::Sentence => {
            let mut it = s.char_indices().peekable();
            while let Some((i, c)) = it.next() {
                if matches!(c, '.' | '!' | '?') {
                    if let Some(&(j, n)) = it.peek() {
                        if n.is_whitespace() {
                            cuts.push((i + c.len_utf8(), j));
                        }
                    }
                }
            }
        }
        Separator::Space => {
            cuts.extend(s.char_indices().filter(|(_, c)| c.is_whitespace()).map(|(i, c)| (i, i + c.len_utf8())));
        }
    }
    let mut out = Vec::new();
    let mut start = 0;
    for (end, next) in cuts {
        if end >= start {
            out.extend(trimmed(text, r.start + start..r.start + end));
        }
        start = start.max(next);
    }
    out.extend(trimmed(text, r.start + start..r.end));
    out
}

struct Recursive<'a> {
    text: &'a str,
    size: usize,
    overlap: usize,
    unit: SizeUnit,
}

impl Recursive<'_> {
    fn measure(&self, r: Range<usize>) -> usize {
        self.unit.measure(&self.text[r])
    }

    fn split(&self, r: Range<usize>, level: usize, out: &mut Vec<Range<usize>>) {
        let mut good = Vec::new();
        for piece in split_on(self.text, r, SEPARATORS[level]) {
            if self.measure(piece.clone()) <= self.size {
                good.push(piece);
                continue;
            }
            self.merge(core::mem::take(&mut good), out);
            if level + 1 < SEPARATORS.len() {
                self.split(piece, level + 1, out);
            } else {
                out.push(piece);
            }
        }
        self.merge(good, out);
    }

    /// Greedily packs adjacent pieces up to `size`, carrying up to `overlap`
    /// units of trailing pieces into the next chunk.
    fn merge(&self, pieces: Vec<Range<usize>>, out: &mut Vec<Range<usize>>) {
        let mut cur: VecDeque<Range<usize>> = VecDeque::new();
        for p in pieces {
            if let (Some(f), Some(b)) = (cur.front(), cur.back()) {
                if self.measure(f.start..p.end) > self.size {
                    out.push(f.start..b.end);
                    while let (Some(f), Some(b)) = (cur.front(), cur.back()) {
                        if self.measure(f.start..b.end) > self.overlap || self.measure(f.start..p.end) > self.size {
                            cur.pop_front();
                        } else {
                            break;
                        }
                    }
                }
            }
            cur.push_back(p);
        }
        if let (Some(f), Some(b)) = (cur.front(), cur.back()) {
            out.push(f.start..b.end);
        }
    }
}

/// Hierarchical splitting on blank lines, newlines, sentence ends and
/// spaces, descending only for pieces larger than `size`, then greedy
/// merging with overlap. No chunk exceeds `size` unless it is a single
/// unsplittable unit.
pub fn chunk_recursive(doc_id: &str, text: &str, size: usize, overlap: usize, unit: SizeUnit) -> Result<Vec<Chunk>> {
    if size == 0 || overlap >= size {
        return Err(Error::Config(alloc::format!("invalid recursive chunker size {size} / overlap {overlap}")));
    }
    let Some(whole) = trimmed(text, 0..text.len()) else {
        return Ok(Vec::new());
    };
    let rec = Recursive { text, size, overlap, unit };
    let mut ranges = Vec::new();
    if rec.measure(whole.clone()) <= size {
        ranges.push(whole);
    } else {
        rec.split(whole, 0, &mut ranges);
    }

    // byte offsets to unit offsets
    let offsets: Vec<usize> = match unit {
        SizeUnit::Tokens => text
            .split_whitespace()
            .map(|w| w.as_ptr() as usize - text.as_ptr() as usize)
            .collect(),
        SizeUnit::Chars => text.char_indices().map(|(i, _)| i).collect(),
    };
    let to_unit = |byte: usize| offsets.partition_point(|&o| o < byte);
    Ok(ranges
        .into_iter()
        .enumerate()
        .map(|(i, r)| Chunk {
            doc_id: doc_id.into(),
            index: i,
            span: [to_unit(r.start), to_unit(r.end)],
            unit: unit.unit(),
            text: text[r].to_string(),
        })
        .collect())
}

/// Linear-interpolation percentile (the common `numpy.percentile`
/// default) of an unsorted sample.
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let rank = pct / 100.0 * (v.len() - 1) as f64;
    let lo = libm::floor(rank) as usize;
    let hi = libm::ceil(rank) as usize;
    v[lo] + (v[hi] - v[lo]) * (rank - lo as f64)
}

fn embed_all<P: EmbeddingProvider + ?Sized>(provider: &P, sentences: &[&str]) -> Result<Vec<Vec<f32>>> {
    sentences
        .iter()
        .map(|s| {
            let e = provider.embed(s)?;
            if e.dim() != provider.dimension() {
                return Err(Error::DimensionMismatch { expected: provider.dimension(), actual: e.dim() });
            }
            Ok(e.into_inner())
        })
        .collect()
}

/// Cosine-distance percentile chunker: a chunk ends after sentence `i` when
/// `1 − cos(e_i, e_{i+1})` is strictly greater than the `pct`-th percentile
/// of all adjacent distances in the document.
pub fn chunk_cosine<P: EmbeddingProvider + ?Sized>(doc: &Document, provider: &P, pct: f64) -> Result<Vec<Chunk>> {
    if !(pct > 0.0 && pct < 100.0) {
        return Err(Error::Config(alloc::format!("percentile {pct} outside (0, 100)")));
    }
    let sentences: Vec<&str> = doc.sentences().collect();
    let vecs = embed_all(provider, &sentences)?;
    let dist: Vec<f64> = vecs.windows(2).map(|w| 1.0 - cosine(&w[0], &w[1])).collect();
    let breaks: Vec<usize> = if dist.is_empty() {
        Vec::new()
    } else {
        let cut = percentile(&dist, pct);
        dist.iter().enumerate().filter(|(_, &d)| d > cut).map(|(i, _)| i + 1).collect()
    };
    Ok(chunks_from_breaks(doc, &sentences, &breaks))
}

/// Positions `i` (1-based sentence index) where the model starts a new
/// chunk, i.e. where the pair `(s_{i-1}, s_i)` scores below `threshold`.
pub fn model_boundaries<P: EmbeddingProvider + ?Sized>(
    doc: &Document,
    model: &BoundaryModel,
    provider: &P,
    threshold: f64,
) -> Result<Vec<usize>> {
    if model.dim() != provider.dimension() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: provider.dimension() });
    }
    let sentences: Vec<&str> = doc.sentences().collect();
    let vecs = embed_all(provider, &sentences)?;
    let mut out = Vec::new();
    for (i, w) in vecs.windows(2).enumerate() {
        if !model.score_at(&w[0], &w[1], threshold)?.same_section {
            out.push(i + 1);
        }
    }
    Ok(out)
}

/// The trained chunker: walks the document's sentences in order (section
/// titles and boundaries ignored) and starts a new chunk wherever the model
/// predicts the adjacent pair does not belong together.
pub fn chunk_model<P: EmbeddingProvider + ?Sized>(
    doc: &Document,
    model: &BoundaryModel,
    provider: &P,
    threshold: f64,
    max_sentences: Option<usize>,
) -> Result<Vec<Chunk>> {
    let sentences: Vec<&str> = doc.sentences().collect();
    let mut breaks = model_boundaries(doc, model, provider, threshold)?;
    if let Some(cap) = max_sentences.filter(|&c| c > 0) {
        let mut capped = Vec::new();
        let mut start = 0;
        for b in breaks.iter().copied().chain(core::iter::once(sentences.len())) {
            while b - start > cap {
                start += cap;
                capped.push(start);
            }
            if b < sentences.len() {
                capped.push(b);
            }
            start = b;
        }
        breaks = capped;
    }
    Ok(chunks_from_breaks(doc, &sentences, &breaks))
}

/// Dispatches on `config.kind`. `model` is required for the model chunker.
pub fn chunk_document<P: EmbeddingProvider + ?Sized>(
    doc: &Document,
    config: &ChunkerConfig,
    provider: Option<&P>,
    model: Option<&BoundaryModel>,
) -> Result<Vec<Chunk>> {
    config.validate()?;
    let need = |what: &str| Error::Config(alloc::format!("{:?} chunker needs {what}", config.kind));
    match config.kind {
        ChunkerKind::Fixed => chunk_fixed(&doc.id, &doc.full_text(), config.size, config.overlap, config.size_unit),
        ChunkerKind::Recursive => {
            chunk_recursive(&doc.id, &doc.full_text(), config.size, config.overlap, config.size_unit)
        }
        ChunkerKind::Sentence => chunk_sentences(doc, config.window, config.window_overlap),
        ChunkerKind::CosineSemantic => chunk_cosine(doc, provider.ok_or_else(|| need("a provider"))?, config.percentile),
        ChunkerKind::Model => chunk_model(
            doc,
            model.ok_or_else(|| need("a model"))?,
            provider.ok_or_else(|| need("a provider"))?,
            config.threshold,
            config.max_sentences,
        ),
    }
}

/// Mean whitespace-token length of a chunk list.
pub fn mean_tokens(chunks: &[Chunk]) -> f64 {
    if chunks.is_empty() {
        return 0.0;
    }
    chunks.iter().map(|c| count_words(&c.text)).sum::<usize>() as f64 / chunks.len() as f64
}
