//! Retrieval and generation evaluation.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use segrag_core::chunkers::Chunk;
use segrag_core::embedding::EmbeddingProvider;
use segrag_core::metrics::{mean_rows, score_answer, MetricMeans, MetricRow};
use segrag_core::retrieval::{first_relevant_rank, judge_relevant, summarize_ranks, ChunkIndex, RelevanceConfig};
use segrag_core::QaRecord;

use crate::error::{Error, Result};

/// Worker count from `SEGRAG_THREADS`, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("SEGRAG_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Applies `f` to each item on up to `threads` workers, keeping input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let per = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(per)
            .map(|part| {
                let f = &f;
                s.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedChunk {
    pub doc_id: String,
    pub index: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub qid: String,
    pub ranks: Vec<RankedChunk>,
    /// 1-based, over the full ranking.
    pub first_relevant_rank: Option<usize>,
    pub query_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub mean_s: f64,
    pub median_s: f64,
    pub p95_s: f64,
}

impl TimingSummary {
    pub fn of(times: &[f64]) -> Self {
        if times.is_empty() {
            return TimingSummary { mean_s: 0.0, median_s: 0.0, p95_s: 0.0 };
        }
        let mut sorted = times.to_vec();
        sorted.sort_by(f64::total_cmp);
        TimingSummary {
            mean_s: times.iter().sum::<f64>() / times.len() as f64,
            median_s: segrag_core::chunkers::percentile(&sorted, 50.0),
            p95_s: segrag_core::chunkers::percentile(&sorted, 95.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalSummary {
    pub queries: usize,
    /// Records without gold context, left out of every figure.
    pub skipped: usize,
    pub chunks: usize,
    pub mrr: f64,
    /// `hits_at_<k>` for each requested k.
    #[serde(flatten)]
    pub hits: BTreeMap<String, f64>,
    pub mean_query_time_s: f64,
    pub median_query_time_s: f64,
    pub p95_query_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct RetrievalOptions {
    pub ks: Vec<usize>,
    /// Length of the ranking stored per query.
    pub top_k: usize,
    pub relevance: RelevanceConfig,
    pub threads: usize,
}

impl Default for RetrievalOptions {
    fn default() -> Self {
        RetrievalOptions { ks: vec![3, 5], top_k: 5, relevance: RelevanceConfig::default(), threads: 1 }
    }
}

/// Ranks every chunk of the pooled corpus for each question with gold
/// context. The timed part is question embedding plus top-k search.
pub fn evaluate_retrieval<P: EmbeddingProvider + Sync + ?Sized>(
    chunks: &[Chunk],
    qa: &[QaRecord],
    provider: &P,
    options: &RetrievalOptions,
) -> Result<(Vec<QueryResult>, RetrievalSummary)> {
    let index = ChunkIndex::build(chunks, provider)?;
    let usable: Vec<&QaRecord> = qa.iter().filter(|r| !r.gold_context.is_empty()).collect();
    let results = par_map(&usable, options.threads, |r| -> Result<QueryResult> {
        let start = Instant::now();
        let q = provider.embed(&r.question)?;
        let top = index.top_k(q.values(), options.top_k)?;
        let query_time_s = start.elapsed().as_secs_f64();
        let full = index.rank_all(q.values())?;
        let first = first_relevant_rank(&full, |e| judge_relevant(&chunks[e].text, &r.gold_context, &options.relevance));
        Ok(QueryResult {
            qid: r.pubid.clone(),
            ranks: top
                .iter()
                .map(|h| RankedChunk { doc_id: chunks[h.entry].doc_id.clone(), index: chunks[h.entry].index, score: h.score })
                .collect(),
            first_relevant_rank: first,
            query_time_s,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let ranks: Vec<Option<usize>> = results.iter().map(|r| r.first_relevant_rank).collect();
    let rs = summarize_ranks(&ranks, &options.ks);
    let times: Vec<f64> = results.iter().map(|r| r.query_time_s).collect();
    let t = TimingSummary::of(&times);
    let summary = RetrievalSummary {
        queries: rs.queries,
        skipped: qa.len() - usable.len(),
        chunks: chunks.len(),
        mrr: rs.mrr,
        hits: rs.hits.iter().map(|(k, v)| (format!("hits_at_{k}"), *v)).collect(),
        mean_query_time_s: t.mean_s,
        median_query_time_s: t.median_s,
        p95_query_time_s: t.p95_s,
    };
    Ok((results, summary))
}

/// Times `repeats` passes of embed-plus-top-k over `questions`.
pub fn bench_queries<P: EmbeddingProvider + ?Sized>(
    index: &ChunkIndex,
    provider: &P,
    questions: &[&str],
    k: usize,
    repeats: usize,
) -> Result<Vec<f64>> {
    let mut times = Vec::with_capacity(questions.len() * repeats);
    for _ in 0..repeats {
        for q in questions {
            let start = Instant::now();
            let v = provider.embed(q)?;
            std::hint::black_box(index.top_k(v.values(), k)?);
            times.push(start.elapsed().as_secs_f64());
        }
    }
    Ok(times)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub qid: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub per_query: Vec<MetricRow>,
    pub aggregate: MetricMeans,
    pub missing_answers: Vec<String>,
    pub unknown_answers: Vec<String>,
}

/// Scores answers against reference long answers on shared ids, in
/// reference order. Fails when no id is shared.
pub fn score_answers(answers: &[Answer], references: &[QaRecord]) -> Result<GenerationReport> {
    let by_id: HashMap<&str, &str> = answers.iter().map(|a| (a.qid.as_str(), a.answer.as_str())).collect();
    let ref_ids: std::collections::HashSet<&str> = references.iter().map(|r| r.pubid.as_str()).collect();
    let mut per_query = Vec::new();
    let mut missing_answers = Vec::new();
    for r in references {
        match by_id.get(r.pubid.as_str()) {
            Some(a) => per_query.push(score_answer(&r.pubid, a, &r.long_answer)),
            None => missing_answers.push(r.pubid.clone()),
        }
    }
    if per_query.is_empty() {
        return Err(Error::NoCommonIds { answers: answers.len(), references: references.len() });
    }
    let unknown_answers =
        answers.iter().filter(|a| !ref_ids.contains(a.qid.as_str())).map(|a| a.qid.clone()).collect();
    let aggregate = mean_rows(&per_query);
    Ok(GenerationReport { per_query, aggregate, missing_answers, unknown_answers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use segrag_core::chunkers::Unit;
    use segrag_core::embedding::TestEncoder;

    fn chunk(doc: &str, i: usize, text: &str) -> Chunk {
        Chunk { doc_id: doc.into(), index: i, span: [i, i + 1], unit: Unit::Sentence, text: text.into() }
    }

    fn qa(id: &str, q: &str, gold: &[&str]) -> QaRecord {
        QaRecord {
            pubid: id.into(),
            question: q.into(),
            gold_context: gold.iter().map(|s| s.to_string()).collect(),
            long_answer: "answer".into(),
        }
    }

    #[test]
    fn ranks_and_summary() {
        let chunks = vec![
            chunk("a", 0, "Insulin levels fell sharply after treatment."),
            chunk("a", 1, "Bone density was unchanged in all groups."),
            chunk("b", 0, "Heart rate rose during exercise trials."),
        ];
        let records = vec![
            qa("q1", "did insulin levels fall after treatment", &["Insulin levels fell sharply after treatment."]),
            qa("q2", "was heart rate affected by exercise", &["Heart rate rose during exercise trials"]),
            qa("q3", "unrelated", &["Nothing like this appears."]),
            qa("q4", "no gold", &[]),
        ];
        let enc = TestEncoder::new(64, 3).unwrap();
        let opts = RetrievalOptions { threads: 2, top_k: 2, ..Default::default() };
        let (res, sum) = evaluate_retrieval(&chunks, &records, &enc, &opts).unwrap();
        assert_eq!(res.len(), 3);
        assert_eq!(res[0].first_relevant_rank, Some(1));
        assert_eq!(res[1].first_relevant_rank, Some(1));
        assert_eq!(res[2].first_relevant_rank, None);
        assert_eq!(res[0].ranks.len(), 2);
        assert_eq!(sum.skipped, 1);
        assert_eq!(sum.queries, 3);
        assert!((sum.mrr - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(sum.hits["hits_at_3"], 2.0 / 3.0);
        let json = serde_json::to_value(&sum).unwrap();
        for key in ["hits_at_3", "hits_at_5", "mrr", "mean_query_time_s"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let (serial, _) = evaluate_retrieval(&chunks, &records, &enc, &RetrievalOptions { threads: 1, top_k: 2, ..Default::default() }).unwrap();
        let strip = |v: &[QueryResult]| v.iter().map(|r| (r.qid.clone(), r.ranks.clone(), r.first_relevant_rank)).collect::<Vec<_>>();
        assert_eq!(strip(&res), strip(&serial));
    }

    #[test]
    fn generation_scoring() {
        let refs = vec![qa("1", "q", &[]), qa("2", "q", &[])];
        let answers = vec![
            Answer { qid: "2".into(), answer: "answer".into() },
            Answer { qid: "9".into(), answer: "x".into() },
        ];
        let rep = score_answers(&answers, &refs).unwrap();
        assert_eq!(rep.per_query.len(), 1);
        assert_eq!(rep.per_query[0].qid, "2");
        assert_eq!(rep.missing_answers, ["1"]);
        assert_eq!(rep.unknown_answers, ["9"]);
        assert!((rep.aggregate.rouge1 - 1.0).abs() < 1e-12);
        let none = score_answers(&[Answer { qid: "7".into(), answer: "a".into() }], &refs);
        assert!(matches!(none, Err(Error::NoCommonIds { .. })));
    }

    #[test]
    fn timing_summary() {
        let t = TimingSummary::of(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(t.mean_s, 2.5);
        assert_eq!(t.median_s, 2.5);
        assert!((t.p95_s - 3.85).abs() < 1e-12);
    }

    #[test]
    fn par_map_keeps_order() {
        let v: Vec<usize> = (0..37).collect();
        assert_eq!(par_map(&v, 4, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
        assert!(par_map(&Vec::<usize>::new(), 3, |x| *x).is_empty());
    }
}
