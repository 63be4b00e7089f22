//! Chunker comparison on a synthetic corpus: train PSC and MFC on one set
//! of documents, then chunk, index and query another set with every
//! chunker.

use serde::Serialize;
use segrag_core::boundary::{train, EpochLog, TrainConfig, Variant};
use segrag_core::chunkers::{chunk_document, mean_tokens, ChunkerConfig, ChunkerKind};
use segrag_core::embedding::TestEncoder;
use segrag_core::pairgen::build_dataset;

use crate::error::Result;
use crate::eval::{evaluate_retrieval, RetrievalOptions, RetrievalSummary};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Corpus the boundary models are trained on.
    pub train: SynthConfig,
    /// Corpus that is chunked and queried.
    pub eval: SynthConfig,
    pub dim: usize,
    pub encoder_seed: u64,
    pub pair_seed: u64,
    pub training: TrainConfig,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            train: SynthConfig { seed: 43, ..Default::default() },
            eval: SynthConfig { seed: 42, ..Default::default() },
            dim: 384,
            encoder_seed: 7,
            pair_seed: 42,
            training: TrainConfig { learning_rate: 0.1, batch_size: 32, ..Default::default() },
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChunkerRun {
    pub chunker: String,
    pub chunks: usize,
    pub mean_tokens: f64,
    pub summary: RetrievalSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Experiment {
    pub psc_log: Vec<EpochLog>,
    pub mfc_log: Vec<EpochLog>,
    /// fixed, recursive, sentence, cosine_semantic, psc, mfc
    pub runs: Vec<ChunkerRun>,
}

impl Experiment {
    pub fn run(&self, chunker: &str) -> Option<&ChunkerRun> {
        self.runs.iter().find(|r| r.chunker == chunker)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    let enc = TestEncoder::new(cfg.dim, cfg.encoder_seed)?;
    let train_corpus = generate(&cfg.train);
    let eval_corpus = generate(&cfg.eval);
    let (pairs, _) = build_dataset(&train_corpus.documents, cfg.pair_seed, 1.0)?;
    let psc = train(Variant::Psc, &pairs, &enc, &cfg.training)?;
    let mfc = train(Variant::Mfc, &pairs, &enc, &cfg.training)?;

    let kinds = [
        ("fixed", ChunkerKind::Fixed, None),
        ("recursive", ChunkerKind::Recursive, None),
        ("sentence", ChunkerKind::Sentence, None),
        ("cosine_semantic", ChunkerKind::CosineSemantic, None),
        ("psc", ChunkerKind::Model, Some(&psc.model)),
        ("mfc", ChunkerKind::Model, Some(&mfc.model)),
    ];
    let options = RetrievalOptions { threads: cfg.threads, ..Default::default() };
    let mut runs = Vec::with_capacity(kinds.len());
    for (name, kind, model) in kinds {
        let config = ChunkerConfig::new(kind);
        let mut chunks = Vec::new();
        for d in &eval_corpus.documents {
            chunks.extend(chunk_document(d, &config, Some(&enc), model)?);
        }
        let (_, summary) = evaluate_retrieval(&chunks, &eval_corpus.qa, &enc, &options)?;
        runs.push(ChunkerRun { chunker: name.into(), chunks: chunks.len(), mean_tokens: mean_tokens(&chunks), summary });
    }
    Ok(Experiment { psc_log: psc.log, mfc_log: mfc.log, runs })
}
