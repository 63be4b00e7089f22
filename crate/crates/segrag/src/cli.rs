//! Command-line surface: argument definitions and subcommand drivers.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use segrag_core::boundary::{train, TrainConfig, Variant};
use segrag_core::chunkers::{chunk_document, mean_tokens, Chunk, ChunkerConfig, ChunkerKind, SizeUnit};
use segrag_core::pairgen::{build_dataset, SentencePair};
use segrag_core::retrieval::{ChunkIndex, RelevanceConfig};
use segrag_core::Document;

use crate::cache::export_texts;
use crate::error::{Error, Result};
use crate::eval::{bench_queries, evaluate_retrieval, par_map, score_answers, thread_count, Answer, RetrievalOptions, TimingSummary};
use crate::io::{load_documents, load_qa, read_jsonl, save_documents, write_atomic, write_jsonl};
use crate::jats::clean_jats;
use crate::modelfile::{load_model, save_model};
use crate::provider::ProviderSpec;
use crate::synth::{generate, to_jats, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "segrag", version, about = "Trainable semantic chunking and chunking-aware RAG evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean JATS XML files into a document JSONL file.
    Clean(CleanArgs),
    /// Build labelled sentence pairs from documents.
    Pairs(PairsArgs),
    /// Train a boundary model on sentence pairs.
    Train(TrainArgs),
    /// Split documents into retrieval chunks.
    Chunk(ChunkArgs),
    /// Rank chunks for each question and report MRR and Hits@k.
    EvalRetrieval(EvalRetrievalArgs),
    /// Score generated answers against reference answers.
    EvalGeneration(EvalGenerationArgs),
    /// Time question embedding plus top-k search.
    Bench(BenchArgs),
    /// Write an embedding cache for every text in the given files.
    Cache(CacheArgs),
    /// Generate a synthetic corpus with questions.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// XML file, or directory of .xml/.nxml files (read in name order).
    #[arg(long)]
    pub input: PathBuf,
    /// Output document JSONL.
    #[arg(long)]
    pub output: PathBuf,
    /// Log and skip files that fail to clean instead of stopping.
    #[arg(long)]
    pub skip_invalid: bool,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    /// Document JSONL.
    #[arg(long)]
    pub docs: PathBuf,
    /// Output pair JSONL.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Negatives drawn per positive, per document.
    #[arg(long, default_value_t = 1.0)]
    pub neg_ratio: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Psc,
    Mfc,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Psc => Variant::Psc,
            VariantArg::Mfc => Variant::Mfc,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Pair JSONL.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Embedding provider: test:<dim>:<seed> or cache:<path>.
    #[arg(long)]
    pub provider: String,
    #[arg(long, value_enum, default_value = "psc")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Fraction of pairs held out for checkpoint selection.
    #[arg(long, default_value_t = 0.02)]
    pub holdout: f64,
    /// Output model file.
    #[arg(long)]
    pub output: PathBuf,
    /// Per-epoch training log (JSONL).
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Fixed,
    Sentence,
    Recursive,
    CosineSemantic,
    Model,
}

impl From<KindArg> for ChunkerKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Fixed => ChunkerKind::Fixed,
            KindArg::Sentence => ChunkerKind::Sentence,
            KindArg::Recursive => ChunkerKind::Recursive,
            KindArg::CosineSemantic => ChunkerKind::CosineSemantic,
            KindArg::Model => ChunkerKind::Model,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SizeUnitArg {
    Tokens,
    Chars,
}

#[derive(Debug, Args)]
pub struct ChunkArgs {
    /// Document JSONL.
    #[arg(long)]
    pub docs: PathBuf,
    /// Output chunk JSONL.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Chunk size for fixed and recursive chunkers.
    #[arg(long, default_value_t = 1000)]
    pub size: usize,
    /// Overlap for fixed and recursive chunkers.
    #[arg(long, default_value_t = 200)]
    pub overlap: usize,
    #[arg(long, value_enum, default_value = "tokens")]
    pub size_unit: SizeUnitArg,
    /// Sentences per window for the sentence chunker.
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    /// Sentences shared by consecutive windows.
    #[arg(long, default_value_t = 1)]
    pub window_overlap: usize,
    /// Distance percentile that splits the cosine-semantic chunker.
    #[arg(long, default_value_t = 95.0)]
    pub percentile: f64,
    /// Same-section probability below which the model chunker splits.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Optional cap on sentences per model chunk.
    #[arg(long)]
    pub max_sentences: Option<usize>,
    /// Boundary model file (model chunker).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Embedding provider (cosine-semantic and model chunkers).
    #[arg(long)]
    pub provider: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RelevanceArg {
    Substring,
    Overlap,
    Both,
}

#[derive(Debug, Args)]
pub struct EvalRetrievalArgs {
    /// Chunk JSONL (all documents share one index).
    #[arg(long)]
    pub chunks: PathBuf,
    /// QA JSONL with gold context.
    #[arg(long)]
    pub qa: PathBuf,
    #[arg(long)]
    pub provider: String,
    /// Cutoffs for Hits@k.
    #[arg(long, value_delimiter = ',', default_value = "3,5")]
    pub k: Vec<usize>,
    /// Ranked chunks stored per query.
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    #[arg(long, value_enum, default_value = "both")]
    pub relevance: RelevanceArg,
    /// Token-overlap F1 threshold for the overlap test.
    #[arg(long, default_value_t = 0.8)]
    pub overlap_f1: f64,
    /// Per-query results JSONL.
    #[arg(long)]
    pub results: Option<PathBuf>,
    /// Summary JSON; printed to stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalGenerationArgs {
    /// Answers JSONL: {"qid", "answer"}.
    #[arg(long)]
    pub answers: PathBuf,
    /// QA JSONL holding reference long answers.
    #[arg(long)]
    pub qa: PathBuf,
    /// Report JSON; printed to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub chunks: PathBuf,
    #[arg(long)]
    pub qa: PathBuf,
    #[arg(long)]
    pub provider: String,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    /// Provider whose vectors are stored.
    #[arg(long)]
    pub provider: String,
    /// Document JSONL: every sentence is cached.
    #[arg(long)]
    pub docs: Option<PathBuf>,
    /// Chunk JSONL: every chunk text is cached.
    #[arg(long)]
    pub chunks: Option<PathBuf>,
    /// QA JSONL: every question is cached.
    #[arg(long)]
    pub qa: Option<PathBuf>,
    /// Pair JSONL: both sides of every pair are cached.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving docs.jsonl, qa.jsonl and xml/.
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub documents: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Seed of the topic vocabularies.
    #[arg(long, default_value_t = 42)]
    pub vocab_seed: u64,
    /// Also render each document as JATS XML.
    #[arg(long)]
    pub xml: bool,
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("in-memory serialization");
    out.push(b'\n');
    out
}

fn emit<T: Serialize>(v: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, &to_json(v)),
        None => {
            print!("{}", String::from_utf8(to_json(v)).expect("json is utf-8"));
            Ok(())
        }
    }
}

fn xml_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(input).map_err(|e| Error::io(input, e))? {
        let path = entry.map_err(|e| Error::io(input, e))?.path();
        if matches!(path.extension().and_then(|e| e.to_str()), Some("xml" | "nxml")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn cmd_clean(a: &CleanArgs) -> Result<()> {
    let files = xml_inputs(&a.input)?;
    let results = par_map(&files, thread_count(), |path| -> Result<Document> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        clean_jats(&bytes, &stem).map_err(|e| match e {
            Error::Xml { offset, message } => Error::Xml { offset, message: format!("{}: {message}", path.display()) },
            other => other,
        })
    });
    let mut docs = Vec::with_capacity(files.len());
    for (path, r) in files.iter().zip(results) {
        match r {
            Ok(d) => docs.push(d),
            Err(e) if a.skip_invalid => log::warn!("skipping {}: {e}", path.display()),
            Err(e) => return Err(e),
        }
    }
    save_documents(&docs, &a.output)?;
    log::info!("cleaned {} of {} files", docs.len(), files.len());
    Ok(())
}

pub fn cmd_pairs(a: &PairsArgs) -> Result<()> {
    let docs = load_documents(&a.docs)?;
    let (pairs, stats) = build_dataset(&docs, a.seed, a.neg_ratio)?;
    write_jsonl(&a.output, &pairs)?;
    emit(&stats, None)
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let pairs: Vec<SentencePair> = read_jsonl(&a.pairs)?;
    let provider = a.provider.parse::<ProviderSpec>()?.open()?;
    let variant = Variant::from(a.variant);
    let config =
        TrainConfig { epochs: a.epochs, batch_size: a.batch, learning_rate: a.lr, seed: a.seed, holdout_fraction: a.holdout };
    let outcome = train(variant, &pairs, &*provider, &config)?;
    save_model(&outcome.model, &a.output)?;
    if let Some(log) = &a.log {
        write_jsonl(log, &outcome.log)?;
    }
    #[derive(Serialize)]
    struct Report {
        variant: String,
        best_epoch: usize,
        epochs: Vec<segrag_core::boundary::EpochLog>,
    }
    emit(&Report { variant: variant.to_string(), best_epoch: outcome.best_epoch, epochs: outcome.log }, None)
}

pub fn chunker_config(a: &ChunkArgs) -> ChunkerConfig {
    ChunkerConfig {
        kind: a.kind.into(),
        size: a.size,
        overlap: a.overlap,
        size_unit: match a.size_unit {
            SizeUnitArg::Tokens => SizeUnit::Tokens,
            SizeUnitArg::Chars => SizeUnit::Chars,
        },
        window: a.window,
        window_overlap: a.window_overlap,
        percentile: a.percentile,
        threshold: a.threshold,
        max_sentences: a.max_sentences,
    }
}

pub fn cmd_chunk(a: &ChunkArgs) -> Result<()> {
    let config = chunker_config(a);
    config.validate()?;
    let docs = load_documents(&a.docs)?;
    let provider = a.provider.as_deref().map(|s| s.parse::<ProviderSpec>()?.open()).transpose()?;
    let model = a.model.as_deref().map(|p| load_model(p, None)).transpose()?;
    let per_doc = par_map(&docs, thread_count(), |d| chunk_document(d, &config, provider.as_deref(), model.as_ref()));
    let mut chunks: Vec<Chunk> = Vec::new();
    for r in per_doc {
        chunks.extend(r?);
    }
    write_jsonl(&a.output, &chunks)?;
    log::info!("{} chunks, mean {:.1} tokens", chunks.len(), mean_tokens(&chunks));
    Ok(())
}

pub fn cmd_eval_retrieval(a: &EvalRetrievalArgs) -> Result<()> {
    let chunks: Vec<Chunk> = read_jsonl(&a.chunks)?;
    let qa = load_qa(&a.qa)?;
    let provider = a.provider.parse::<ProviderSpec>()?.open()?;
    let relevance = match a.relevance {
        RelevanceArg::Substring => RelevanceConfig { substring: true, overlap_f1: None },
        RelevanceArg::Overlap => RelevanceConfig { substring: false, overlap_f1: Some(a.overlap_f1) },
        RelevanceArg::Both => RelevanceConfig { substring: true, overlap_f1: Some(a.overlap_f1) },
    };
    let options = RetrievalOptions { ks: a.k.clone(), top_k: a.top_k, relevance, threads: thread_count() };
    let (results, summary) = evaluate_retrieval(&chunks, &qa, &*provider, &options)?;
    if let Some(p) = &a.results {
        write_jsonl(p, &results)?;
    }
    emit(&summary, a.summary.as_deref())
}

pub fn cmd_eval_generation(a: &EvalGenerationArgs) -> Result<()> {
    let answers: Vec<Answer> = read_jsonl(&a.answers)?;
    let qa = load_qa(&a.qa)?;
    let report = score_answers(&answers, &qa)?;
    if !report.missing_answers.is_empty() {
        log::warn!("{} reference ids have no answer", report.missing_answers.len());
    }
    emit(&report, a.output.as_deref())
}

pub fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let chunks: Vec<Chunk> = read_jsonl(&a.chunks)?;
    let qa = load_qa(&a.qa)?;
    let provider = a.provider.parse::<ProviderSpec>()?.open()?;
    let index = ChunkIndex::build(&chunks, &*provider)?;
    let questions: Vec<&str> = qa.iter().map(|r| r.question.as_str()).collect();
    let times = bench_queries(&index, &*provider, &questions, a.k, a.repeats)?;
    #[derive(Serialize)]
    struct Report {
        queries: usize,
        repeats: usize,
        chunks: usize,
        #[serde(flatten)]
        timing: TimingSummary,
    }
    emit(&Report { queries: questions.len(), repeats: a.repeats, chunks: chunks.len(), timing: TimingSummary::of(&times) }, None)
}

pub fn cmd_cache(a: &CacheArgs) -> Result<()> {
    let provider = a.provider.parse::<ProviderSpec>()?.open()?;
    let mut texts: Vec<String> = Vec::new();
    if let Some(p) = &a.docs {
        texts.extend(load_documents(p)?.iter().flat_map(|d| d.sentences().map(str::to_string).collect::<Vec<_>>()));
    }
    if let Some(p) = &a.chunks {
        texts.extend(read_jsonl::<Chunk>(p)?.into_iter().map(|c| c.text));
    }
    if let Some(p) = &a.qa {
        texts.extend(load_qa(p)?.into_iter().map(|r| r.question));
    }
    if let Some(p) = &a.pairs {
        texts.extend(read_jsonl::<SentencePair>(p)?.into_iter().flat_map(|s| [s.a, s.b]));
    }
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let n = export_texts(&a.output, &*provider, &refs)?;
    log::info!("cached {n} distinct texts");
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let corpus = generate(&SynthConfig { documents: a.documents, seed: a.seed, vocab_seed: a.vocab_seed, ..Default::default() });
    fs::create_dir_all(&a.output_dir).map_err(|e| Error::io(&a.output_dir, e))?;
    save_documents(&corpus.documents, &a.output_dir.join("docs.jsonl"))?;
    write_jsonl(&a.output_dir.join("qa.jsonl"), &corpus.qa)?;
    if a.xml {
        let dir = a.output_dir.join("xml");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for d in &corpus.documents {
            write_atomic(&dir.join(format!("{}.xml", d.id)), to_jats(d).as_bytes())?;
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Clean(a) => cmd_clean(a),
        Command::Pairs(a) => cmd_pairs(a),
        Command::Train(a) => cmd_train(a),
        Command::Chunk(a) => cmd_chunk(a),
        Command::EvalRetrieval(a) => cmd_eval_retrieval(a),
        Command::EvalGeneration(a) => cmd_eval_generation(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Cache(a) => cmd_cache(a),
        Command::Synth(a) => cmd_synth(a),
    }
}
