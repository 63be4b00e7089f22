//! Trains PSC and MFC on a synthetic corpus and compares every chunker's
//! retrieval on a second corpus that shares its topic vocabulary.
//!
//! ```text
//! cargo run --release -p segrag --example compare_chunkers -- --entity-spread 0.3
//! ```

use clap::Parser;
use segrag::experiment::{run_experiment, ExperimentConfig};
use segrag::synth::SynthConfig;

#[derive(Parser)]
struct Opts {
    #[arg(long, default_value_t = 384)]
    dim: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.0)]
    entity_spread: f64,
    #[arg(long, default_value_t = 0)]
    subject_words: usize,
    #[arg(long, default_value_t = 0)]
    local_words: usize,
    #[arg(long, default_value_t = 0.0)]
    subject_share: f64,
    #[arg(long, default_value_t = 0.5)]
    topic_share: f64,
    #[arg(long)]
    json: bool,
}

fn main() -> anyhow::Result<()> {
    let o = Opts::parse();
    let mut cfg = ExperimentConfig { dim: o.dim, ..Default::default() };
    cfg.training.learning_rate = o.lr;
    cfg.training.batch_size = o.batch;
    cfg.training.epochs = o.epochs;
    let shape = SynthConfig {
        entity_spread: o.entity_spread,
        subject_words: o.subject_words,
        local_words: o.local_words,
        subject_share: o.subject_share,
        topic_share: o.topic_share,
        ..Default::default()
    };
    cfg.train = SynthConfig { seed: cfg.train.seed, ..shape.clone() };
    cfg.eval = SynthConfig { seed: cfg.eval.seed, ..shape };
    let exp = run_experiment(&cfg)?;
    if o.json {
        println!("{}", serde_json::to_string_pretty(&exp)?);
        return Ok(());
    }
    let acc = |log: &[segrag_core::boundary::EpochLog]| log.iter().map(|l| l.holdout_acc).fold(0.0, f64::max);
    println!("held-out accuracy: psc {:.3}, mfc {:.3}", acc(&exp.psc_log), acc(&exp.mfc_log));
    println!("{:16} {:>7} {:>9} {:>7} {:>7} {:>7}", "chunker", "chunks", "mean tok", "mrr", "hits@3", "hits@5");
    for r in &exp.runs {
        let s = &r.summary;
        println!(
            "{:16} {:>7} {:>9.1} {:>7.4} {:>7.3} {:>7.3}",
            r.chunker, r.chunks, r.mean_tokens, s.mrr, s.hits["hits_at_3"], s.hits["hits_at_5"]
        );
    }
    Ok(())
}
