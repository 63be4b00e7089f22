//! Seeded synthetic corpora: topic-coherent sections, one planted gold
//! sentence and question per document.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segrag_core::{Document, QaRecord, Section};

/// Words shared by every topic.
pub const FILLER: &[&str] = &[
    "the", "of", "and", "in", "was", "with", "for", "to", "this", "that", "were", "by", "on", "from", "after",
    "between", "during", "patients", "study", "results", "levels", "group", "observed", "compared",
];

const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "kl", "tr", "st"];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];
const CODAS: &[&str] = &["", "", "n", "r", "s", "l", "x", "m"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub documents: usize,
    /// Size of the global topic pool sections draw from.
    pub topics: usize,
    pub words_per_topic: usize,
    /// Inclusive section-count range per document.
    pub sections: (usize, usize),
    /// Inclusive sentence-count range per section.
    pub sentences: (usize, usize),
    /// Inclusive word-count range per sentence.
    pub words: (usize, usize),
    /// Probability that a sentence word is drawn from the section topic.
    pub topic_share: f64,
    /// Document-unique words planted in each gold sentence.
    pub entities: usize,
    /// Document-unique subject words recurring across all its sections.
    pub subject_words: usize,
    /// Words unique to one section of one document, mixed into its
    /// sentences at `subject_share` alongside the subject words.
    pub local_words: usize,
    /// Probability that a sentence word is a subject or local word.
    pub subject_share: f64,
    /// Probability that another sentence of the gold section mentions one
    /// of the document's entity words.
    pub entity_spread: f64,
    /// Seeds the topic vocabularies; corpora sharing it share topics.
    pub vocab_seed: u64,
    /// Seeds document layout, sentences and questions.
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            documents: 50,
            topics: 12,
            words_per_topic: 40,
            sections: (3, 6),
            sentences: (20, 30),
            words: (12, 24),
            topic_share: 0.5,
            entities: 3,
            subject_words: 0,
            local_words: 0,
            subject_share: 0.0,
            entity_spread: 0.0,
            vocab_seed: 42,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub documents: Vec<Document>,
    pub qa: Vec<QaRecord>,
    /// Topic index of every section, per document.
    pub section_topics: Vec<Vec<usize>>,
}

struct Lexicon {
    seen: HashSet<String>,
}

impl Lexicon {
    fn new() -> Self {
        Lexicon { seen: FILLER.iter().map(|s| s.to_string()).collect() }
    }

    fn fresh(&mut self, rng: &mut ChaCha8Rng, syllables: usize) -> String {
        loop {
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(rng).unwrap());
                w.push_str(NUCLEI.choose(rng).unwrap());
                w.push_str(CODAS.choose(rng).unwrap());
            }
            if self.seen.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn capitalize(words: &[String]) -> String {
    let mut s = words.join(" ");
    if let Some(first) = s.get(..1) {
        let up = first.to_uppercase();
        s.replace_range(..1, &up);
    }
    s.push('.');
    s
}

fn sentence(rng: &mut ChaCha8Rng, cfg: &SynthConfig, topic: &[String], subject: &[String], planted: &[String]) -> String {
    let n = rng.random_range(cfg.words.0..=cfg.words.1);
    let mut words: Vec<String> = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            if x < cfg.topic_share {
                topic.choose(rng).unwrap().clone()
            } else if x < cfg.topic_share + cfg.subject_share && !subject.is_empty() {
                subject.choose(rng).unwrap().clone()
            } else {
                FILLER.choose(rng).unwrap().to_string()
            }
        })
        .collect();
    for w in planted {
        let at = rng.random_range(0..=words.len());
        words.insert(at, w.clone());
    }
    capitalize(&words)
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    assert!(cfg.sections.0 >= 1 && cfg.sections.0 <= cfg.sections.1 && cfg.sections.1 <= cfg.topics);
    let mut lex = Lexicon::new();
    let mut vrng = ChaCha8Rng::seed_from_u64(cfg.vocab_seed);
    let vocab: Vec<Vec<String>> =
        (0..cfg.topics).map(|_| (0..cfg.words_per_topic).map(|_| lex.fresh(&mut vrng, 2)).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut documents = Vec::with_capacity(cfg.documents);
    let mut qa = Vec::with_capacity(cfg.documents);
    let mut section_topics = Vec::with_capacity(cfg.documents);
    for d in 0..cfg.documents {
        let id = format!("synth{d:04}");
        let n_sec = rng.random_range(cfg.sections.0..=cfg.sections.1);
        let mut pool: Vec<usize> = (0..cfg.topics).collect();
        pool.shuffle(&mut rng);
        let topics = pool[..n_sec].to_vec();
        let lens: Vec<usize> = (0..n_sec).map(|_| rng.random_range(cfg.sentences.0..=cfg.sentences.1)).collect();
        let gold_sec = rng.random_range(0..n_sec);
        let gold_pos = rng.random_range(0..lens[gold_sec]);
        let entities: Vec<String> = (0..cfg.entities).map(|_| lex.fresh(&mut rng, 3)).collect();
        let doc_subject: Vec<String> = (0..cfg.subject_words).map(|_| lex.fresh(&mut rng, 3)).collect();
        let local: Vec<Vec<String>> =
            (0..n_sec).map(|_| (0..cfg.local_words).map(|_| lex.fresh(&mut rng, 3)).collect()).collect();

        let mut sections = Vec::with_capacity(n_sec);
        let mut gold = String::new();
        let mut gold_topic_words = Vec::new();
        let mut gold_local = Vec::new();
        for (s, (&t, &len)) in topics.iter().zip(&lens).enumerate() {
            let subject: Vec<String> = doc_subject.iter().chain(&local[s]).cloned().collect();
            let mut sents = Vec::with_capacity(len);
            for i in 0..len {
                if s == gold_sec && i == gold_pos {
                    gold_topic_words = vocab[t].choose_multiple(&mut rng, 3).cloned().collect::<Vec<_>>();
                    gold_local = local[s].choose_multiple(&mut rng, cfg.local_words.min(2)).cloned().collect::<Vec<_>>();
                    let mut planted = entities.clone();
                    planted.extend(gold_local.iter().cloned());
                    planted.extend(gold_topic_words.iter().cloned());
                    gold = sentence(&mut rng, cfg, &vocab[t], &subject, &planted);
                    sents.push(gold.clone());
                } else if s == gold_sec && rng.random_bool(cfg.entity_spread) {
                    let e = entities.choose(&mut rng).unwrap().clone();
                    sents.push(sentence(&mut rng, cfg, &vocab[t], &subject, &[e]));
                } else {
                    sents.push(sentence(&mut rng, cfg, &vocab[t], &subject, &[]));
                }
            }
            let title = if s == 0 { "abstract".to_string() } else { format!("Section {s}") };
            sections.push(Section { title: Some(title), sentences: sents });
        }
        let mut question = String::from("What is the effect of");
        for w in entities.iter().take(2).chain(doc_subject.iter().take(2)).chain(&gold_local).chain(&gold_topic_words) {
            write!(question, " {w}").unwrap();
        }
        question.push('?');
        qa.push(QaRecord {
            pubid: id.clone(),
            question,
            gold_context: vec![gold.clone()],
            long_answer: gold,
        });
        documents.push(Document { id, sections });
        section_topics.push(topics);
    }
    SynthCorpus { documents, qa, section_topics }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a document as a minimal JATS article: the first section becomes
/// the abstract, the rest body `<sec>`s, plus a figure and reference list
/// that cleaning must drop.
pub fn to_jats(doc: &Document) -> String {
    let mut x = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<article>\n<front><article-meta>");
    write!(x, "<article-id pub-id-type=\"pmid\">{}</article-id>", escape(&doc.id)).unwrap();
    x.push_str("\n<abstract>");
    let mut secs = doc.sections.iter();
    if let Some(first) = secs.next() {
        write!(x, "<p>{}</p>", escape(&first.sentences.join(" "))).unwrap();
    }
    x.push_str("</abstract></article-meta></front>\n<body>\n");
    for s in secs {
        x.push_str("<sec>");
        if let Some(t) = &s.title {
            write!(x, "<title>{}</title>", escape(t)).unwrap();
        }
        write!(x, "<p>{}</p>", escape(&s.sentences.join(" "))).unwrap();
        x.push_str("</sec>\n");
    }
    x.push_str("<fig id=\"f1\"><label>Figure 1</label><caption><p>Figure caption text.</p></caption></fig>\n");
    x.push_str("</body>\n<back><ref-list><ref><mixed-citation>Reference entry.</mixed-citation></ref></ref-list></back>\n</article>\n");
    x
}
