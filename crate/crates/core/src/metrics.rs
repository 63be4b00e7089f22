//! Generation metrics (BLEU, ROUGE-N, ROUGE-L) and Welch's t-test.
//!
//! All text metrics work on [`tokenize`](crate::text::tokenize) output:
//! case-folded runs of alphanumerics. Scores are reported in `[0, 1]`;
//! published tables usually multiply by 100.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

fn ngram_counts<T: Ord>(tokens: &[T], n: usize) -> BTreeMap<&[T], usize> {
    let mut m = BTreeMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_default() += 1;
        }
    }
    m
}

/// Clipped n-gram matches and candidate n-gram total for one order: each
/// candidate n-gram counts at most as often as it appears in the most
/// generous reference.
pub fn modified_precision<T: Ord>(candidate: &[T], references: &[&[T]], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let mut max_ref: BTreeMap<&[T], usize> = BTreeMap::new();
    for r in references {
        for (g, c) in ngram_counts(r, n) {
            let e = max_ref.entry(g).or_default();
            *e = (*e).max(c);
        }
    }
    let total = cand.values().sum();
    let clipped = cand.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
    (clipped, total)
}

/// Sentence BLEU with uniform weights over orders `1..=max_n`.
///
/// Orders above 1 with zero matches use add-one smoothing,
/// `(0 + 1) / (total + 1)`. The brevity penalty uses the shortest reference
/// length, so adding a reference never lowers the score.
pub fn bleu<T: Ord>(candidate: &[T], references: &[&[T]], max_n: usize) -> f64 {
    let c = candidate.len();
    if c == 0 || references.is_empty() || max_n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (clipped, total) = modified_precision(candidate, references, n);
        let p = if n == 1 {
            clipped as f64 / total as f64
        } else if clipped == 0 {
            1.0 / (total as f64 + 1.0)
        } else {
            clipped as f64 / total as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += libm::log(p);
    }
    let r = references.iter().map(|r| r.len()).min().unwrap_or(0);
    let bp = if c < r { libm::exp(1.0 - r as f64 / c as f64) } else { 1.0 };
    bp * libm::exp(log_sum / max_n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(hit: usize, cand: usize, reference: usize) -> Self {
        let precision = if cand == 0 { 0.0 } else { hit as f64 / cand as f64 };
        let recall = if reference == 0 { 0.0 } else { hit as f64 / reference as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Prf { precision, recall, f1 }
    }
}

pub fn rouge_n<T: Ord>(candidate: &[T], reference: &[T], n: usize) -> Prf {
    let c = ngram_counts(candidate, n);
    let r = ngram_counts(reference, n);
    let hit = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
    Prf::from_counts(hit, c.values().sum(), r.values().sum())
}

/// Longest common subsequence length, two-row dynamic program.
pub fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> Prf {
    Prf::from_counts(lcs_len(candidate, reference), candidate.len(), reference.len())
}

/// Per-answer scores (F1 for the ROUGE variants).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub qid: String,
    pub bleu: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricMeans {
    pub bleu: f64,
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
}

/// Scores one generated answer against its reference text.
pub fn score_answer(qid: &str, generated: &str, reference: &str) -> MetricRow {
    let c = tokenize(generated);
    let r = tokenize(reference);
    MetricRow {
        qid: qid.into(),
        bleu: bleu(&c, &[&r[..]], 4),
        rouge1: rouge_n(&c, &r, 1).f1,
        rouge2: rouge_n(&c, &r, 2).f1,
        rouge_l: rouge_l(&c, &r).f1,
    }
}

pub fn mean_rows(rows: &[MetricRow]) -> MetricMeans {
    if rows.is_empty() {
        return MetricMeans::default();
    }
    let n = rows.len() as f64;
    let sum = |f: fn(&MetricRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    MetricMeans { bleu: sum(|r| r.bleu), rouge1: sum(|r| r.rouge1), rouge2: sum(|r| r.rouge2), rouge_l: sum(|r| r.rouge_l) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub df: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Continued fraction for the regularized incomplete beta function
/// (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-tailed p-value of Student's t distribution with `df` degrees of
/// freedom.
pub fn t_two_tailed_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Welch's two-sample t-test with Welch–Satterthwaite degrees of freedom.
pub fn ttest_independent(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::SampleTooSmall { min: 2, got: s.len() });
        }
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let df = (a.len() + b.len() - 2) as f64;
        return Ok(if ma == mb {
            TTestResult { t: 0.0, p: 1.0, df }
        } else {
            TTestResult { t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY }, p: 0.0, df }
        });
    }
    let t = (ma - mb) / libm::sqrt(se2);
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    Ok(TTestResult { t, p: t_two_tailed_p(t, df), df })
}
