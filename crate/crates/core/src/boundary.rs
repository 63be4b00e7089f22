//! Boundary scorers: Projected Similarity (PSC) and Metric Fusion (MFC).
//!
//! Both project each sentence embedding with one shared affine map
//! `u = W·e_i + c`, `v = W·e_j + c`. PSC scores a pair with the dot product
//! `u·v`; MFC feeds `[u·v, ‖u−v‖₂, ‖u−v‖₁]` through a learned 3→1 layer.
//! The raw score is a logit: `sigmoid(raw) ≥ 0.5` means the two sentences
//! belong together, anything lower marks a chunk boundary.
//!
//! Parameters are stored as `f32`; all arithmetic, including training,
//! runs in `f64`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{gaussian, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::pairgen::SentencePair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Psc,
    Mfc,
}

impl Variant {
    pub fn code(self) -> u8 {
        match self {
            Variant::Psc => 0,
            Variant::Mfc => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Variant::Psc),
            1 => Some(Variant::Mfc),
            _ => None,
        }
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "psc" => Ok(Variant::Psc),
            "mfc" => Ok(Variant::Mfc),
            _ => Err(Error::Config(alloc::format!("unknown variant {s:?}"))),
        }
    }
}

impl core::fmt::Display for Variant {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Variant::Psc => "psc",
            Variant::Mfc => "mfc",
        })
    }
}

/// MFC's 3→1 layer over (dot, euclidean, manhattan).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fusion {
    pub weights: [f32; 3],
    pub bias: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub raw: f64,
    pub probability: f64,
    pub same_section: bool,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy on a logit in the overflow-free form
/// `max(x, 0) − x·y + ln(1 + e^−|x|)`. Returns the loss and `dL/dx`.
pub fn bce_with_logits(raw: f64, label: f64) -> (f64, f64) {
    let loss = raw.max(0.0) - raw * label + libm::log1p(libm::exp(-raw.abs()));
    (loss, sigmoid(raw) - label)
}

/// A trained (or hand-built) boundary scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryModel {
    variant: Variant,
    dim: usize,
    /// `dim × dim`, row-major.
    weight: Vec<f32>,
    bias: Vec<f32>,
    fusion: Option<Fusion>,
}

impl BoundaryModel {
    /// Assembles a model from raw parts, checking shapes and finiteness.
    /// MFC requires `fusion`; PSC forbids it.
    pub fn from_parts(
        variant: Variant,
        dim: usize,
        weight: Vec<f32>,
        bias: Vec<f32>,
        fusion: Option<Fusion>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("model dimension must be positive".into()));
        }
        if weight.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: weight.len() });
        }
        if bias.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: bias.len() });
        }
        match (variant, &fusion) {
            (Variant::Psc, Some(_)) => return Err(Error::Config("PSC models carry no fusion layer".into())),
            (Variant::Mfc, None) => return Err(Error::Config("MFC models need a fusion layer".into())),
            _ => {}
        }
        let fusion_finite = fusion.is_none_or(|f| f.bias.is_finite() && f.weights.iter().all(|w| w.is_finite()));
        if !(fusion_finite && weight.iter().chain(&bias).all(|x| x.is_finite())) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        Ok(BoundaryModel { variant, dim, weight, bias, fusion })
    }

    /// Identity projection, zero bias and an equal-weight fusion layer.
    pub fn identity(variant: Variant, dim: usize) -> Self {
        Parameters::identity(variant, dim).to_model()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight(&self) -> &[f32] {
        &self.weight
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn fusion(&self) -> Option<Fusion> {
        self.fusion
    }

    fn project(&self, e: &[f32]) -> Vec<f64> {
        self.weight
            .chunks_exact(self.dim)
            .zip(&self.bias)
            .map(|(row, &c)| row.iter().zip(e).map(|(&w, &x)| w as f64 * x as f64).sum::<f64>() + c as f64)
            .collect()
    }

    /// Raw logit for a sentence pair.
    pub fn raw_score(&self, e_i: &[f32], e_j: &[f32]) -> Result<f64> {
        for e in [e_i, e_j] {
            if e.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, actual: e.len() });
            }
        }
        let u = self.project(e_i);
        let v = self.project(e_j);
        let f = features(&u, &v);
        Ok(match self.fusion {
            None => f[0],
            Some(fu) => fu.weights.iter().zip(f).map(|(&w, x)| w as f64 * x).sum::<f64>() + fu.bias as f64,
        })
    }

    /// Scores a pair at the default 0.5 decision threshold.
    pub fn score(&self, e_i: &[f32], e_j: &[f32]) -> Result<Prediction> {
        self.score_at(e_i, e_j, 0.5)
    }

    /// Scores a pair; `same_section` holds when the probability is at least
    /// `threshold`.
    pub fn score_at(&self, e_i: &[f32], e_j: &[f32], threshold: f64) -> Result<Prediction> {
        let raw = self.raw_score(e_i, e_j)?;
        let probability = sigmoid(raw);
        let same_section = if threshold == 0.5 { raw >= 0.0 } else { probability >= threshold };
        Ok(Prediction { raw, probability, same_section })
    }
}

/// `[u·v, ‖u−v‖₂, ‖u−v‖₁]`
fn features(u: &[f64], v: &[f64]) -> [f64; 3] {
    let mut d = 0.0;
    let mut l2 = 0.0;
    let mut l1 = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        d += a * b;
        l2 += (a - b) * (a - b);
        l1 += (a - b).abs();
    }
    [d, libm::sqrt(l2), l1]
}

/// Full-precision trainable parameters. For PSC the fusion fields are unused
/// and stay at zero gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub variant: Variant,
    pub dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub fusion_w: [f64; 3],
    pub fusion_b: f64,
}

/// Per-pair intermediate values kept for the backward pass.
struct Forward {
    u: Vec<f64>,
    v: Vec<f64>,
    feats: [f64; 3],
    raw: f64,
}

impl Parameters {
    pub fn identity(variant: Variant, dim: usize) -> Self {
        let mut weight = vec![0.0; dim * dim];
        for i in 0..dim {
            weight[i * dim + i] = 1.0;
        }
        Parameters {
            variant,
            dim,
            weight,
            bias: vec![0.0; dim],
            fusion_w: [1.0 / 3.0; 3],
            fusion_b: 0.0,
        }
    }

    /// Identity plus N(0, (0.01/√d)²) noise on `W`; zero bias; equal fusion
    /// weights.
    pub fn init(variant: Variant, dim: usize, seed: u64) -> Self {
        let mut p = Self::identity(variant, dim);
        let sigma = 0.01 / libm::sqrt(dim as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut p.weight {
            *w += sigma * gaussian(&mut rng);
        }
        p
    }

    pub fn from_model(m: &BoundaryModel) -> Self {
        let (fusion_w, fusion_b) = match m.fusion {
            Some(f) => (f.weights.map(f64::from), f.bias as f64),
            None => ([0.0; 3], 0.0),
        };
        Parameters {
            variant: m.variant,
            dim: m.dim,
            weight: m.weight.iter().map(|&x| x as f64).collect(),
            bias: m.bias.iter().map(|&x| x as f64).collect(),
            fusion_w,
            fusion_b,
        }
    }

    pub fn to_model(&self) -> BoundaryModel {
        BoundaryModel {
            variant: self.variant,
            dim: self.dim,
            weight: self.weight.iter().map(|&x| x as f32).collect(),
            bias: self.bias.iter().map(|&x| x as f32).collect(),
            fusion: match self.variant {
                Variant::Psc => None,
                Variant::Mfc => Some(Fusion { weights: self.fusion_w.map(|x| x as f32), bias: self.fusion_b as f32 }),
            },
        }
    }

    /// A zeroed parameter set of the same shape, used as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        Parameters {
            variant: self.variant,
            dim: self.dim,
            weight: vec![0.0; self.weight.len()],
            bias: vec![0.0; self.dim],
            fusion_w: [0.0; 3],
            fusion_b: 0.0,
        }
    }

    fn project(&self, e: &[f64]) -> Vec<f64> {
        self.weight
            .chunks_exact(self.dim)
            .zip(&self.bias)
            .map(|(row, &c)| row.iter().zip(e).map(|(w, x)| w * x).sum::<f64>() + c)
            .collect()
    }

    fn forward(&self, e_i: &[f64], e_j: &[f64]) -> Forward {
        let u = self.project(e_i);
        let v = self.project(e_j);
        let feats = features(&u, &v);
        let raw = match self.variant {
            Variant::Psc => feats[0],
            Variant::Mfc => self.fusion_w.iter().zip(feats).map(|(w, f)| w * f).sum::<f64>() + self.fusion_b,
        };
        Forward { u, v, feats, raw }
    }

    pub fn raw_score(&self, e_i: &[f64], e_j: &[f64]) -> f64 {
        self.forward(e_i, e_j).raw
    }

    /// BCE loss of one labelled pair.
    pub fn loss(&self, e_i: &[f64], e_j: &[f64], label: f64) -> f64 {
        bce_with_logits(self.raw_score(e_i, e_j), label).0
    }

    /// Adds `scale · ∂L/∂θ` for one pair into `grad` and returns the
    /// unscaled loss.
    pub fn accumulate_gradient(&self, e_i: &[f64], e_j: &[f64], label: f64, scale: f64, grad: &mut Parameters) -> f64 {
        let fw = self.forward(e_i, e_j);
        let (loss, d_raw) = bce_with_logits(fw.raw, label);
        let g = scale * d_raw;

        // ∂raw/∂u and ∂raw/∂v
        let (gu, gv): (Vec<f64>, Vec<f64>) = match self.variant {
            Variant::Psc => (fw.v.clone(), fw.u.clone()),
            Variant::Mfc => {
                let [a_dot, a_l2, a_l1] = self.fusion_w;
                let l2 = fw.feats[1];
                fw.u
                    .iter()
                    .zip(&fw.v)
                    .map(|(&a, &b)| {
                        let diff = a - b;
                        let d_l2 = if l2 > 0.0 { diff / l2 } else { 0.0 };
                        let d_l1 = if diff > 0.0 {
                            1.0
                        } else if diff < 0.0 {
                            -1.0
                        } else {
                            0.0
                        };
                        let shared = a_l2 * d_l2 + a_l1 * d_l1;
                        (a_dot * b + shared, a_dot * a - shared)
                    })
                    .unzip()
            }
        };

        let d = self.dim;
        for r in 0..d {
            let (gur, gvr) = (g * gu[r], g * gv[r]);
            grad.bias[r] += gur + gvr;
            let row = &mut grad.weight[r * d..(r + 1) * d];
            for ((w, &xi), &xj) in row.iter_mut().zip(e_i).zip(e_j) {
                *w += gur * xi + gvr * xj;
            }
        }
        if self.variant == Variant::Mfc {
            for (gw, f) in grad.fusion_w.iter_mut().zip(fw.feats) {
                *gw += g * f;
            }
            grad.fusion_b += g;
        }
        loss
    }

    /// `θ ← θ − lr · grad`
    pub fn step(&mut self, grad: &Parameters, lr: f64) {
        for (p, g) in self.weight.iter_mut().zip(&grad.weight) {
            *p -= lr * g;
        }
        for (p, g) in self.bias.iter_mut().zip(&grad.bias) {
            *p -= lr * g;
        }
        if self.variant == Variant::Mfc {
            for (p, g) in self.fusion_w.iter_mut().zip(grad.fusion_w) {
                *p -= lr * g;
            }
            self.fusion_b -= lr * grad.fusion_b;
        }
    }

    /// Flat views of every trainable scalar, in a fixed order:
    /// `W` row-major, `c`, then (MFC only) fusion weights and bias.
    pub fn values_mut(&mut self) -> Vec<&mut f64> {
        let mfc = self.variant == Variant::Mfc;
        let mut out: Vec<&mut f64> = self.weight.iter_mut().chain(self.bias.iter_mut()).collect();
        if mfc {
            out.extend(self.fusion_w.iter_mut());
            out.push(&mut self.fusion_b);
        }
        out
    }

    pub fn values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.weight.iter().chain(&self.bias).copied().collect();
        if self.variant == Variant::Mfc {
            out.extend(self.fusion_w);
            out.push(self.fusion_b);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Fraction of pairs held out for checkpoint selection.
    pub holdout_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 5, batch_size: 256, learning_rate: 1e-3, seed: 42, holdout_fraction: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Checkpoint with the best held-out accuracy (earliest on ties).
    pub model: BoundaryModel,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
    /// Parameters after the last epoch, regardless of selection.
    pub last: BoundaryModel,
}

/// Pair accuracy of `model` at the 0.5 threshold.
pub fn accuracy(model: &BoundaryModel, examples: &[(Vec<f32>, Vec<f32>, u8)]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (a, b, y) in examples {
        if model.score(a, b)?.same_section == (*y == 1) {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

fn intern<'a, P: EmbeddingProvider + ?Sized>(
    text: &'a str,
    ids: &mut BTreeMap<&'a str, usize>,
    vectors: &mut Vec<Vec<f32>>,
    provider: &P,
) -> Result<usize> {
    if let Some(&i) = ids.get(text) {
        return Ok(i);
    }
    let e = provider.embed(text)?;
    if e.dim() != provider.dimension() {
        return Err(Error::DimensionMismatch { expected: provider.dimension(), actual: e.dim() });
    }
    vectors.push(e.into_inner());
    ids.insert(text, vectors.len() - 1);
    Ok(vectors.len() - 1)
}

/// Mini-batch SGD on the BCE objective through `W`, `c` and (MFC) the
/// fusion layer. Deterministic given `config.seed`.
pub fn train<P: EmbeddingProvider + ?Sized>(
    variant: Variant,
    pairs: &[SentencePair],
    provider: &P,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate >= 0.0) {
        return Err(Error::Config("learning rate must be finite and non-negative".into()));
    }
    if !(0.0..1.0).contains(&config.holdout_fraction) {
        return Err(Error::Config("holdout fraction must lie in [0, 1)".into()));
    }
    let dim = provider.dimension();

    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    let mut vectors: Vec<Vec<f32>> = Vec::new();
    let mut examples: Vec<(usize, usize, u8)> = Vec::with_capacity(pairs.len());
    for p in pairs {
        let a = intern(&p.a, &mut ids, &mut vectors, provider)?;
        let b = intern(&p.b, &mut ids, &mut vectors, provider)?;
        examples.push((a, b, p.label));
    }
    let wide: Vec<Vec<f64>> = vectors.iter().map(|v| v.iter().map(|&x| x as f64).collect()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let n = examples.len();
    let held = if n < 2 {
        0
    } else {
        (libm::ceil(n as f64 * config.holdout_fraction) as usize).clamp(1, n - 1)
    };
    let (holdout_idx, train_idx) = order.split_at(held);
    let mut train_idx = train_idx.to_vec();
    // with a single pair, select on the training pair itself
    let holdout_idx = if holdout_idx.is_empty() { &train_idx[..] } else { holdout_idx }.to_vec();
    let holdout: Vec<(Vec<f32>, Vec<f32>, u8)> = holdout_idx
        .iter()
        .map(|&i| {
            let (a, b, y) = examples[i];
            (vectors[a].clone(), vectors[b].clone(), y)
        })
        .collect();

    let mut params = Parameters::init(variant, dim, config.seed);
    let mut grad = params.zeros_like();
    let mut best = params.to_model();
    let mut best_epoch = 0;
    let mut best_acc = f64::NEG_INFINITY;
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch_no, batch) in train_idx.chunks(config.batch_size).enumerate() {
            grad = grad.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let (a, b, y) = examples[i];
                batch_loss += params.accumulate_gradient(&wide[a], &wide[b], y as f64, scale, &mut grad);
            }
            if !batch_loss.is_finite() || grad.values().iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, batch: batch_no });
            }
            total += batch_loss;
            params.step(&grad, config.learning_rate);
        }
        let model = params.to_model();
        let acc = accuracy(&model, &holdout)?;
        log.push(EpochLog { epoch, train_loss: total / train_idx.len().max(1) as f64, holdout_acc: acc });
        log::debug!("epoch {epoch}: loss {:.6} holdout acc {acc:.4}", total / train_idx.len().max(1) as f64);
        if acc > best_acc {
            best_acc = acc;
            best = model;
            best_epoch = epoch;
        }
    }
    Ok(TrainOutcome { model: best, best_epoch, log, last: params.to_model() })
}
