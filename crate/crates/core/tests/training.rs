use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segrag_core::boundary::{accuracy, train, Parameters, TrainConfig, Variant};
use segrag_core::embedding::{EmbeddingProvider, TestEncoder};
use segrag_core::pairgen::SentencePair;
use segrag_core::Error;

const TOPICS: [&[&str]; 2] = [
    &["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"],
    &["red", "green", "blue", "cyan", "magenta", "yellow", "black", "white"],
];

fn sentence(rng: &mut ChaCha8Rng, topic: usize) -> String {
    (0..rng.random_range(4..8)).map(|_| TOPICS[topic][rng.random_range(0..8)]).collect::<Vec<_>>().join(" ")
}

/// Same-topic pairs labelled 1, cross-topic pairs labelled 0.
fn two_topic_pairs(n: usize, seed: u64) -> Vec<SentencePair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let t = rng.random_range(0..2);
            let label = (i % 2) as u8;
            let other = if label == 1 { t } else { 1 - t };
            SentencePair { doc_id: "d".into(), a: sentence(&mut rng, t), b: sentence(&mut rng, other), label }
        })
        .collect()
}

fn enc() -> TestEncoder {
    TestEncoder::new(16, 5).unwrap()
}

fn fast() -> TrainConfig {
    TrainConfig { learning_rate: 0.1, batch_size: 16, ..Default::default() }
}

#[test]
fn separable_pairs_are_learned_with_falling_loss() {
    let pairs = two_topic_pairs(1200, 1);
    for variant in [Variant::Psc, Variant::Mfc] {
        let out = train(variant, &pairs, &enc(), &fast()).unwrap();
        assert_eq!(out.log.len(), 5);
        for w in out.log.windows(2) {
            assert!(w[1].train_loss <= w[0].train_loss + 1e-3, "{variant}: {:?}", out.log);
        }
        let best = out.log.iter().map(|l| l.holdout_acc).fold(0.0, f64::max);
        assert!(best >= 0.95, "{variant}: {:?}", out.log);
        assert_eq!(out.log[out.best_epoch - 1].holdout_acc, best);
    }
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let pairs = two_topic_pairs(100, 2);
    for variant in [Variant::Psc, Variant::Mfc] {
        let cfg = TrainConfig { learning_rate: 0.0, ..fast() };
        let out = train(variant, &pairs, &enc(), &cfg).unwrap();
        assert_eq!(out.last, Parameters::init(variant, 16, cfg.seed).to_model());
    }
}

#[test]
fn zero_epochs_returns_initialization() {
    let pairs = two_topic_pairs(10, 3);
    let cfg = TrainConfig { epochs: 0, ..fast() };
    let out = train(Variant::Mfc, &pairs, &enc(), &cfg).unwrap();
    assert_eq!(out.model, Parameters::init(Variant::Mfc, 16, cfg.seed).to_model());
    assert_eq!(out.best_epoch, 0);
    assert!(out.log.is_empty());
}

#[test]
fn same_seed_is_bit_identical() {
    let pairs = two_topic_pairs(300, 4);
    let a = train(Variant::Mfc, &pairs, &enc(), &fast()).unwrap();
    let b = train(Variant::Mfc, &pairs, &enc(), &fast()).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.log, b.log);
    let c = train(Variant::Mfc, &pairs, &enc(), &TrainConfig { seed: 7, ..fast() }).unwrap();
    assert_ne!(a.last, c.last);
}

#[test]
fn huge_learning_rate_reports_divergence() {
    let pairs = two_topic_pairs(64, 5);
    let cfg = TrainConfig { learning_rate: 1e200, ..fast() };
    assert!(matches!(train(Variant::Psc, &pairs, &enc(), &cfg), Err(Error::Divergence { .. })));
}

#[test]
fn bad_configs_are_rejected() {
    let pairs = two_topic_pairs(4, 6);
    assert!(train(Variant::Psc, &[], &enc(), &fast()).is_err());
    assert!(train(Variant::Psc, &pairs, &enc(), &TrainConfig { batch_size: 0, ..fast() }).is_err());
    assert!(train(Variant::Psc, &pairs, &enc(), &TrainConfig { learning_rate: f64::NAN, ..fast() }).is_err());
    assert!(train(Variant::Psc, &pairs, &enc(), &TrainConfig { holdout_fraction: 1.0, ..fast() }).is_err());
}

#[test]
fn scores_are_symmetric_and_threshold_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for variant in [Variant::Psc, Variant::Mfc] {
        let mut p = Parameters::init(variant, 8, 1);
        for w in &mut p.weight {
            *w += rng.random_range(-0.5..0.5);
        }
        for c in &mut p.bias {
            *c = rng.random_range(-0.5..0.5);
        }
        p.fusion_w = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let m = p.to_model();
        for _ in 0..200 {
            let x: Vec<f32> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f32> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (a, b) = (m.score(&x, &y).unwrap(), m.score(&y, &x).unwrap());
            assert!((a.raw - b.raw).abs() <= 1e-6);
            assert_eq!(a.same_section, a.raw >= 0.0);
            assert_eq!(a.same_section, a.probability >= 0.5);
        }
    }
}

#[test]
fn trained_model_generalizes_to_fresh_pairs() {
    let e = enc();
    let out = train(Variant::Psc, &two_topic_pairs(1200, 9), &e, &fast()).unwrap();
    let fresh: Vec<_> = two_topic_pairs(400, 10)
        .iter()
        .map(|p| (e.embed(&p.a).unwrap().into_inner(), e.embed(&p.b).unwrap().into_inner(), p.label))
        .collect();
    assert!(accuracy(&out.model, &fresh).unwrap() >= 0.95);
}
