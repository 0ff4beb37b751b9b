use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stockevents_core::embeddings::{EmbeddedTuple, Vocabulary, WordEmbeddings};
use stockevents_core::nnkit::Tensor;
use stockevents_core::ntn::{
    corrupt, margin_loss, ntn_forward, ntn_loss, score, train_ntn, EventEmbedding, NtnConfig, NtnParams,
};
use stockevents_core::NaiveDate;

fn date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2013, 9, 3).unwrap()
}

fn tuple(o1: &[f64], p: &[f64], o2: &[f64]) -> EmbeddedTuple {
    EmbeddedTuple {
        o1: o1.to_vec(),
        p: p.to_vec(),
        o2: o2.to_vec(),
        date: date(),
    }
}

fn words(n: usize) -> Vocabulary {
    Vocabulary::from_words((0..n).map(|i| format!("w{i}")).collect()).unwrap()
}

#[test]
fn loss_formula_cases() {
    let d = 2;
    let zero = NtnParams::zeros(d);
    assert_eq!(zero.l2_penalty(), 0.0);
    assert_eq!(margin_loss(2.0, 0.5) + 1e-4 * zero.l2_penalty(), 0.0);
    assert!((margin_loss(0.2, 0.5) + 1e-4 * zero.l2_penalty() - 1.3).abs() < 1e-12);

    let mut p = NtnParams::zeros(d);
    p.w = Tensor::new(&[2, 4], vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    p.m = Tensor::vector(vec![100.0, 100.0]);
    assert_eq!(p.l2_penalty(), 4.0);
    let e = tuple(&[0.5, 0.5], &[0.5, 0.5], &[0.5, 0.5]);
    let er = tuple(&[-0.5, -0.5], &[0.5, 0.5], &[0.5, 0.5]);
    let s = score(&ntn_forward(&e, &p).unwrap(), &p);
    let sr = score(&ntn_forward(&er, &p).unwrap(), &p);
    assert!(s >= sr + 1.0);
    let l = ntn_loss(&e, &er, &p, 1e-4).unwrap();
    assert!((l - 0.0004).abs() < 1e-12, "{l}");
    assert!((ntn_loss(&e, &er, &p, 0.0).unwrap()).abs() < 1e-12);
}

#[test]
fn scalar_chain_oracle() {
    let mut p = NtnParams::zeros(1);
    p.w = Tensor::new(&[1, 2], vec![1.0, 1.0]).unwrap();
    let u = ntn_forward(&tuple(&[0.1], &[0.1], &[0.1]), &p).unwrap();
    assert!((u.u[0] - 0.375_448_471_782_634_4).abs() < 1e-12);
}

#[test]
fn actor_and_object_are_not_interchangeable() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let p = NtnParams::new(4, &mut r);
    let mut v = || (0..4).map(|_| r.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
    let (a, b, c) = (v(), v(), v());
    let u = ntn_forward(&tuple(&a, &b, &c), &p).unwrap();
    let swapped = ntn_forward(&tuple(&c, &b, &a), &p).unwrap();
    assert_ne!(u.u, swapped.u);
}

#[test]
fn score_is_a_dot_product() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut p = NtnParams::zeros(6);
    let m: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
    let u: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
    p.m = Tensor::vector(m.clone());
    let oracle: f64 = (0..6).map(|i| m[i] * u[i]).sum();
    let s = score(
        &EventEmbedding {
            u: u.clone(),
            date: date(),
        },
        &p,
    );
    assert!((s - oracle).abs() < 1e-12);
    for k in 0..6 {
        let mut basis = vec![0.0; 6];
        basis[k] = 1.0;
        p.m = Tensor::vector(basis);
        assert_eq!(
            score(
                &EventEmbedding {
                    u: u.clone(),
                    date: date()
                },
                &p
            ),
            u[k]
        );
    }
}

#[test]
fn corruption_is_uniform_over_the_vocabulary() {
    let vocab = words(4);
    let emb = WordEmbeddings::new(1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
    let e = tuple(&[9.0], &[7.0], &[8.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = [0usize; 4];
    for _ in 0..10_000 {
        let c = corrupt(&e, &emb, &vocab, &mut rng).unwrap();
        assert_eq!(c.p, e.p);
        assert_eq!(c.o2, e.o2);
        assert_eq!(c.date, e.date);
        counts[c.o1[0] as usize] += 1;
    }
    for c in counts {
        let f = c as f64 / 10_000.0;
        assert!((f - 0.25).abs() <= 0.05 * 0.25, "frequency {f}");
    }
}

#[test]
fn single_tuple_separates_from_its_corruptions() {
    let vocab = words(2);
    let emb = WordEmbeddings::new(3, vec![0.6, -0.2, 0.1, -0.5, 0.4, 0.3]).unwrap();
    let e = tuple(&[0.2, 0.7, -0.6], &[0.3, -0.3, 0.5], &[-0.4, 0.1, 0.6]);
    let cfg = NtnConfig {
        epochs: 1500,
        batch_size: 1,
        learning_rate: 0.01,
        lambda: 1e-4,
        seed: 3,
    };
    let trained = train_ntn(std::slice::from_ref(&e), &emb, &vocab, &cfg).unwrap();
    let curve = &trained.curve;
    assert!(curve.iter().all(|c| c.margin.is_finite() && c.total.is_finite()));
    assert_eq!(curve.last().unwrap().margin, 0.0);
    let p = &trained.params;
    let s = score(&ntn_forward(&e, p).unwrap(), p);
    for w in 0..2 {
        let er = EmbeddedTuple {
            o1: emb.row(w).to_vec(),
            ..e.clone()
        };
        let sr = score(&ntn_forward(&er, p).unwrap(), p);
        assert!(s - sr >= 1.0, "gap {} against word {w}", s - sr);
    }
}

#[test]
fn training_is_reproducible() {
    let vocab = words(5);
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let emb = WordEmbeddings::new(3, (0..15).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
    let tuples: Vec<EmbeddedTuple> = (0..7)
        .map(|i| tuple(emb.row(i % 5), emb.row((i + 1) % 5), emb.row((i + 2) % 5)))
        .collect();
    let cfg = NtnConfig {
        epochs: 20,
        batch_size: 3,
        seed: 9,
        ..NtnConfig::default()
    };
    let a = train_ntn(&tuples, &emb, &vocab, &cfg).unwrap();
    let b = train_ntn(&tuples, &emb, &vocab, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.curve.len(), 20);
    for c in &a.curve {
        assert!((c.total - c.margin) >= 0.0);
    }
    assert!(train_ntn(&[], &emb, &vocab, &cfg).is_err());
}
