//! Neural tensor network over (actor, action, object) word-vector triples.
//!
//! Three compositions share one affine map `W`, `b`:
//!
//! ```text
//! R1 = tanh(O1ᵀ T1 P  + W [O1; P]  + b)
//! R2 = tanh(P ᵀ T2 O2 + W [P; O2]  + b)
//! U  = tanh(R1ᵀ T3 R2 + W [R1; R2] + b)
//! ```
//!
//! An event is scored by `M · U`, and training ranks every true tuple at
//! least one unit above a copy whose actor was swapped for a random word:
//! `max(0, 1 - M·U + M·U_r) + λ ‖(T1, T2, T3, W, b)‖²`.

use alloc::vec::Vec;
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::{EmbeddedTuple, Vocabulary, WordEmbeddings};
use crate::nnkit::{Adam, AdamConfig, Parameters, Tape, Tensor, Var};
use crate::{Dated, Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1e-4;
pub const DEFAULT_EPOCHS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct NtnParams {
    pub t1: Tensor,
    pub t2: Tensor,
    pub t3: Tensor,
    /// `[d, 2d]`
    pub w: Tensor,
    pub b: Tensor,
    /// Global scoring vector.
    pub m: Tensor,
}

/// Tape handles for [`NtnParams`].
#[derive(Debug, Clone, Copy)]
pub struct NtnVars {
    pub t1: Var,
    pub t2: Var,
    pub t3: Var,
    pub w: Var,
    pub b: Var,
    pub m: Var,
}

impl NtnVars {
    pub fn from_slice(v: &[Var]) -> Self {
        NtnVars {
            t1: v[0],
            t2: v[1],
            t3: v[2],
            w: v[3],
            b: v[4],
            m: v[5],
        }
    }
}

impl NtnParams {
    pub fn zeros(dim: usize) -> Self {
        NtnParams {
            t1: Tensor::zeros(&[dim, dim, dim]),
            t2: Tensor::zeros(&[dim, dim, dim]),
            t3: Tensor::zeros(&[dim, dim, dim]),
            w: Tensor::zeros(&[dim, 2 * dim]),
            b: Tensor::zeros(&[dim]),
            m: Tensor::zeros(&[dim]),
        }
    }

    pub fn new<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let d = dim;
        NtnParams {
            t1: Tensor::glorot(&[d, d, d], 2 * d, d, rng),
            t2: Tensor::glorot(&[d, d, d], 2 * d, d, rng),
            t3: Tensor::glorot(&[d, d, d], 2 * d, d, rng),
            w: Tensor::glorot(&[d, 2 * d], 2 * d, d, rng),
            b: Tensor::zeros(&[d]),
            m: Tensor::glorot(&[d], d, 1, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `‖(T1, T2, T3, W, b)‖²`; `M` is not penalized.
    pub fn l2_penalty(&self) -> f64 {
        [&self.t1, &self.t2, &self.t3, &self.w, &self.b]
            .iter()
            .map(|t| t.sum_squares())
            .sum()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::shape("ntn", &[self.dim()], &[n]));
        }
        Ok(())
    }
}

impl Parameters for NtnParams {
    fn parameters(&self) -> Vec<&Tensor> {
        alloc::vec![&self.t1, &self.t2, &self.t3, &self.w, &self.b, &self.m]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        alloc::vec![
            &mut self.t1,
            &mut self.t2,
            &mut self.t3,
            &mut self.w,
            &mut self.b,
            &mut self.m,
        ]
    }
}

/// Fused event vector `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventEmbedding {
    pub u: Vec<f64>,
    pub date: NaiveDate,
}

impl Dated for EventEmbedding {
    fn date(&self) -> NaiveDate {
        self.date
    }
}

fn compose(tape: &mut Tape, v: &NtnVars, t: Var, x: Var, y: Var) -> Result<Var> {
    let bil = tape.bilinear(x, t, y)?;
    let xy = tape.concat(&[x, y])?;
    let lin = tape.matvec(v.w, xy)?;
    let s = tape.add(bil, lin)?;
    let s = tape.add(s, v.b)?;
    Ok(tape.tanh(s))
}

/// `U` for a triple already on the tape.
pub fn forward_on_tape(tape: &mut Tape, v: &NtnVars, o1: Var, p: Var, o2: Var) -> Result<Var> {
    let r1 = compose(tape, v, v.t1, o1, p)?;
    let r2 = compose(tape, v, v.t2, p, o2)?;
    compose(tape, v, v.t3, r1, r2)
}

/// Hinge term `max(0, 1 - M·U + M·U_r)` on the tape.
pub fn margin_on_tape(tape: &mut Tape, v: &NtnVars, truth: [Var; 3], corrupt: [Var; 3]) -> Result<Var> {
    let u = forward_on_tape(tape, v, truth[0], truth[1], truth[2])?;
    let ur = forward_on_tape(tape, v, corrupt[0], corrupt[1], corrupt[2])?;
    let s = tape.dot(v.m, u)?;
    let sr = tape.dot(v.m, ur)?;
    let gap = tape.sub(sr, s)?;
    let shifted = tape.add_scalar(gap, 1.0);
    Ok(tape.relu(shifted))
}

/// Full loss (hinge plus weighted penalty) on the tape.
pub fn loss_on_tape(tape: &mut Tape, v: &NtnVars, truth: [Var; 3], corrupt: [Var; 3], lambda: f64) -> Result<Var> {
    let margin = margin_on_tape(tape, v, truth, corrupt)?;
    let mut penalty = None;
    for t in [v.t1, v.t2, v.t3, v.w, v.b] {
        let sq = tape.sum_squares(t);
        penalty = Some(match penalty {
            None => sq,
            Some(acc) => tape.add(acc, sq)?,
        });
    }
    let penalty = tape.scale(penalty.expect("five terms"), lambda);
    tape.add(margin, penalty)
}

fn load_tuple(tape: &mut Tape, e: &EmbeddedTuple) -> [Var; 3] {
    [
        tape.leaf(Tensor::vector(e.o1.clone())),
        tape.leaf(Tensor::vector(e.p.clone())),
        tape.leaf(Tensor::vector(e.o2.clone())),
    ]
}

pub fn ntn_forward(e: &EmbeddedTuple, params: &NtnParams) -> Result<EventEmbedding> {
    for n in [e.o1.len(), e.p.len(), e.o2.len()] {
        params.check_dim(n)?;
    }
    let mut tape = Tape::new();
    let v = NtnVars::from_slice(&params.bind(&mut tape));
    let [o1, p, o2] = load_tuple(&mut tape, e);
    let u = forward_on_tape(&mut tape, &v, o1, p, o2)?;
    Ok(EventEmbedding {
        u: tape.value(u).data().to_vec(),
        date: e.date,
    })
}

/// `M · U`.
///
/// # Panics
/// If `u` and `M` differ in length.
pub fn score(u: &EventEmbedding, params: &NtnParams) -> f64 {
    assert_eq!(u.u.len(), params.m.len(), "score: length mismatch");
    u.u.iter().zip(params.m.data()).map(|(a, b)| a * b).sum()
}

/// Copy of `e` whose actor vector is replaced by a uniformly drawn word.
pub fn corrupt<R: Rng + ?Sized>(
    e: &EmbeddedTuple,
    emb: &WordEmbeddings,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<EmbeddedTuple> {
    if vocab.is_empty() {
        return Err(Error::Empty("corrupt vocabulary"));
    }
    let k = rng.gen_range(0..vocab.len());
    Ok(EmbeddedTuple {
        o1: emb.row(k).to_vec(),
        ..e.clone()
    })
}

pub fn margin_loss(score_true: f64, score_corrupt: f64) -> f64 {
    (1.0 - score_true + score_corrupt).max(0.0)
}

pub fn ntn_loss(e: &EmbeddedTuple, e_r: &EmbeddedTuple, params: &NtnParams, lambda: f64) -> Result<f64> {
    let s = score(&ntn_forward(e, params)?, params);
    let sr = score(&ntn_forward(e_r, params)?, params);
    Ok(margin_loss(s, sr) + lambda * params.l2_penalty())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtnConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for NtnConfig {
    fn default() -> Self {
        NtnConfig {
            epochs: DEFAULT_EPOCHS,
            batch_size: 50,
            learning_rate: 0.001,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtnEpoch {
    /// Mean hinge term over the epoch's samples.
    pub margin: f64,
    /// `margin` plus the weighted penalty at the end of the epoch.
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NtnTraining {
    pub params: NtnParams,
    pub curve: Vec<NtnEpoch>,
}

/// Mini-batch Adam training with one fresh corruption per sample per epoch.
///
/// Initialization and corruption draws come from one generator seeded with
/// `config.seed`; samples are visited in input order.
pub fn train_ntn(
    tuples: &[EmbeddedTuple],
    emb: &WordEmbeddings,
    vocab: &Vocabulary,
    config: &NtnConfig,
) -> Result<NtnTraining> {
    let first = tuples.first().ok_or(Error::Empty("train_ntn"))?;
    if config.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let dim = first.dim();
    if emb.dim() != dim {
        return Err(Error::shape("train_ntn", &[dim], &[emb.dim()]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = NtnParams::new(dim, &mut rng);
    let adam_cfg = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };
    let mut adam = Adam::new(adam_cfg, &params.parameters())?;
    let mut curve = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut margin_sum = 0.0;
        for batch in tuples.chunks(config.batch_size) {
            let mut tape = Tape::new();
            let vars = params.bind(&mut tape);
            let v = NtnVars::from_slice(&vars);
            let mut total: Option<Var> = None;
            for e in batch {
                let er = corrupt(e, emb, vocab, &mut rng)?;
                let truth = load_tuple(&mut tape, e);
                let fake = load_tuple(&mut tape, &er);
                let m = margin_on_tape(&mut tape, &v, truth, fake)?;
                total = Some(match total {
                    None => m,
                    Some(acc) => tape.add(acc, m)?,
                });
            }
            let total = total.expect("non-empty batch");
            let batch_margin = tape.scalar(total);
            if !batch_margin.is_finite() {
                return Err(Error::NonFinite(alloc::format!("ntn loss at epoch {epoch}")));
            }
            margin_sum += batch_margin;
            tape.backward(total);

            let n = batch.len() as f64;
            let grads: Vec<Vec<f64>> = params
                .parameters()
                .iter()
                .zip(&vars)
                .enumerate()
                .map(|(i, (p, var))| {
                    let mut g: Vec<f64> = match tape.grad(*var) {
                        Some(g) => g.iter().map(|x| x / n).collect(),
                        None => alloc::vec![0.0; p.len()],
                    };
                    // d/dθ λ‖θ‖² for everything but M (index 5)
                    if i < 5 {
                        g.iter_mut()
                            .zip(p.data())
                            .for_each(|(g, w)| *g += 2.0 * config.lambda * w);
                    }
                    g
                })
                .collect();
            adam.step(&mut params.parameters_mut(), &grads)?;
        }
        let margin = margin_sum / tuples.len() as f64;
        curve.push(NtnEpoch {
            margin,
            total: margin + config.lambda * params.l2_penalty(),
        });
    }
    Ok(NtnTraining { params, curve })
}

/// `U` for every tuple.
pub fn embed_events(tuples: &[EmbeddedTuple], params: &NtnParams) -> Result<Vec<EventEmbedding>> {
    tuples.iter().map(|e| ntn_forward(e, params)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2013, 9, 3).unwrap()
    }

    fn tuple(o1: Vec<f64>, p: Vec<f64>, o2: Vec<f64>) -> EmbeddedTuple {
        EmbeddedTuple {
            o1,
            p,
            o2,
            date: date(),
        }
    }

    #[test]
    fn zero_params_give_zero_u() {
        let e = tuple(vec![0.3, -0.2], vec![1.0, 0.5], vec![-0.7, 0.1]);
        let u = ntn_forward(&e, &NtnParams::zeros(2)).unwrap();
        assert_eq!(u.u, vec![0.0, 0.0]);
    }

    #[test]
    fn scalar_chain() {
        let mut p = NtnParams::zeros(1);
        p.w = Tensor::new(&[1, 2], vec![1.0, 1.0]).unwrap();
        let e = tuple(vec![0.1], vec![0.1], vec![0.1]);
        let u = ntn_forward(&e, &p).unwrap();
        let r = 0.2f64.tanh();
        assert_eq!(u.u[0], (2.0 * r).tanh());
        assert!((u.u[0] - 0.37545).abs() < 1e-5);
    }

    #[test]
    fn dimension_mismatch() {
        let e = tuple(vec![0.1, 0.2], vec![0.1], vec![0.1]);
        assert!(ntn_forward(&e, &NtnParams::zeros(1)).is_err());
    }

    #[test]
    fn scores() {
        let mut p = NtnParams::zeros(3);
        let u = EventEmbedding {
            u: vec![0.2, -0.4, 0.9],
            date: date(),
        };
        assert_eq!(score(&u, &p), 0.0);
        p.m = Tensor::vector(vec![0.0, 1.0, 0.0]);
        assert_eq!(score(&u, &p), -0.4);
    }

    #[test]
    fn margin_arithmetic() {
        assert_eq!(margin_loss(2.0, 0.5), 0.0);
        assert!((margin_loss(0.2, 0.5) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn corrupt_single_word_vocab() {
        let vocab = Vocabulary::from_words(vec!["only".into()]).unwrap();
        let emb = WordEmbeddings::new(2, vec![4.0, 5.0]).unwrap();
        let e = tuple(vec![0.1, 0.2], vec![0.3, 0.4], vec![0.5, 0.6]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = corrupt(&e, &emb, &vocab, &mut rng).unwrap();
        assert_eq!(c.o1, vec![4.0, 5.0]);
        assert_eq!(c.p, e.p);
        assert_eq!(c.o2, e.o2);
        assert_eq!(c.date, e.date);
    }
}
