//! Skip-gram with negative sampling.
//!
//! Each center word's input vector `v_c` is trained to score its observed
//! context words' output vectors `u_o` high and `k` noise words `u_k`,
//! drawn from the unigram distribution raised to 0.75, low:
//!
//! ```text
//! L = -ln σ(u_o · v_c) - Σ_k ln σ(-u_k · v_c)
//! ```

use alloc::vec;
use alloc::vec::Vec;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Vocabulary, WordEmbeddings, DEFAULT_DIM};
use crate::nnkit::sigmoid;
use crate::{Error, Result};

const NOISE_POWER: f64 = 0.75;
/// Floor on the decayed learning rate, as a fraction of the initial one.
const MIN_LR_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl SkipGramConfig {
    /// Input vectors before any training, uniform in `±0.5 / dim`.
    pub fn initial_embeddings(&self, vocab_len: usize) -> Result<WordEmbeddings> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        WordEmbeddings::new(self.dim, init_vectors(&mut rng, vocab_len, self.dim))
    }
}

fn init_vectors(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Vec<f64> {
    let bound = 0.5 / dim as f64;
    (0..rows * dim).map(|_| rng.gen_range(-bound..bound)).collect()
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: DEFAULT_DIM,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramOutput {
    pub embeddings: WordEmbeddings,
    /// Mean pair loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Loss and gradients for one (center, context) pair and its negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// `ln σ(x)` without overflow.
fn ln_sigmoid(x: f64) -> f64 {
    -((-x).max(0.0) + libm::log1p(libm::exp(-x.abs())))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sgns_pair(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairGradient {
    let d = center.len();
    let s = dot(context, center);
    let mut loss = -ln_sigmoid(s);
    // dL/ds = σ(s) - 1
    let gs = sigmoid(s) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|u| gs * u).collect();
    let g_context: Vec<f64> = center.iter().map(|v| gs * v).collect();
    let mut g_neg = Vec::with_capacity(negatives.len());
    for u in negatives {
        let sk = dot(u, center);
        loss -= ln_sigmoid(-sk);
        // d/dsk [-ln σ(-sk)] = σ(sk)
        let gk = sigmoid(sk);
        for j in 0..d {
            g_center[j] += gk * u[j];
        }
        g_neg.push(center.iter().map(|v| gk * v).collect());
    }
    PairGradient {
        loss,
        center: g_center,
        context: g_context,
        negatives: g_neg,
    }
}

pub fn train_skipgram<S: AsRef<str>>(
    corpus: &[Vec<S>],
    vocab: &Vocabulary,
    config: &SkipGramConfig,
) -> Result<SkipGramOutput> {
    let d = config.dim;
    if d == 0 {
        return Err(Error::invalid("embedding dimension must be positive"));
    }
    if vocab.is_empty() {
        return Err(Error::Empty("train_skipgram vocabulary"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input = init_vectors(&mut rng, vocab.len(), d);
    let mut output = vec![0.0; vocab.len() * d];

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.index_of(t.as_ref())).collect())
        .collect();
    let weights: Vec<f64> = vocab
        .counts()
        .iter()
        .map(|&c| libm::pow(c.max(1) as f64, NOISE_POWER))
        .collect();
    let noise = WeightedIndex::new(&weights).map_err(|_| Error::invalid("noise distribution"))?;

    let pairs_per_epoch: usize = sentences
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|i| i.min(config.window) + (s.len() - 1 - i).min(config.window))
                .sum::<usize>()
        })
        .sum();
    let total = (pairs_per_epoch * config.epochs).max(1) as f64;

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut seen = 0usize;
    let mut neg_ids = Vec::with_capacity(config.negatives);
    for _ in 0..config.epochs {
        let mut epoch_loss = 0.0;
        for sent in &sentences {
            for (i, &c) in sent.iter().enumerate() {
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window).min(sent.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let o = sent[j];
                    let lr = config.learning_rate * (1.0 - seen as f64 / total).max(MIN_LR_FRACTION);
                    seen += 1;

                    neg_ids.clear();
                    for _ in 0..config.negatives {
                        let k = noise.sample(&mut rng);
                        if k != o {
                            neg_ids.push(k);
                        }
                    }
                    let negs: Vec<&[f64]> = neg_ids.iter().map(|&k| &output[k * d..(k + 1) * d]).collect();
                    let g = sgns_pair(&input[c * d..(c + 1) * d], &output[o * d..(o + 1) * d], &negs);
                    epoch_loss += g.loss;

                    for (w, gv) in input[c * d..(c + 1) * d].iter_mut().zip(&g.center) {
                        *w -= lr * gv;
                    }
                    for (w, gv) in output[o * d..(o + 1) * d].iter_mut().zip(&g.context) {
                        *w -= lr * gv;
                    }
                    for (&k, gk) in neg_ids.iter().zip(&g.negatives) {
                        for (w, gv) in output[k * d..(k + 1) * d].iter_mut().zip(gk) {
                            *w -= lr * gv;
                        }
                    }
                }
            }
        }
        epoch_losses.push(epoch_loss / pairs_per_epoch.max(1) as f64);
    }

    Ok(SkipGramOutput {
        embeddings: WordEmbeddings::new(d, input)?,
        epoch_losses,
    })
}
