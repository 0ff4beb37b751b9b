//! Word vectors for headline tokens and their lift onto event tuples.

mod skipgram;

pub use skipgram::{sgns_pair, train_skipgram, PairGradient, SkipGramConfig, SkipGramOutput};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use chrono::NaiveDate;

use crate::textpipe::EventTuple;
use crate::{Dated, Error, Result};

pub const DEFAULT_DIM: usize = 100;

/// Word/index bijection, indices ordered by descending frequency with ties
/// broken lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Vocabulary with a fixed word order and unknown (zero) counts, as read
    /// back from an embedding store.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Vocabulary {
            counts: vec![0; words.len()],
            words,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::invalid("min_count must be at least 1"));
    }
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for tok in corpus.iter().flatten() {
        *freq.entry(tok.as_ref()).or_default() += 1;
    }
    if freq.is_empty() {
        return Err(Error::Empty("build_vocab"));
    }
    let mut kept: Vec<(&str, u64)> = freq.into_iter().filter(|(_, c)| *c >= min_count).collect();
    // BTreeMap iteration is already lexicographic; a stable sort keeps it for ties.
    kept.sort_by_key(|k| core::cmp::Reverse(k.1));
    let words: Vec<String> = kept.iter().map(|(w, _)| String::from(*w)).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Ok(Vocabulary {
        words,
        counts: kept.iter().map(|(_, c)| *c).collect(),
        index,
    })
}

/// `|V| x d` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddings {
    dim: usize,
    data: Vec<f64>,
}

impl WordEmbeddings {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::shape("word embeddings", &[dim], &[data.len()]));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("word embeddings".into()));
        }
        Ok(WordEmbeddings { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Mean of the in-vocabulary token vectors; zero vector if none are known.
pub fn phrase_embed<S: AsRef<str>>(tokens: &[S], emb: &WordEmbeddings, vocab: &Vocabulary) -> Vec<f64> {
    let mut acc = vec![0.0; emb.dim()];
    let mut n = 0usize;
    for t in tokens {
        if let Some(i) = vocab.index_of(t.as_ref()) {
            acc.iter_mut().zip(emb.row(i)).for_each(|(a, x)| *a += x);
            n += 1;
        }
    }
    if n > 1 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    acc
}

/// Word-vector triple for one event: actor (O1), action (P), object (O2).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedTuple {
    pub o1: Vec<f64>,
    pub p: Vec<f64>,
    pub o2: Vec<f64>,
    pub date: NaiveDate,
}

impl EmbeddedTuple {
    pub fn dim(&self) -> usize {
        self.o1.len()
    }
}

impl Dated for EmbeddedTuple {
    fn date(&self) -> NaiveDate {
        self.date
    }
}

pub fn embed_tuple(event: &EventTuple, emb: &WordEmbeddings, vocab: &Vocabulary) -> EmbeddedTuple {
    EmbeddedTuple {
        o1: phrase_embed(&event.actor, emb, vocab),
        p: phrase_embed(core::slice::from_ref(&event.action), emb, vocab),
        o2: phrase_embed(&event.object, emb, vocab),
        date: event.date,
    }
}

/// Slot-wise mean of same-dated tuples.
pub fn average_tuples(tuples: &[EmbeddedTuple]) -> Result<EmbeddedTuple> {
    let first = tuples.first().ok_or(Error::Empty("average_tuples"))?;
    let d = first.dim();
    let mut out = EmbeddedTuple {
        o1: vec![0.0; d],
        p: vec![0.0; d],
        o2: vec![0.0; d],
        date: first.date,
    };
    for t in tuples {
        if t.date != first.date {
            return Err(Error::invalid(format!(
                "average_tuples: mixed dates {} and {}",
                first.date, t.date
            )));
        }
        if t.o1.len() != d || t.p.len() != d || t.o2.len() != d {
            return Err(Error::shape(
                "average_tuples",
                &[d],
                &[t.o1.len(), t.p.len(), t.o2.len()],
            ));
        }
        for (acc, src) in [(&mut out.o1, &t.o1), (&mut out.p, &t.p), (&mut out.o2, &t.o2)] {
            acc.iter_mut().zip(src).for_each(|(a, x)| *a += x);
        }
    }
    if tuples.len() > 1 {
        let n = tuples.len() as f64;
        for v in [&mut out.o1, &mut out.p, &mut out.o2] {
            v.iter_mut().for_each(|a| *a /= n);
        }
    }
    Ok(out)
}
