//! Event-driven stock movement prediction.
//!
//! The crate turns dated headlines and daily OHLCV bars into event-tuple
//! embeddings and trains classifiers that predict next-day up/down moves:
//!
//! - [`nnkit`]: dense `f64` tensors, a reverse-mode tape, Adam, finite-difference checks.
//! - [`marketdata`]: price bars, min-max scaling, labels, windows, event horizons.
//! - [`textpipe`]: tokenizer, lexicon sentiment, rule-based event extraction.
//! - [`embeddings`]: vocabulary, skip-gram with negative sampling, tuple lifting.
//! - [`ntn`]: neural tensor network fusing a tuple into one event vector.
//! - [`models`]: multi-horizon convolutional net, short-term net, LSTM classifier and forecaster.
//! - [`eval`]: chronological splits, accuracy, Pearson and lag-correlation tables.
//!
//! Everything here is `no_std` + `alloc`; file formats and the CLI live in the
//! `stockevents` crate.

#![no_std]
#![warn(clippy::all)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod embeddings;
mod error;
pub mod eval;
pub mod marketdata;
pub mod models;
pub mod nnkit;
pub mod ntn;
pub mod textpipe;

pub use chrono::NaiveDate;
pub use error::{Error, Result};

/// Anything carrying a calendar date.
pub trait Dated {
    fn date(&self) -> NaiveDate;
}

/// Derive a stream seed from a base seed and a string key (FNV-1a then a
/// splitmix64 finalizer). Stable across platforms and releases.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(key.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
