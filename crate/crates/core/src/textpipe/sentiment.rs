use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use crate::{Error, Result};

/// Normalization constant in `s / sqrt(s^2 + alpha)`.
pub const COMPOUND_ALPHA: f64 = 15.0;
pub const MAX_VALENCE: f64 = 4.0;

/// Word valences in `[-4, 4]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    valences: BTreeMap<String, f64>,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    pub fn insert(&mut self, word: &str, valence: f64) -> Result<()> {
        if !valence.is_finite() || valence.abs() > MAX_VALENCE {
            return Err(Error::invalid(format!(
                "valence {valence} for {word:?} outside [-4, 4]"
            )));
        }
        self.valences.insert(word.to_lowercase(), valence);
        Ok(())
    }

    pub fn from_entries<'a, I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut lex = Lexicon::new();
        for (w, v) in entries {
            lex.insert(w, v)?;
        }
        Ok(lex)
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.valences.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.valences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valences.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.valences.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Every valence sign-flipped.
    pub fn negated(&self) -> Lexicon {
        Lexicon {
            valences: self.valences.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentimentScore {
    pub pos: f64,
    pub neg: f64,
    pub neu: f64,
    pub compound: f64,
}

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore {
        pos: 0.0,
        neg: 0.0,
        neu: 1.0,
        compound: 0.0,
    };

    pub fn kinds(&self) -> [(&'static str, f64); 4] {
        [
            ("pos", self.pos),
            ("neg", self.neg),
            ("neu", self.neu),
            ("compound", self.compound),
        ]
    }
}

/// Lexicon score of a token list.
///
/// `pos`/`neg`/`neu` are the shares of tokens with positive, negative and
/// zero-or-unknown valence; `compound` squashes the summed valence `s` to
/// `s / sqrt(s^2 + 15)`.
pub fn sentiment<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> SentimentScore {
    if tokens.is_empty() {
        return SentimentScore::NEUTRAL;
    }
    let (mut sum, mut pos, mut neg) = (0.0, 0usize, 0usize);
    for t in tokens {
        if let Some(v) = lexicon.get(t.as_ref()) {
            sum += v;
            if v > 0.0 {
                pos += 1;
            } else if v < 0.0 {
                neg += 1;
            }
        }
    }
    let n = tokens.len();
    let neu = n - pos - neg;
    SentimentScore {
        pos: pos as f64 / n as f64,
        neg: neg as f64 / n as f64,
        neu: neu as f64 / n as f64,
        compound: sum / libm::sqrt(sum * sum + COMPOUND_ALPHA),
    }
}
