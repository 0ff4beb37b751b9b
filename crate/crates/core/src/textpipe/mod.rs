//! Headline text processing: tokenizer, lexicon sentiment and rule-based
//! (actor, action, object, time) extraction.

mod events;
mod sentiment;
mod tokenize;

pub use events::{extract_events, generalize, EventTuple, Headline, VerbInventory, VerbMap, MAX_EVENTS};
pub use sentiment::{sentiment, Lexicon, SentimentScore, COMPOUND_ALPHA, MAX_VALENCE};
pub use tokenize::tokenize;
