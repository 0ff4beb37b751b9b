use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use chrono::NaiveDate;

use super::tokenize;
use crate::{Dated, Error, Result};

/// Upper bound on tuples extracted from one headline.
pub const MAX_EVENTS: usize = 10;

/// Connector allowed between two verbs of one chain ("agrees to buy").
const CHAIN_LINK: &str = "to";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Headline {
    pub date: NaiveDate,
    pub ticker: String,
    pub text: String,
}

impl Headline {
    pub fn new(date: NaiveDate, ticker: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::invalid("headline text is empty"));
        }
        Ok(Headline {
            date,
            ticker: ticker.into(),
            text,
        })
    }
}

impl Dated for Headline {
    fn date(&self) -> NaiveDate {
        self.date
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTuple {
    /// O1
    pub actor: Vec<String>,
    /// P
    pub action: String,
    /// O2
    pub object: Vec<String>,
    /// T
    pub date: NaiveDate,
}

impl Dated for EventTuple {
    fn date(&self) -> NaiveDate {
        self.date
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerbInventory {
    verbs: BTreeSet<String>,
}

impl VerbInventory {
    pub fn new<I, S>(verbs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        VerbInventory {
            verbs: verbs.into_iter().map(|v| v.as_ref().to_lowercase()).collect(),
        }
    }

    /// Adds every surface form and category of `map`.
    pub fn extend_with_map(&mut self, map: &VerbMap) {
        for (k, v) in &map.0 {
            self.verbs.insert(k.clone());
            self.verbs.insert(v.clone());
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.verbs.contains(word)
    }

    pub fn len(&self) -> usize {
        self.verbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verbs.is_empty()
    }
}

/// Surface verb -> category verb (`bought` -> `buy`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerbMap(pub BTreeMap<String, String>);

impl VerbMap {
    pub fn from_pairs<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        VerbMap(
            pairs
                .into_iter()
                .map(|(k, v)| (k.to_lowercase(), v.to_lowercase()))
                .collect(),
        )
    }

    pub fn get(&self, verb: &str) -> Option<&str> {
        self.0.get(verb).map(String::as_str)
    }
}

/// Rule-based open extraction over the token stream.
///
/// Each maximal verb chain (inventory verbs, optionally linked by `to`)
/// yields one candidate: tokens before the chain are the actor, the chain's
/// final verb is the action and tokens after it are the object. Candidates
/// with an empty actor or object are dropped and at most [`MAX_EVENTS`] are
/// kept, in chain order.
pub fn extract_events(headline: &Headline, verbs: &VerbInventory) -> Vec<EventTuple> {
    let tokens = tokenize(&headline.text);
    let is_verb = |i: usize| tokens.get(i).is_some_and(|t| verbs.contains(t));
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() && out.len() < MAX_EVENTS {
        if !is_verb(i) {
            i += 1;
            continue;
        }
        let mut end = i;
        loop {
            if is_verb(end + 1) {
                end += 1;
            } else if tokens.get(end + 1).is_some_and(|t| t == CHAIN_LINK) && is_verb(end + 2) {
                end += 2;
            } else {
                break;
            }
        }
        if i > 0 && end + 1 < tokens.len() {
            out.push(EventTuple {
                actor: tokens[..i].to_vec(),
                action: tokens[end].clone(),
                object: tokens[end + 1..].to_vec(),
                date: headline.date,
            });
        }
        i = end + 1;
    }
    out
}

/// Replace the action with its category when the map has one.
pub fn generalize(event: &EventTuple, map: &VerbMap) -> EventTuple {
    let mut e = event.clone();
    if let Some(cat) = map.get(&e.action) {
        e.action = cat.to_string();
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2013, 9, 3).unwrap()
    }

    fn hl(text: &str) -> Headline {
        Headline::new(date(), "MSFT", text).unwrap()
    }

    #[test]
    fn microsoft_nokia() {
        let verbs = VerbInventory::new(["agrees", "buy", "bought"]);
        let h = hl("Microsoft agrees to buy Nokia's mobile phone business for 7.2 billion");
        let ev = extract_events(&h, &verbs);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].actor, vec!["microsoft"]);
        assert_eq!(ev[0].action, "buy");
        assert_eq!(
            ev[0].object,
            vec!["nokia's", "mobile", "phone", "business", "for", "7.2", "billion"]
        );
        assert_eq!(ev[0].date, date());
    }

    #[test]
    fn no_verbs_no_events() {
        let verbs = VerbInventory::new(["buy"]);
        assert!(extract_events(&hl("Quarterly results in focus"), &verbs).is_empty());
    }

    #[test]
    fn drops_empty_slots() {
        let verbs = VerbInventory::new(["buy", "sell"]);
        assert!(extract_events(&hl("Buy now"), &verbs).is_empty());
        assert!(extract_events(&hl("Analysts say sell"), &verbs).is_empty());
    }

    #[test]
    fn caps_at_ten() {
        let verbs = VerbInventory::new(["rises"]);
        let text = (0..12)
            .map(|k| alloc::format!("w{k} rises"))
            .collect::<Vec<_>>()
            .join(" ");
        let h = hl(&(text + " end"));
        assert_eq!(extract_events(&h, &verbs).len(), MAX_EVENTS);
    }

    #[test]
    fn generalize_maps_actions() {
        let map = VerbMap::from_pairs([("bought", "buy"), ("purchase", "buy"), ("auction", "buy")]);
        let e = EventTuple {
            actor: vec!["a".into()],
            action: "bought".into(),
            object: vec!["b".into()],
            date: date(),
        };
        assert_eq!(generalize(&e, &map).action, "buy");
        let p = EventTuple {
            action: "purchase".into(),
            ..e.clone()
        };
        assert_eq!(generalize(&p, &map).action, "buy");
        let u = EventTuple {
            action: "announces".into(),
            ..e.clone()
        };
        assert_eq!(generalize(&u, &map), u);
    }

    #[test]
    fn empty_headline_rejected() {
        assert!(Headline::new(date(), "X", "   ").is_err());
    }
}
