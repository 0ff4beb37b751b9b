//! Text file formats: price CSV, headline TSV, lexicon and verb lists,
//! embedding store and parameter checkpoints.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use stockevents_core::embeddings::{Vocabulary, WordEmbeddings};
use stockevents_core::marketdata::{PriceBar, PriceSeries};
use stockevents_core::nnkit::{Parameters, Tensor};
use stockevents_core::textpipe::{Headline, Lexicon, VerbInventory, VerbMap};
use stockevents_core::NaiveDate;

use crate::error::{CliError, Result};

pub const PRICE_HEADER: [&str; 6] = ["date", "open", "high", "low", "close", "volume"];

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date {s:?}: {e}"))
}

fn parse_f64(s: &str, field: &str) -> std::result::Result<f64, String> {
    s.trim().parse::<f64>().map_err(|_| format!("bad {field} value {s:?}"))
}

/// Ticker symbol from a `<TICKER>.csv` path.
pub fn ticker_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .ok_or_else(|| CliError::data(format!("{}: cannot derive ticker from file name", path.display())))
}

pub fn parse_prices(ticker: &str, path: &Path, text: &str) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| CliError::at(path, 1, e))?.clone();
    if header.iter().map(str::trim).ne(PRICE_HEADER) {
        return Err(CliError::at(
            path,
            1,
            format!("expected header {:?}", PRICE_HEADER.join(",")),
        ));
    }
    let mut bars: Vec<PriceBar> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::at(path, line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bar = (|| -> std::result::Result<PriceBar, String> {
            let date = parse_date(&rec[0])?;
            let v: Vec<f64> = PRICE_HEADER[1..]
                .iter()
                .enumerate()
                .map(|(i, f)| parse_f64(&rec[i + 1], f))
                .collect::<std::result::Result<_, _>>()?;
            PriceBar::new(date, v[0], v[1], v[2], v[3], v[4]).map_err(|e| e.to_string())
        })()
        .map_err(|m| CliError::at(path, line, m))?;
        if let Some(prev) = bars.last() {
            if bar.date == prev.date {
                return Err(CliError::at(path, line, format!("duplicate date {}", bar.date)));
            }
            if bar.date < prev.date {
                return Err(CliError::at(path, line, format!("date {} out of order", bar.date)));
            }
        }
        bars.push(bar);
    }
    PriceSeries::new(ticker, bars).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn read_prices(path: &Path) -> Result<PriceSeries> {
    let ticker = ticker_of(path)?;
    parse_prices(&ticker, path, &read_text(path)?)
}

pub fn prices_csv(series: &PriceSeries) -> String {
    let mut out = PRICE_HEADER.join(",");
    out.push('\n');
    for b in series.bars() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            b.date, b.open, b.high, b.low, b.close, b.volume
        );
    }
    out
}

/// Every `*.csv` in `dir`, keyed and ordered by ticker.
pub fn read_price_dir(dir: &Path) -> Result<Vec<PriceSeries>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| CliError::io(dir, e))?.path();
        if p.extension().is_some_and(|e| e == "csv") {
            paths.push(p);
        }
    }
    paths.sort();
    paths.iter().map(|p| read_prices(p)).collect()
}

/// `date<TAB>ticker<TAB>headline` lines; blank lines are skipped.
pub fn parse_headlines(path: &Path, text: &str) -> Result<Vec<Headline>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let (Some(date), Some(ticker), Some(headline)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(CliError::at(path, n, "expected date<TAB>ticker<TAB>headline"));
        };
        let date = parse_date(date).map_err(|m| CliError::at(path, n, m))?;
        let h = Headline::new(date, ticker.trim(), headline.trim()).map_err(|e| CliError::at(path, n, e))?;
        out.push(h);
    }
    Ok(out)
}

pub fn read_headlines(path: &Path) -> Result<Vec<Headline>> {
    parse_headlines(path, &read_text(path)?)
}

fn data_lines(text: &str) -> impl Iterator<Item = (u64, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i as u64 + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// `word<TAB>valence` lines.
pub fn parse_lexicon(path: &Path, text: &str) -> Result<Lexicon> {
    let mut lex = Lexicon::new();
    for (n, line) in data_lines(text) {
        let Some((word, v)) = line.split_once('\t') else {
            return Err(CliError::at(path, n, "expected word<TAB>valence"));
        };
        let v = parse_f64(v, "valence").map_err(|m| CliError::at(path, n, m))?;
        lex.insert(word.trim(), v).map_err(|e| CliError::at(path, n, e))?;
    }
    Ok(lex)
}

/// One verb per line, or `surface<TAB>category`; returns the inventory and
/// the mapping from the two-column lines.
pub fn parse_verbs(text: &str) -> (VerbInventory, VerbMap) {
    let mut surface = Vec::new();
    let mut pairs = Vec::new();
    for (_, line) in data_lines(text) {
        match line.split_once('\t') {
            Some((s, c)) => pairs.push((s.trim(), c.trim())),
            None => surface.push(line),
        }
    }
    let map = VerbMap::from_pairs(pairs);
    let mut inv = VerbInventory::new(surface);
    inv.extend_with_map(&map);
    (inv, map)
}

pub fn read_lexicon(path: &Path) -> Result<Lexicon> {
    parse_lexicon(path, &read_text(path)?)
}

pub fn read_verbs(path: &Path) -> Result<String> {
    read_text(path)
}

/// Header `|V| d`, then `word v1 ... vd`, floats in shortest round-trip form.
pub fn embeddings_text(vocab: &Vocabulary, emb: &WordEmbeddings) -> String {
    let mut out = format!("{} {}\n", vocab.len(), emb.dim());
    for (i, w) in vocab.words().iter().enumerate() {
        out.push_str(w);
        for x in emb.row(i) {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_embeddings(path: &Path, text: &str) -> Result<(Vocabulary, WordEmbeddings)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::at(path, 1, "missing header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::at(path, 1, "header must be `|V| d`"))?;
    let [n, d] = dims[..] else {
        return Err(CliError::at(path, 1, "header must be `|V| d`"));
    };
    let mut words = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for (i, line) in lines.enumerate() {
        let ln = i as u64 + 2;
        let mut fields = line.split(' ');
        let word = fields
            .next()
            .filter(|w| !w.is_empty())
            .ok_or_else(|| CliError::at(path, ln, "empty row"))?;
        let row: Vec<f64> = fields
            .map(|f| parse_f64(f, "embedding"))
            .collect::<std::result::Result<_, _>>()
            .map_err(|m| CliError::at(path, ln, m))?;
        if row.len() != d {
            return Err(CliError::at(
                path,
                ln,
                format!("expected {d} values, found {}", row.len()),
            ));
        }
        words.push(word.to_string());
        data.extend(row);
    }
    if words.len() != n {
        return Err(CliError::data(format!(
            "{}: header declares {n} words, found {}",
            path.display(),
            words.len()
        )));
    }
    Ok((Vocabulary::from_words(words)?, WordEmbeddings::new(d, data)?))
}

pub const CHECKPOINT_MAGIC: &str = "stockevents-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Named flat parameter arrays plus `key value` metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: String,
    pub meta: Vec<(String, String)>,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn from_params<P: Parameters>(model: &str, meta: Vec<(String, String)>, names: &[&str], p: &P) -> Self {
        let params = p.parameters();
        assert_eq!(names.len(), params.len(), "one name per parameter");
        Checkpoint {
            model: model.to_string(),
            meta,
            tensors: names
                .iter()
                .zip(params)
                .map(|(n, t)| {
                    (
                        n.to_string(),
                        Tensor::new(t.shape(), t.data().to_vec()).expect("valid tensor"),
                    )
                })
                .collect(),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Copy values into `p`, which must have matching shapes.
    pub fn load_into<P: Parameters>(&self, p: &mut P) -> Result<()> {
        let mut params = p.parameters_mut();
        if params.len() != self.tensors.len() {
            return Err(CliError::data(format!(
                "checkpoint has {} tensors, model expects {}",
                self.tensors.len(),
                params.len()
            )));
        }
        for (dst, (name, src)) in params.iter_mut().zip(&self.tensors) {
            if dst.shape() != src.shape() {
                return Err(CliError::data(format!("checkpoint tensor {name}: shape mismatch")));
            }
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\nmodel {}\n", self.model);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "{k} {v}");
        }
        let _ = writeln!(out, "tensors {}", self.tensors.len());
        for (name, t) in &self.tensors {
            let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{name} {}", shape.join(" "));
            let values: Vec<String> = t.data().iter().map(f64::to_string).collect();
            out.push_str(&values.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut lines = text.lines().zip(1u64..);
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| CliError::data(format!("{}: truncated before {what}", path.display())))
        };
        let (magic, n) = next("header")?;
        let version = magic
            .strip_prefix(CHECKPOINT_MAGIC)
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| CliError::at(path, n, "not a checkpoint file"))?;
        if version != CHECKPOINT_VERSION {
            return Err(CliError::at(
                path,
                n,
                format!("unsupported checkpoint version {version}"),
            ));
        }
        let (model, n) = next("model")?;
        let model = model
            .strip_prefix("model ")
            .ok_or_else(|| CliError::at(path, n, "expected `model <name>`"))?
            .to_string();
        let mut meta = Vec::new();
        let count = loop {
            let (line, n) = next("tensors")?;
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| CliError::at(path, n, "expected `key value`"))?;
            if k == "tensors" {
                break v
                    .parse::<usize>()
                    .map_err(|_| CliError::at(path, n, "bad tensor count"))?;
            }
            meta.push((k.to_string(), v.to_string()));
        };
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let (head, n) = next("tensor header")?;
            let mut parts = head.split(' ');
            let name = parts.next().unwrap_or_default().to_string();
            let shape: Vec<usize> = parts
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| CliError::at(path, n, "bad tensor shape"))?;
            let (vals, n) = next("tensor values")?;
            let data: Vec<f64> = vals
                .split(' ')
                .map(|v| parse_f64(v, "parameter"))
                .collect::<std::result::Result<_, _>>()
                .map_err(|m| CliError::at(path, n, m))?;
            let t = Tensor::new(&shape, data).map_err(|e| CliError::at(path, n, e))?;
            tensors.push((name, t));
        }
        Ok(Checkpoint { model, meta, tensors })
    }
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::parse(path, &read_text(path)?)
}

pub fn read_embeddings(path: &Path) -> Result<(Vocabulary, WordEmbeddings)> {
    parse_embeddings(path, &read_text(path)?)
}
