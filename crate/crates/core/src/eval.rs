//! Splits, metrics, lag correlations and report rendering.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::marketdata::PriceSeries;
use crate::models::EpochMetrics;
use crate::textpipe::SentimentScore;
use crate::{Dated, Error, NaiveDate, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Fraction of the earliest samples used for training, in `(0, 1)`.
    pub ratio: f64,
    pub shuffle_train: bool,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratio: 0.7,
            shuffle_train: false,
            seed: 0,
        }
    }
}

/// Size of the training side: `floor(ratio * n)`, tolerant of the rounding
/// in products such as `0.7 * 10`.
pub fn train_len(ratio: f64, n: usize) -> usize {
    let exact = ratio * n as f64;
    let nearest = libm::round(exact);
    if (exact - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        libm::floor(exact) as usize
    }
}

/// Earliest `floor(r·n)` samples train, the rest test.
pub fn chrono_split<T: Dated + Clone>(samples: &[T], config: &SplitConfig) -> Result<(Vec<T>, Vec<T>)> {
    if !(config.ratio > 0.0 && config.ratio < 1.0) {
        return Err(Error::invalid(format!("split ratio {} outside (0, 1)", config.ratio)));
    }
    if samples.windows(2).any(|w| w[0].date() > w[1].date()) {
        return Err(Error::invalid("samples must be sorted by date"));
    }
    let cut = train_len(config.ratio, samples.len());
    if cut == 0 || cut == samples.len() {
        return Err(Error::Empty("one side of the train/test split"));
    }
    let mut train = samples[..cut].to_vec();
    if config.shuffle_train {
        train.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    }
    Ok((train, samples[cut..].to_vec()))
}

pub fn accuracy(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::shape("accuracy", &[predictions.len()], &[labels.len()]));
    }
    if labels.is_empty() {
        return Err(Error::Empty("accuracy"));
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Two-pass Pearson correlation, clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape("pearson", &[x.len()], &[y.len()]));
    }
    if x.len() < 2 {
        return Err(Error::invalid("pearson needs at least two pairs"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series"));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// `compound` against same-day volume rather than a price change.
pub const VOLUME_KIND: &str = "compound_volume";

#[derive(Debug, Clone, PartialEq)]
pub struct LagRow {
    pub kind: &'static str,
    /// Zero for [`VOLUME_KIND`].
    pub lag_days: u64,
    pub r: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LagCorrelationTable {
    pub rows: Vec<LagRow>,
    /// Rows that could not be computed, with the reason.
    pub warnings: Vec<String>,
}

impl LagCorrelationTable {
    pub fn get(&self, kind: &str, lag_days: u64) -> Option<&LagRow> {
        self.rows.iter().find(|r| r.kind == kind && r.lag_days == lag_days)
    }

    /// `score_kind,lag_days,pearson_r,n`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("score_kind,lag_days,pearson_r,n\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.kind, r.lag_days, r.r, r.n);
        }
        out
    }

    fn push(&mut self, kind: &'static str, lag_days: u64, x: &[f64], y: &[f64]) {
        if x.len() < 2 {
            self.warnings
                .push(format!("{kind} lag {lag_days}: only {} aligned pairs", x.len()));
            return;
        }
        match pearson(x, y) {
            Ok(r) => self.rows.push(LagRow {
                kind,
                lag_days,
                r,
                n: x.len(),
            }),
            Err(e) => self.warnings.push(format!("{kind} lag {lag_days}: {e}")),
        }
    }
}

pub const DEFAULT_CORRELATION_LAGS: [u64; 3] = [1, 3, 7];

/// Pearson between each day-`d` score kind and `close(d+L) - close(d)`, plus
/// compound against `volume(d)`.
///
/// A scored day needs a bar dated exactly `d`; `d+L` resolves to the first
/// bar on or after it, and the pair is dropped when the series ends first.
pub fn lag_correlations(
    daily_scores: &[(NaiveDate, SentimentScore)],
    prices: &PriceSeries,
    lags: &[u64],
) -> LagCorrelationTable {
    let mut table = LagCorrelationTable::default();
    let kinds = SentimentScore::NEUTRAL.kinds().map(|(k, _)| k);
    for &lag in lags {
        let mut scores: [Vec<f64>; 4] = Default::default();
        let mut changes = Vec::new();
        for (day, s) in daily_scores {
            let Some(now) = prices.get(*day) else { continue };
            let Some(later) = day
                .checked_add_days(chrono::Days::new(lag))
                .and_then(|t| prices.at_or_after(t))
            else {
                continue;
            };
            changes.push(later.close - now.close);
            for (col, (_, v)) in scores.iter_mut().zip(s.kinds()) {
                col.push(v);
            }
        }
        for (kind, col) in kinds.iter().zip(&scores) {
            table.push(kind, lag, col, &changes);
        }
    }
    let (mut compound, mut volume) = (Vec::new(), Vec::new());
    for (day, s) in daily_scores {
        if let Some(bar) = prices.get(*day) {
            compound.push(s.compound);
            volume.push(bar.volume);
        }
    }
    table.push(VOLUME_KIND, 0, &compound, &volume);
    table
}

/// `epoch,train_acc,test_acc`; a missing test accuracy is left blank.
pub fn curve_csv(curve: &[EpochMetrics]) -> Result<String> {
    if curve.is_empty() {
        return Err(Error::Empty("accuracy curve"));
    }
    let mut out = String::from("epoch,train_acc,test_acc\n");
    for m in curve {
        let _ = write!(out, "{},{},", m.epoch, m.train_acc);
        if let Some(t) = m.test_acc {
            let _ = write!(out, "{t}");
        }
        out.push('\n');
    }
    Ok(out)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn polyline(points: impl Iterator<Item = (f64, f64)>, color: &str) -> String {
    let mut pts = String::new();
    for (i, (x, y)) in points.enumerate() {
        if i > 0 {
            pts.push(' ');
        }
        let _ = write!(pts, "{x:.2},{y:.2}");
    }
    format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{pts}\"/>\n")
}

/// Standalone SVG line plot of train and test accuracy against epoch.
pub fn curve_svg(curve: &[EpochMetrics], title: &str, seed: u64) -> Result<String> {
    if curve.is_empty() {
        return Err(Error::Empty("accuracy curve"));
    }
    let last = curve.len().max(2) - 1;
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let px = |i: usize| LEFT + pw * i as f64 / last as f64;
    let py = |a: f64| TOP + ph * (1.0 - a.clamp(0.0, 1.0));
    let title = title.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(s, "<!-- seed: {seed} -->");
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>",
        W / 2.0
    );
    let (x0, y0, x1, y1) = (LEFT, TOP + ph, LEFT + pw, TOP);
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    for tick in 0..=4 {
        let a = tick as f64 / 4.0;
        let y = py(a);
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{a:.2}</text>",
            LEFT - 6.0,
            y + 4.0
        );
    }
    for (i, label) in [(0, 1), (last, curve.len())] {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>",
            px(i),
            y0 + 16.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">epoch</text>",
        LEFT + pw / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 {:.2})\">accuracy</text>",
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    s.push_str(&polyline(
        curve.iter().enumerate().map(|(i, m)| (px(i), py(m.train_acc))),
        "#1f77b4",
    ));
    let test: Vec<(f64, f64)> = curve
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.test_acc.map(|t| (px(i), py(t))))
        .collect();
    if !test.is_empty() {
        s.push_str(&polyline(test.into_iter(), "#ff7f0e"));
    }
    for (row, (name, color)) in [("train", "#1f77b4"), ("test", "#ff7f0e")].into_iter().enumerate() {
        let y = TOP + 10.0 + 16.0 * row as f64;
        let x = LEFT + pw - 90.0;
        let _ = writeln!(
            s,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            x + 20.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{name}</text>",
            x + 26.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
