mod common;

use std::collections::BTreeMap;

use chrono::Days;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{run_in, start, Workspace};
use stockevents::pipeline::daily_sentiment;
use stockevents_core::textpipe::{sentiment, tokenize, Headline, Lexicon};

const LEXICON: [(&str, f64); 3] = [("good", 1.9), ("bad", -2.5), ("strong", 2.3)];
const WORDS: [&str; 6] = ["good", "bad", "strong", "shares", "today", "apple"];

fn lexicon_file() -> String {
    LEXICON.iter().map(|(w, v)| format!("{w}\t{v}\n")).collect()
}

fn lexicon() -> Lexicon {
    Lexicon::from_entries(LEXICON).unwrap()
}

fn random_headline(r: &mut ChaCha8Rng) -> String {
    let n = r.gen_range(2..7);
    (0..n)
        .map(|_| WORDS[r.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn planted_lag_is_recovered_from_files() {
    let ws = Workspace::new();
    let mut r = ChaCha8Rng::seed_from_u64(21);
    let lex = lexicon();
    let days = 300u64;
    let mut close: Vec<f64> = (0..days)
        .map(|_| (r.gen_range(90.0..110.0f64) * 100.0).round() / 100.0)
        .collect();
    let mut headlines = String::new();
    for a in (0..days - 10).step_by(10) {
        let text = random_headline(&mut r);
        let c = sentiment(&tokenize(&text), &lex).compound;
        close[a as usize] = 100.0;
        close[a as usize + 3] = 100.0 + c;
        let d = start().checked_add_days(Days::new(a)).unwrap();
        headlines.push_str(&format!("{d}\tAAPL\t{text}\n"));
    }
    let mut prices = String::from("date,open,high,low,close,volume\n");
    for (i, c) in close.iter().enumerate() {
        let d = start().checked_add_days(Days::new(i as u64)).unwrap();
        prices.push_str(&format!(
            "{d},{c},{},{},{c},{}\n",
            c + 1.0,
            c - 1.0,
            r.gen_range(1000..5000)
        ));
    }
    ws.write("prices/AAPL.csv", &prices);
    ws.write("prices/GOOG.csv", &prices);
    ws.write("headlines.tsv", &headlines);
    ws.write("lexicon.tsv", &lexicon_file());
    let cfg = ws
        .config("prices_dir = \"prices\"\nheadlines = \"headlines.tsv\"\nout_dir = \"out\"\nlexicon = \"lexicon.tsv\"");
    assert_eq!(run_in(&cfg, "correlate", &[]), 0);

    let table = rows(&ws.read("out/AAPL/correlations.csv"));
    let r3 = table.iter().find(|row| row[0] == "compound" && row[1] == "3").unwrap();
    let r3: f64 = r3[2].parse().unwrap();
    assert!((r3 - 1.0).abs() < 1e-9, "r at lag 3 = {r3}");
    assert_eq!(table.iter().filter(|row| row[0] == "compound").count(), 3);

    assert!(!ws.path("out/GOOG/correlations.csv").exists());
    assert!(ws
        .read("out/warnings.txt")
        .contains("GOOG: no headlines, correlation table omitted"));
}

#[test]
fn daily_sentiment_is_the_per_day_mean() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let lex = lexicon();
    let headlines: Vec<Headline> = (0..80)
        .map(|_| {
            let d = start().checked_add_days(Days::new(r.gen_range(0..15))).unwrap();
            Headline::new(d, "AAPL", random_headline(&mut r)).unwrap()
        })
        .collect();
    let mut brute: BTreeMap<_, Vec<[f64; 4]>> = BTreeMap::new();
    for h in &headlines {
        let s = sentiment(&tokenize(&h.text), &lex);
        brute.entry(h.date).or_default().push([s.pos, s.neg, s.neu, s.compound]);
    }
    let daily = daily_sentiment(headlines.iter(), &lex);
    assert_eq!(daily.len(), brute.len());
    for ((d, n, s), (bd, scores)) in daily.iter().zip(&brute) {
        assert_eq!(d, bd);
        assert_eq!(*n, scores.len());
        let got = [s.pos, s.neg, s.neu, s.compound];
        for k in 0..4 {
            let mean = scores.iter().map(|x| x[k]).sum::<f64>() / scores.len() as f64;
            assert!((got[k] - mean).abs() < 1e-12);
        }
    }
}

#[test]
fn sentiment_file_has_one_row_per_headline_day() {
    let ws = Workspace::new();
    let dates = common::weekdays(20);
    ws.write(
        "prices/AAPL.csv",
        &common::price_csv(&dates, &common::random_walk(20, 1)),
    );
    ws.write(
        "headlines.tsv",
        &format!(
            "{0}\tAAPL\tgood day\n{0}\tAAPL\tbad day\n{1}\tAAPL\tflat\n",
            dates[2], dates[5]
        ),
    );
    ws.write("lexicon.tsv", &lexicon_file());
    let cfg = ws
        .config("prices_dir = \"prices\"\nheadlines = \"headlines.tsv\"\nout_dir = \"out\"\nlexicon = \"lexicon.tsv\"");
    assert_eq!(run_in(&cfg, "sentiment", &[]), 0);
    let text = ws.read("out/AAPL/sentiment.csv");
    assert!(text.starts_with("date,articles,pos,neg,neu,compound\n"));
    let table = rows(&text);
    assert_eq!(table.len(), 2);
    assert_eq!(table[0][0], dates[2].to_string());
    assert_eq!(table[0][1], "2");
    assert_eq!(table[1][1], "1");
    let lex = lexicon();
    let mean = (sentiment(&["good", "day"], &lex).compound + sentiment(&["bad", "day"], &lex).compound) / 2.0;
    assert!((table[0][5].parse::<f64>().unwrap() - mean).abs() < 1e-12);
    assert_eq!(table[1][5], "0");
}
