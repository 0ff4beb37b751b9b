mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::{fixture_dir, run_in, Workspace};
use stockevents::formats::{parse_headlines, read_checkpoint, read_prices};
use stockevents_core::marketdata::PriceSeries;
use stockevents_core::models::{EbcnnConfig, EbcnnParams};
use stockevents_core::NaiveDate;

const SMALL: &str = "prices_dir = \"prices\"
headlines = \"headlines.tsv\"
out_dir = \"out\"
ratio = 0.7
embedding_dim = 6
skipgram_epochs = 2
ntn_epochs = 4
ntn_batch_size = 20
epochs = 4
batch_size = 10
hidden = 5
short_hidden = 4
month_channels = 3
week_channels = 2
lstm_hidden = 3
forecast_window = 5
forecast_horizon = 2
forecast_test_days = 20
forecast_epochs = 2";

fn fixture_workspace() -> (Workspace, PathBuf) {
    let ws = Workspace::new();
    for t in ["AAPL", "GOOG"] {
        let src = fixture_dir().join(format!("prices/{t}.csv"));
        fs::copy(src, ws.path(&format!("prices/{t}.csv"))).unwrap();
    }
    fs::copy(fixture_dir().join("headlines.tsv"), ws.path("headlines.tsv")).unwrap();
    let cfg = ws.config(SMALL);
    (ws, cfg)
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn brute_label(series: &PriceSeries, day: NaiveDate) -> Option<u8> {
    let bars = series.bars();
    let today = bars.iter().rev().find(|b| b.date <= day)?;
    let next = bars.iter().find(|b| b.date > day)?;
    Some(u8::from(next.close >= today.close))
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let (ws, cfg) = fixture_workspace();
    assert_eq!(run_in(&cfg, "pipeline", &[]), 0);
    let files: Vec<String> = files_under(&ws.path("out"))
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    let mut expected = vec![
        "embeddings.txt",
        "evaluation.csv",
        "manifest.json",
        "run.json",
        "skipgram_loss.csv",
        "up_fraction.csv",
        "warnings.txt",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    for t in ["AAPL", "GOOG"] {
        for f in [
            "aligned.csv",
            "correlations.csv",
            "curve.csv",
            "curve.svg",
            "events.tsv",
            "model.ckpt",
            "ntn.ckpt",
            "ntn_loss.csv",
            "sentiment.csv",
        ] {
            expected.push(format!("{t}/{f}"));
        }
    }
    expected.sort();
    assert_eq!(files, expected);

    let eval = ws.read("out/evaluation.csv");
    let lines: Vec<&str> = eval.lines().collect();
    assert_eq!(lines[0], "ticker,model,train_n,test_n,metric,train,test");
    assert_eq!(lines.len(), 3);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!((f[1], f[4]), ("full", "accuracy"));
        let (train, test): (f64, f64) = (f[5].parse().unwrap(), f[6].parse().unwrap());
        assert!((0.0..=1.0).contains(&train) && (0.0..=1.0).contains(&test));
    }
    assert_eq!(ws.read("out/skipgram_loss.csv").lines().count(), 3);
    assert_eq!(ws.read("out/AAPL/ntn_loss.csv").lines().count(), 5);
    assert_eq!(ws.read("out/AAPL/curve.csv").lines().count(), 5);

    let ck = read_checkpoint(&ws.path("out/AAPL/model.ckpt")).unwrap();
    let shape = EbcnnConfig {
        hidden: 5,
        month_channels: 3,
        week_channels: 2,
        ..EbcnnConfig::new(6)
    };
    ck.load_into(&mut EbcnnParams::zeros(shape).unwrap()).unwrap();
}

#[test]
fn up_fraction_matches_a_direct_count() {
    let (ws, cfg) = fixture_workspace();
    assert_eq!(run_in(&cfg, "align", &[]), 0);
    let headlines = parse_headlines(Path::new("h"), &ws.read("headlines.tsv")).unwrap();
    let table = ws.read("out/up_fraction.csv");
    let mut rows = table.lines();
    assert_eq!(rows.next(), Some("ticker,articles,labeled,up,up_fraction"));
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let series = read_prices(&ws.path(&format!("prices/{}.csv", f[0]))).unwrap();
        let labels: Vec<Option<u8>> = headlines
            .iter()
            .filter(|h| h.ticker == f[0])
            .map(|h| brute_label(&series, h.date))
            .collect();
        let labeled = labels.iter().flatten().count();
        let up = labels.iter().flatten().filter(|l| **l == 1).count();
        assert_eq!(f[1], labels.len().to_string());
        assert_eq!(f[2], labeled.to_string());
        assert_eq!(f[3], up.to_string());
        assert!((f[4].parse::<f64>().unwrap() - up as f64 / labeled as f64).abs() < 1e-12);
    }
    assert!(!ws.path("out/AAPL/model.ckpt").exists());
}

#[test]
fn curve_svg_is_well_formed_and_carries_the_seed() {
    let (ws, cfg) = fixture_workspace();
    assert_eq!(run_in(&cfg, "evaluate", &["--seed", "77"]), 0);
    let svg = ws.read("out/GOOG/curve.svg");
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert!(doc
        .descendants()
        .any(|n| n.is_comment() && n.text().unwrap_or("").contains("seed: 77")));
    assert!(doc
        .descendants()
        .any(|n| n.tag_name().name() == "polyline" || n.tag_name().name() == "path"));

    let run: serde_json::Value = serde_json::from_str(&ws.read("out/run.json")).unwrap();
    assert_eq!(run["seed"], 77);
    let manifest: serde_json::Value = serde_json::from_str(&ws.read("out/manifest.json")).unwrap();
    assert_eq!(manifest["seed"], 77);
    assert_eq!(manifest["tickers"].as_array().unwrap().len(), 2);
    for f in ["AAPL/ntn.ckpt", "AAPL/model.ckpt", "GOOG/ntn.ckpt"] {
        assert_eq!(
            read_checkpoint(&ws.path(&format!("out/{f}"))).unwrap().meta("seed"),
            Some("77")
        );
    }
}

#[test]
fn reruns_are_byte_identical_and_seeds_matter() {
    let (ws, cfg) = fixture_workspace();
    assert_eq!(run_in(&cfg, "pipeline", &["--out", ws.path("a").to_str().unwrap()]), 0);
    assert_eq!(run_in(&cfg, "pipeline", &["--out", ws.path("b").to_str().unwrap()]), 0);
    let (a, b) = (files_under(&ws.path("a")), files_under(&ws.path("b")));
    assert_eq!(a, b);
    for f in &a {
        assert_eq!(
            fs::read(ws.path("a").join(f)).unwrap(),
            fs::read(ws.path("b").join(f)).unwrap(),
            "{}",
            f.display()
        );
    }
    assert_eq!(
        run_in(
            &cfg,
            "pipeline",
            &["--seed", "6", "--out", ws.path("c").to_str().unwrap()]
        ),
        0
    );
    assert_ne!(ws.read("a/AAPL/ntn.ckpt"), ws.read("c/AAPL/ntn.ckpt"));
}

#[test]
fn other_models_write_their_artifacts() {
    let (ws, cfg) = fixture_workspace();
    for model in ["short", "lstm"] {
        let out = ws.path(model);
        assert_eq!(
            run_in(&cfg, "evaluate", &["--model", model, "--out", out.to_str().unwrap()]),
            0
        );
        let eval = fs::read_to_string(out.join("evaluation.csv")).unwrap();
        assert!(
            eval.lines().skip(1).all(|l| l.split(',').nth(1) == Some(model)),
            "{eval}"
        );
        assert_eq!(read_checkpoint(&out.join("AAPL/model.ckpt")).unwrap().model, model);
    }
    let out = ws.path("forecast");
    assert_eq!(
        run_in(
            &cfg,
            "evaluate",
            &["--model", "forecast", "--out", out.to_str().unwrap()]
        ),
        0
    );
    let eval = fs::read_to_string(out.join("evaluation.csv")).unwrap();
    for l in eval.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!((f[1], f[3], f[4]), ("forecast", "20", "mse"));
    }
    let pred = fs::read_to_string(out.join("AAPL/forecast.csv")).unwrap();
    assert_eq!(pred.lines().next(), Some("end_date,step,predicted,actual"));
    assert_eq!(pred.lines().count(), 1 + 20 * 2);
    assert_eq!(
        fs::read_to_string(out.join("AAPL/forecast_loss.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
    assert!(!out.join("AAPL/curve.csv").exists());
}
