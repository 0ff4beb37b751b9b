//! Stage-by-stage driver: ingest, sentiment, events, embed, train-ntn,
//! align, train, evaluate, plus the independent correlate stage.
//!
//! Every stage recomputes its prerequisites in memory, so any subcommand
//! can run from raw inputs. Each ticker draws its randomness from
//! `derive_seed(seed, ticker)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use stockevents_core::embeddings::{
    average_tuples, build_vocab, embed_tuple, train_skipgram, EmbeddedTuple, SkipGramConfig, Vocabulary, WordEmbeddings,
};
use stockevents_core::eval::{chrono_split, curve_csv, curve_svg, lag_correlations, SplitConfig};
use stockevents_core::marketdata::{next_day_label, Lags, PriceSeries};
use stockevents_core::models::{
    build_sample, forecast_windows_fitted, train_classifier, train_forecaster, AlignedSample, Classifier, EbcnnConfig,
    EbcnnParams, ForecastConfig, LstmClassifier, LstmForecaster, ShortTermConfig, ShortTermParams, TrainConfig,
    FORECAST_HIDDEN,
};
use stockevents_core::nnkit::Parameters;
use stockevents_core::ntn::{embed_events, train_ntn, EventEmbedding, NtnConfig};
use stockevents_core::textpipe::{
    extract_events, generalize, sentiment, tokenize, EventTuple, Headline, Lexicon, SentimentScore, VerbInventory,
    VerbMap,
};
use stockevents_core::{derive_seed, NaiveDate};

use crate::config::{ModelKind, RunConfig};
use crate::error::{CliError, Context, Result};
use crate::formats::{
    embeddings_text, parse_lexicon, parse_verbs, read_headlines, read_lexicon, read_price_dir, read_verbs, write_text,
    Checkpoint,
};

pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.tsv");
pub const DEFAULT_VERBS: &str = include_str!("../data/verbs.txt");
pub const DEFAULT_VERB_MAP: &str = include_str!("../data/verb_map.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Sentiment,
    Events,
    Embed,
    TrainNtn,
    Align,
    Train,
    Evaluate,
}

pub struct Resources {
    pub lexicon: Lexicon,
    pub verbs: VerbInventory,
    pub verb_map: VerbMap,
}

impl Resources {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let lexicon = match &cfg.lexicon {
            Some(p) => read_lexicon(p)?,
            None => parse_lexicon(Path::new("<bundled lexicon>"), DEFAULT_LEXICON)?,
        };
        let verb_text = match &cfg.verbs {
            Some(p) => read_verbs(p)?,
            None => format!("{DEFAULT_VERBS}{DEFAULT_VERB_MAP}"),
        };
        let (verbs, verb_map) = parse_verbs(&verb_text);
        Ok(Resources {
            lexicon,
            verbs,
            verb_map,
        })
    }
}

pub struct Dataset {
    pub series: Vec<PriceSeries>,
    pub headlines: Vec<Headline>,
}

impl Dataset {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        cfg.check_inputs()?;
        let series = read_price_dir(&cfg.prices_dir)?;
        if series.is_empty() {
            return Err(CliError::data(format!(
                "{}: no <TICKER>.csv files",
                cfg.prices_dir.display()
            )));
        }
        let mut headlines = read_headlines(&cfg.headlines)?;
        headlines.sort_by_key(|h| h.date);
        Ok(Dataset { series, headlines })
    }

    pub fn headlines_for<'a>(&'a self, ticker: &'a str) -> impl Iterator<Item = &'a Headline> + 'a {
        self.headlines.iter().filter(move |h| h.ticker == ticker)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickerManifest {
    pub ticker: String,
    pub first_date: String,
    pub last_date: String,
    pub bars: usize,
    pub articles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub seed: u64,
    pub tickers: Vec<TickerManifest>,
    /// Headlines whose ticker has no price file.
    pub unmatched_articles: usize,
}

pub fn manifest(ds: &Dataset, seed: u64) -> Manifest {
    let tickers: Vec<TickerManifest> = ds
        .series
        .iter()
        .map(|s| TickerManifest {
            ticker: s.ticker.clone(),
            first_date: s.bars().first().map(|b| b.date.to_string()).unwrap_or_default(),
            last_date: s.bars().last().map(|b| b.date.to_string()).unwrap_or_default(),
            bars: s.len(),
            articles: ds.headlines_for(&s.ticker).count(),
        })
        .collect();
    let matched: usize = tickers.iter().map(|t| t.articles).sum();
    Manifest {
        seed,
        tickers,
        unmatched_articles: ds.headlines.len() - matched,
    }
}

/// One row of `evaluation.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub ticker: String,
    pub model: ModelKind,
    pub train_n: usize,
    pub test_n: usize,
    /// `accuracy` or `mse`.
    pub metric: &'static str,
    pub train: f64,
    pub test: f64,
}

#[derive(Debug, Default)]
pub struct RunSummary {
    pub evaluations: Vec<Evaluation>,
    pub warnings: Vec<String>,
    /// Files written, relative to the output directory.
    pub files: Vec<PathBuf>,
}

struct Writer<'a> {
    root: &'a Path,
    summary: RunSummary,
}

impl Writer<'_> {
    fn emit(&mut self, rel: impl AsRef<Path>, text: &str) -> Result<()> {
        let rel = rel.as_ref();
        write_text(&self.root.join(rel), text)?;
        self.summary.files.push(rel.to_path_buf());
        Ok(())
    }

    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.summary.warnings.push(msg);
    }
}

/// Mean score per calendar day, in date order.
pub fn daily_sentiment<'a>(
    headlines: impl Iterator<Item = &'a Headline>,
    lexicon: &Lexicon,
) -> Vec<(NaiveDate, usize, SentimentScore)> {
    let mut days: BTreeMap<NaiveDate, Vec<SentimentScore>> = BTreeMap::new();
    for h in headlines {
        days.entry(h.date)
            .or_default()
            .push(sentiment(&tokenize(&h.text), lexicon));
    }
    days.into_iter()
        .map(|(d, scores)| {
            let n = scores.len() as f64;
            let mean = scores.iter().fold([0.0; 4], |acc, s| {
                [acc[0] + s.pos, acc[1] + s.neg, acc[2] + s.neu, acc[3] + s.compound]
            });
            let score = SentimentScore {
                pos: mean[0] / n,
                neg: mean[1] / n,
                neu: mean[2] / n,
                compound: mean[3] / n,
            };
            (d, scores.len(), score)
        })
        .collect()
}

fn sentiment_csv(daily: &[(NaiveDate, usize, SentimentScore)]) -> String {
    let mut out = String::from("date,articles,pos,neg,neu,compound\n");
    for (d, n, s) in daily {
        let _ = writeln!(out, "{d},{n},{},{},{},{}", s.pos, s.neg, s.neu, s.compound);
    }
    out
}

/// Generalized events per headline (headlines without events are omitted).
pub fn headline_events<'a>(headlines: impl Iterator<Item = &'a Headline>, res: &Resources) -> Vec<Vec<EventTuple>> {
    headlines
        .map(|h| {
            extract_events(h, &res.verbs)
                .iter()
                .map(|e| generalize(e, &res.verb_map))
                .collect::<Vec<_>>()
        })
        .filter(|ev| !ev.is_empty())
        .collect()
}

fn events_tsv(events: &[Vec<EventTuple>]) -> String {
    let mut out = String::from("date\tactor\taction\tobject\n");
    for e in events.iter().flatten() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            e.date,
            e.actor.join(" "),
            e.action,
            e.object.join(" ")
        );
    }
    out
}

pub struct TrainedEmbeddings {
    pub vocab: Vocabulary,
    pub embeddings: WordEmbeddings,
    pub epoch_losses: Vec<f64>,
}

pub fn train_word_vectors<'a>(
    headlines: impl Iterator<Item = &'a Headline>,
    cfg: &RunConfig,
    seed: u64,
) -> Result<TrainedEmbeddings> {
    let corpus: Vec<Vec<String>> = headlines.map(|h| tokenize(&h.text)).collect();
    let vocab = build_vocab(&corpus, cfg.min_count)?;
    let sg = SkipGramConfig {
        dim: cfg.embedding_dim,
        window: cfg.skipgram_window,
        negatives: cfg.skipgram_negatives,
        epochs: cfg.skipgram_epochs,
        learning_rate: cfg.skipgram_learning_rate,
        seed,
    };
    let out = train_skipgram(&corpus, &vocab, &sg)?;
    Ok(TrainedEmbeddings {
        vocab,
        embeddings: out.embeddings,
        epoch_losses: out.epoch_losses,
    })
}

fn loss_csv(header: &str, values: impl Iterator<Item = String>) -> String {
    let mut out = format!("{header}\n");
    for (i, v) in values.enumerate() {
        let _ = writeln!(out, "{},{v}", i + 1);
    }
    out
}

fn lags(cfg: &RunConfig) -> Lags {
    Lags {
        day: cfg.day_lag,
        week: cfg.week_lag,
        month: cfg.month_lag,
    }
}

/// One sample per distinct event day that has a next-day label.
pub fn align_samples(
    events: &[EventEmbedding],
    series: &PriceSeries,
    lags: Lags,
    dim: usize,
) -> Result<Vec<AlignedSample>> {
    let mut days: Vec<NaiveDate> = events.iter().map(|e| e.date).collect();
    days.dedup();
    let mut out = Vec::new();
    for d in days {
        if let Some(label) = next_day_label(series, d) {
            out.push(build_sample(events, d, label, lags, dim)?);
        }
    }
    Ok(out)
}

/// `(articles, labeled, up)` for a ticker's headlines.
pub fn up_counts<'a>(headlines: impl Iterator<Item = &'a Headline>, series: &PriceSeries) -> (usize, usize, usize) {
    let (mut n, mut labeled, mut up) = (0, 0, 0);
    for h in headlines {
        n += 1;
        if let Some(l) = next_day_label(series, h.date) {
            labeled += 1;
            up += usize::from(l);
        }
    }
    (n, labeled, up)
}

fn aligned_csv(samples: &[AlignedSample]) -> String {
    let mut out = String::from("date,label,week_valid,month_valid\n");
    for s in samples {
        let _ = writeln!(out, "{},{},{},{}", s.date, s.label, s.week_valid, s.month_valid);
    }
    out
}

fn lstm_names() -> Vec<String> {
    let mut names = Vec::new();
    for g in ["input_gate", "forget_gate", "output_gate", "candidate"] {
        for part in ["input", "recurrent", "bias"] {
            names.push(format!("{g}_{part}"));
        }
    }
    names.push("head_w".into());
    names.push("head_b".into());
    names
}

fn checkpoint<P: Parameters>(model: &str, meta: Vec<(&str, String)>, names: &[String], p: &P) -> String {
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let meta = meta.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Checkpoint::from_params(model, meta, &names, p).to_text()
}

#[allow(clippy::too_many_arguments)]
fn fit<C: Classifier<Input = AlignedSample>>(
    w: &mut Writer,
    ticker: &str,
    kind: ModelKind,
    mut model: C,
    names: &[String],
    meta: Vec<(&str, String)>,
    train: &[AlignedSample],
    test: &[AlignedSample],
    tc: &TrainConfig,
    run_seed: u64,
) -> Result<Evaluation> {
    let report = train_classifier(&mut model, train, test, tc).stage(&format!("{ticker}: train"))?;
    w.emit(format!("{ticker}/curve.csv"), &curve_csv(&report.curve)?)?;
    let title = format!("{ticker} {} model", kind.name());
    w.emit(
        format!("{ticker}/curve.svg"),
        &curve_svg(&report.curve, &title, run_seed)?,
    )?;
    w.emit(
        format!("{ticker}/model.ckpt"),
        &checkpoint(kind.name(), meta, names, &model),
    )?;
    let last = report.curve.last();
    Ok(Evaluation {
        ticker: ticker.to_string(),
        model: kind,
        train_n: train.len(),
        test_n: test.len(),
        metric: "accuracy",
        train: last.map_or(f64::NAN, |m| m.train_acc),
        test: last.and_then(|m| m.test_acc).unwrap_or(f64::NAN),
    })
}

fn train_event_model(
    w: &mut Writer,
    cfg: &RunConfig,
    ticker: &str,
    ticker_seed: u64,
    samples: &[AlignedSample],
) -> Result<Option<Evaluation>> {
    let split = SplitConfig {
        ratio: cfg.ratio,
        shuffle_train: cfg.shuffle,
        seed: derive_seed(ticker_seed, "split"),
    };
    let (train, test) = match chrono_split(samples, &split) {
        Ok(s) => s,
        Err(e) => {
            w.warn(format!(
                "{ticker}: {} aligned samples, cannot split: {e}",
                samples.len()
            ));
            return Ok(None);
        }
    };
    let tc = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        shuffle: cfg.shuffle,
        seed: derive_seed(ticker_seed, "train"),
    };
    let mut rng = rand_for(derive_seed(ticker_seed, "model"));
    let d = cfg.embedding_dim;
    let seed_meta = ("seed", cfg.seed.to_string());
    let eval = match cfg.model {
        ModelKind::Full => {
            let mc = EbcnnConfig {
                dim: d,
                window: cfg.conv_window,
                month_channels: cfg.month_channels,
                week_channels: cfg.week_channels,
                hidden: cfg.hidden,
            };
            let names: Vec<String> = [
                "month_kernel",
                "month_bias",
                "week_kernel",
                "week_bias",
                "w1",
                "b1",
                "w2",
                "b2",
            ]
            .map(String::from)
            .to_vec();
            let meta = vec![
                ("d", d.to_string()),
                seed_meta,
                ("hidden", cfg.hidden.to_string()),
                ("channels", format!("{} {}", cfg.month_channels, cfg.week_channels)),
            ];
            let model = EbcnnParams::new(mc, &mut rng)?;
            fit(w, ticker, cfg.model, model, &names, meta, &train, &test, &tc, cfg.seed)?
        }
        ModelKind::Short => {
            let sc = ShortTermConfig {
                dim: d,
                hidden: cfg.short_hidden,
            };
            let names: Vec<String> = ["w1", "b1", "w2", "b2"].map(String::from).to_vec();
            let meta = vec![
                ("d", d.to_string()),
                seed_meta,
                ("hidden", cfg.short_hidden.to_string()),
            ];
            let model = ShortTermParams::new(sc, &mut rng)?;
            fit(w, ticker, cfg.model, model, &names, meta, &train, &test, &tc, cfg.seed)?
        }
        ModelKind::Lstm => {
            let meta = vec![("d", d.to_string()), seed_meta, ("hidden", cfg.lstm_hidden.to_string())];
            let model = LstmClassifier::new(d, cfg.lstm_hidden, &mut rng);
            fit(
                w,
                ticker,
                cfg.model,
                model,
                &lstm_names(),
                meta,
                &train,
                &test,
                &tc,
                cfg.seed,
            )?
        }
        ModelKind::Forecast => unreachable!("forecaster trains on prices"),
    };
    Ok(Some(eval))
}

fn rand_for(seed: u64) -> impl rand::Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn train_price_model(
    w: &mut Writer,
    cfg: &RunConfig,
    series: &PriceSeries,
    ticker_seed: u64,
) -> Result<Option<Evaluation>> {
    let ticker = series.ticker.as_str();
    let fit_bars = series.len().saturating_sub(cfg.forecast_test_days);
    let windows = forecast_windows_fitted(series, cfg.forecast_window, cfg.forecast_horizon, fit_bars)?;
    if windows.len() <= cfg.forecast_test_days || cfg.forecast_test_days == 0 {
        w.warn(format!(
            "{ticker}: {} forecast windows, need more than the {} test windows",
            windows.len(),
            cfg.forecast_test_days
        ));
        return Ok(None);
    }
    let (train, test) = windows.split_at(windows.len() - cfg.forecast_test_days);
    let mut model = LstmForecaster::new(
        cfg.forecast_horizon,
        FORECAST_HIDDEN,
        &mut rand_for(derive_seed(ticker_seed, "model")),
    )?;
    let fc = ForecastConfig {
        epochs: cfg.forecast_epochs,
        batch_size: cfg.forecast_batch_size,
        learning_rate: cfg.forecast_learning_rate,
        shuffle: cfg.shuffle,
        seed: derive_seed(ticker_seed, "train"),
    };
    let losses = train_forecaster(&mut model, train, &fc).stage(&format!("{ticker}: forecast"))?;
    w.emit(
        format!("{ticker}/forecast_loss.csv"),
        &loss_csv("epoch,train_mse", losses.iter().map(f64::to_string)),
    )?;
    let mut pred = String::from("end_date,step,predicted,actual\n");
    for win in test {
        let y = model.lstm_forecast(&win.rows)?;
        for (i, (p, a)) in y.iter().zip(&win.targets).enumerate() {
            let _ = writeln!(pred, "{},{},{p},{a}", win.end_date, i + 1);
        }
    }
    w.emit(format!("{ticker}/forecast.csv"), &pred)?;
    let meta = vec![
        ("seed", cfg.seed.to_string()),
        ("window", cfg.forecast_window.to_string()),
        ("horizon", cfg.forecast_horizon.to_string()),
        ("hidden", FORECAST_HIDDEN.to_string()),
    ];
    w.emit(
        format!("{ticker}/model.ckpt"),
        &checkpoint("forecast", meta, &lstm_names(), &model),
    )?;
    Ok(Some(Evaluation {
        ticker: ticker.to_string(),
        model: ModelKind::Forecast,
        train_n: train.len(),
        test_n: test.len(),
        metric: "mse",
        train: model.mse(train)?,
        test: model.mse(test)?,
    }))
}

fn evaluation_csv(rows: &[Evaluation]) -> String {
    let mut out = String::from("ticker,model,train_n,test_n,metric,train,test\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.ticker,
            r.model.name(),
            r.train_n,
            r.test_n,
            r.metric,
            r.train,
            r.test
        );
    }
    out
}

#[derive(Serialize)]
struct RunRecord<'a> {
    seed: u64,
    stage: String,
    correlate: bool,
    config: &'a RunConfig,
}

/// Run every stage up to `upto` (and the correlation stage when
/// `correlate` is set), writing artifacts under `cfg.out_dir`.
pub fn run(cfg: &RunConfig, upto: Option<Stage>, correlate: bool) -> Result<RunSummary> {
    cfg.validate()?;
    let res = Resources::load(cfg).stage("resources")?;
    let ds = Dataset::load(cfg).stage("ingest")?;
    let mut w = Writer {
        root: &cfg.out_dir,
        summary: RunSummary::default(),
    };
    let at = |s: Stage| upto.is_some_and(|u| u >= s);

    let record = RunRecord {
        seed: cfg.seed,
        stage: upto.map_or("none".into(), |s| format!("{s:?}").to_lowercase()),
        correlate,
        config: cfg,
    };
    let record = serde_json::to_string_pretty(&record).map_err(|e| CliError::data(e.to_string()))?;
    w.emit("run.json", &format!("{record}\n"))?;
    let m = serde_json::to_string_pretty(&manifest(&ds, cfg.seed)).map_err(|e| CliError::data(e.to_string()))?;
    w.emit("manifest.json", &format!("{m}\n"))?;

    if at(Stage::Sentiment) || correlate {
        for s in &ds.series {
            let daily = daily_sentiment(ds.headlines_for(&s.ticker), &res.lexicon);
            if at(Stage::Sentiment) {
                w.emit(format!("{}/sentiment.csv", s.ticker), &sentiment_csv(&daily))?;
            }
            if correlate {
                if daily.is_empty() {
                    w.warn(format!("{}: no headlines, correlation table omitted", s.ticker));
                    continue;
                }
                let scores: Vec<(NaiveDate, SentimentScore)> = daily.iter().map(|(d, _, s)| (*d, *s)).collect();
                let table = lag_correlations(&scores, s, &cfg.correlation_lags);
                for msg in &table.warnings {
                    w.warn(format!("{}: {msg}", s.ticker));
                }
                w.emit(format!("{}/correlations.csv", s.ticker), &table.to_csv())?;
            }
        }
    }

    if at(Stage::Events) {
        let pooled = if at(Stage::Embed) && !cfg.per_ticker_embeddings {
            let te = train_word_vectors(ds.headlines.iter(), cfg, derive_seed(cfg.seed, "skipgram")).stage("embed")?;
            w.emit("embeddings.txt", &embeddings_text(&te.vocab, &te.embeddings))?;
            w.emit(
                "skipgram_loss.csv",
                &loss_csv("epoch,loss", te.epoch_losses.iter().map(f64::to_string)),
            )?;
            Some(te)
        } else {
            None
        };
        let mut evaluations = Vec::new();
        let mut up_rows = String::from("ticker,articles,labeled,up,up_fraction\n");
        for s in &ds.series {
            let ticker = s.ticker.as_str();
            let ticker_seed = derive_seed(cfg.seed, ticker);
            let events = headline_events(ds.headlines_for(ticker), &res);
            w.emit(format!("{ticker}/events.tsv"), &events_tsv(&events))?;
            if !at(Stage::Embed) {
                continue;
            }
            let local;
            let te = match &pooled {
                Some(te) => te,
                None => {
                    if ds.headlines_for(ticker).next().is_none() {
                        w.warn(format!("{ticker}: no headlines, skipping embeddings"));
                        continue;
                    }
                    local = train_word_vectors(ds.headlines_for(ticker), cfg, derive_seed(ticker_seed, "skipgram"))
                        .stage(&format!("{ticker}: embed"))?;
                    w.emit(
                        format!("{ticker}/embeddings.txt"),
                        &embeddings_text(&local.vocab, &local.embeddings),
                    )?;
                    &local
                }
            };
            if !at(Stage::TrainNtn) {
                continue;
            }
            let tuples: Vec<EmbeddedTuple> = events
                .iter()
                .map(|ev| {
                    let lifted: Vec<EmbeddedTuple> =
                        ev.iter().map(|e| embed_tuple(e, &te.embeddings, &te.vocab)).collect();
                    average_tuples(&lifted)
                })
                .collect::<std::result::Result<_, _>>()?;
            if tuples.is_empty() {
                w.warn(format!("{ticker}: no event tuples, skipping event models"));
                continue;
            }
            let nc = NtnConfig {
                epochs: cfg.ntn_epochs,
                batch_size: cfg.ntn_batch_size,
                learning_rate: cfg.ntn_learning_rate,
                lambda: cfg.ntn_lambda,
                seed: derive_seed(ticker_seed, "ntn"),
            };
            let ntn = train_ntn(&tuples, &te.embeddings, &te.vocab, &nc).stage(&format!("{ticker}: train-ntn"))?;
            let meta = vec![
                ("d", cfg.embedding_dim.to_string()),
                ("lambda", cfg.ntn_lambda.to_string()),
                ("seed", cfg.seed.to_string()),
            ];
            let names: Vec<String> = ["t1", "t2", "t3", "w", "b", "m"].map(String::from).to_vec();
            w.emit(
                format!("{ticker}/ntn.ckpt"),
                &checkpoint("ntn", meta, &names, &ntn.params),
            )?;
            w.emit(
                format!("{ticker}/ntn_loss.csv"),
                &loss_csv(
                    "epoch,margin,total",
                    ntn.curve.iter().map(|e| format!("{},{}", e.margin, e.total)),
                ),
            )?;
            if !at(Stage::Align) {
                continue;
            }
            let embedded = embed_events(&tuples, &ntn.params)?;
            let samples =
                align_samples(&embedded, s, lags(cfg), cfg.embedding_dim).stage(&format!("{ticker}: align"))?;
            w.emit(format!("{ticker}/aligned.csv"), &aligned_csv(&samples))?;
            let (n, labeled, up) = up_counts(ds.headlines_for(ticker), s);
            let frac = if labeled == 0 {
                f64::NAN
            } else {
                up as f64 / labeled as f64
            };
            let _ = writeln!(up_rows, "{ticker},{n},{labeled},{up},{frac}");
            if !at(Stage::Train) || cfg.model == ModelKind::Forecast {
                continue;
            }
            if let Some(e) = train_event_model(&mut w, cfg, ticker, ticker_seed, &samples)? {
                evaluations.push(e);
            }
        }
        if at(Stage::Align) {
            w.emit("up_fraction.csv", &up_rows)?;
        }
        if at(Stage::Train) && cfg.model == ModelKind::Forecast {
            for s in &ds.series {
                if let Some(e) = train_price_model(&mut w, cfg, s, derive_seed(cfg.seed, &s.ticker))? {
                    evaluations.push(e);
                }
            }
        }
        if at(Stage::Evaluate) {
            w.emit("evaluation.csv", &evaluation_csv(&evaluations))?;
        }
        w.summary.evaluations = evaluations;
    }

    let mut warnings = w.summary.warnings.join("\n");
    if !warnings.is_empty() {
        warnings.push('\n');
    }
    w.emit("warnings.txt", &warnings)?;
    Ok(w.summary)
}
