use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{ModelKind, Overrides, RunConfig};
use crate::error::{CliError, Result};
use crate::pipeline::{run, RunSummary, Stage};

#[derive(Debug, Parser)]
#[command(name = "stockevents", version, about = "Event-driven stock movement prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Fraction of the earliest samples used for training.
    #[arg(long, global = true)]
    pub ratio: Option<f64>,
    /// Shuffle the training set.
    #[arg(long, global = true)]
    pub shuffle: bool,
    /// Training epochs of the event classifiers.
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Validate inputs and write the dataset manifest.
    Ingest,
    /// Daily lexicon sentiment per ticker.
    Sentiment,
    /// Extract and generalize event tuples.
    Events,
    /// Train skip-gram word vectors.
    Embed,
    /// Train the event-embedding tensor network.
    TrainNtn,
    /// Build labelled multi-horizon samples.
    Align,
    /// Train the selected model.
    Train,
    /// Train and write the evaluation table.
    Evaluate,
    /// Sentiment/price lag correlation tables.
    Correlate,
    /// Every stage, including correlations.
    Pipeline,
}

impl Command {
    fn plan(self) -> (Option<Stage>, bool) {
        match self {
            Command::Ingest => (Some(Stage::Ingest), false),
            Command::Sentiment => (Some(Stage::Sentiment), false),
            Command::Events => (Some(Stage::Events), false),
            Command::Embed => (Some(Stage::Embed), false),
            Command::TrainNtn => (Some(Stage::TrainNtn), false),
            Command::Align => (Some(Stage::Align), false),
            Command::Train => (Some(Stage::Train), false),
            Command::Evaluate => (Some(Stage::Evaluate), false),
            Command::Correlate => (None, true),
            Command::Pipeline => (Some(Stage::Evaluate), true),
        }
    }
}

impl Cli {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            out_dir: self.out.clone(),
            ratio: self.ratio,
            shuffle: self.shuffle,
            epochs: self.epochs,
            model: self.model,
        });
        Ok(cfg)
    }

    pub fn execute(&self) -> Result<RunSummary> {
        let cfg = self.resolve()?;
        let (upto, correlate) = self.command.plan();
        run(&cfg, upto, correlate)
    }
}

fn report(summary: &RunSummary) {
    for e in &summary.evaluations {
        println!(
            "{} {}: train {} {} (n={}), test {} {} (n={})",
            e.ticker,
            e.model.name(),
            e.metric,
            e.train,
            e.train_n,
            e.metric,
            e.test,
            e.test_n
        );
    }
    println!("wrote {} files", summary.files.len());
}

/// Parse `args`, run, and return the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.execute() {
        Ok(summary) => {
            report(&summary);
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
