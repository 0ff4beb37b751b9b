//! Run configuration: defaults, overridden by a flat `key = value` file,
//! overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Multi-horizon convolutional network.
    Full,
    /// Day-only network.
    Short,
    /// LSTM over the event sequence.
    Lstm,
    /// LSTM price forecaster.
    Forecast,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Short => "short",
            ModelKind::Lstm => "lstm",
            ModelKind::Forecast => "forecast",
        }
    }
}

/// Every tunable of a run. Paths are resolved against the config file's
/// directory when they come from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub prices_dir: PathBuf,
    pub headlines: PathBuf,
    /// Bundled lexicon when unset.
    pub lexicon: Option<PathBuf>,
    /// Bundled verb inventory and verb map when unset.
    pub verbs: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub out_dir: PathBuf,

    pub seed: u64,
    pub ratio: f64,
    pub shuffle: bool,
    pub model: ModelKind,

    pub embedding_dim: usize,
    pub min_count: u64,
    pub skipgram_window: usize,
    pub skipgram_negatives: usize,
    pub skipgram_epochs: usize,
    pub skipgram_learning_rate: f64,
    /// Train word vectors per ticker instead of on all headlines.
    pub per_ticker_embeddings: bool,

    pub ntn_epochs: usize,
    pub ntn_batch_size: usize,
    pub ntn_learning_rate: f64,
    pub ntn_lambda: f64,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub short_hidden: usize,
    pub month_channels: usize,
    pub week_channels: usize,
    pub conv_window: usize,
    pub day_lag: u64,
    pub week_lag: u64,
    pub month_lag: u64,
    pub lstm_hidden: usize,

    pub forecast_window: usize,
    pub forecast_horizon: usize,
    pub forecast_test_days: usize,
    pub forecast_epochs: usize,
    pub forecast_batch_size: usize,
    pub forecast_learning_rate: f64,

    pub correlation_lags: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prices_dir: PathBuf::from("prices"),
            headlines: PathBuf::from("headlines.tsv"),
            lexicon: None,
            verbs: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            ratio: 0.7,
            shuffle: false,
            model: ModelKind::Full,
            embedding_dim: 100,
            min_count: 1,
            skipgram_window: 5,
            skipgram_negatives: 5,
            skipgram_epochs: 5,
            skipgram_learning_rate: 0.025,
            per_ticker_embeddings: false,
            ntn_epochs: 500,
            ntn_batch_size: 50,
            ntn_learning_rate: 0.001,
            ntn_lambda: 1e-4,
            epochs: 500,
            batch_size: 50,
            learning_rate: 0.001,
            hidden: 200,
            short_hidden: 150,
            month_channels: 40,
            week_channels: 20,
            conv_window: 3,
            day_lag: 1,
            week_lag: 7,
            month_lag: 30,
            lstm_hidden: 16,
            forecast_window: 10,
            forecast_horizon: 5,
            forecast_test_days: 50,
            forecast_epochs: 5,
            forecast_batch_size: 1,
            forecast_learning_rate: 0.001,
            correlation_lags: vec![1, 3, 7],
        }
    }
}

/// Values given on the command line; `None` leaves the file/default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub ratio: Option<f64>,
    pub shuffle: bool,
    pub epochs: Option<usize>,
    pub model: Option<ModelKind>,
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.prices_dir);
        rebase(&mut cfg.headlines);
        rebase(&mut cfg.out_dir);
        cfg.lexicon.as_mut().map(rebase);
        cfg.verbs.as_mut().map(rebase);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| e.context(path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.out_dir {
            self.out_dir = p.clone();
        }
        if let Some(r) = o.ratio {
            self.ratio = r;
        }
        if o.shuffle {
            self.shuffle = true;
        }
        if let Some(e) = o.epochs {
            self.epochs = e;
        }
        if let Some(m) = o.model {
            self.model = m;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return usage(format!("ratio {} must lie in (0, 1)", self.ratio));
        }
        let sizes = [
            ("embedding_dim", self.embedding_dim),
            ("skipgram_window", self.skipgram_window),
            ("ntn_batch_size", self.ntn_batch_size),
            ("batch_size", self.batch_size),
            ("hidden", self.hidden),
            ("short_hidden", self.short_hidden),
            ("month_channels", self.month_channels),
            ("week_channels", self.week_channels),
            ("conv_window", self.conv_window),
            ("lstm_hidden", self.lstm_hidden),
            ("forecast_window", self.forecast_window),
            ("forecast_horizon", self.forecast_horizon),
            ("forecast_batch_size", self.forecast_batch_size),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return usage(format!("{name} must be positive"));
        }
        if self.min_count == 0 {
            return usage("min_count must be positive".into());
        }
        if !(self.day_lag <= self.week_lag && self.week_lag <= self.month_lag) {
            return usage("lags must satisfy day_lag <= week_lag <= month_lag".into());
        }
        for lr in [
            self.skipgram_learning_rate,
            self.ntn_learning_rate,
            self.learning_rate,
            self.forecast_learning_rate,
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return usage(format!("learning rate {lr} must be positive"));
            }
        }
        Ok(())
    }

    /// Input paths that must exist before a run starts.
    pub fn check_inputs(&self) -> Result<()> {
        let mut required = vec![&self.prices_dir, &self.headlines];
        required.extend(self.lexicon.iter());
        required.extend(self.verbs.iter());
        for p in required {
            if !p.exists() {
                return Err(CliError::data(format!("{}: no such file or directory", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_then_flags() {
        let text = "seed = 7\nepochs = 20\nmodel = \"short\"\nheadlines = \"h.tsv\"\n";
        let mut cfg = RunConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.model, ModelKind::Short);
        assert_eq!(cfg.headlines, PathBuf::from("/data/h.tsv"));
        assert_eq!(cfg.ratio, 0.7);
        cfg.apply(&Overrides {
            seed: Some(9),
            epochs: Some(3),
            ..Overrides::default()
        });
        assert_eq!((cfg.seed, cfg.epochs), (9, 3));
    }

    #[test]
    fn unknown_key_is_a_usage_error() {
        let err = RunConfig::parse("sede = 1\n", Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
