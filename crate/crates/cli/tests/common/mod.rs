#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn run(args: &[&str]) -> i32 {
    let mut all = vec!["stockevents"];
    all.extend_from_slice(args);
    stockevents::run_cli(all)
}

pub fn run_in(config: &Path, command: &str, extra: &[&str]) -> i32 {
    let cfg = config.to_str().unwrap();
    let mut args = vec![command, "--config", cfg];
    args.extend_from_slice(extra);
    run(&args)
}

pub fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2013, 1, 1).unwrap()
}

pub fn weekdays(n: usize) -> Vec<NaiveDate> {
    (0..)
        .map(|i| start().checked_add_days(Days::new(i)).unwrap())
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(n)
        .collect()
}

/// CSV with constant intraday range around the given closes.
pub fn price_csv(dates: &[NaiveDate], closes: &[f64]) -> String {
    let mut out = String::from("date,open,high,low,close,volume\n");
    for (i, (d, c)) in dates.iter().zip(closes).enumerate() {
        out.push_str(&format!("{d},{c},{},{},{c},{}\n", c + 1.0, c - 1.0, 1000 + i));
    }
    out
}

pub fn random_walk(n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut c = 100.0;
    (0..n)
        .map(|_| {
            c += r.gen_range(-2.0..2.0f64);
            (c * 100.0).round() / 100.0
        })
        .collect()
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("prices")).unwrap();
        Workspace { dir }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn write(&self, rel: &str, text: &str) -> PathBuf {
        let p = self.path(rel);
        fs::write(&p, text).unwrap();
        p
    }

    pub fn read(&self, rel: &str) -> String {
        fs::read_to_string(self.path(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
    }

    /// Config pointing at `prices/`, `headlines.tsv` and `out/`, plus `extra` lines.
    pub fn config(&self, extra: &str) -> PathBuf {
        self.write("config.toml", &format!("seed = 5\n{extra}\n"))
    }
}
