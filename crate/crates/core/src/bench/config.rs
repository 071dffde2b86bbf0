use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::index::TreeParams;
use crate::prune::PruneMode;
use crate::query::QueryMode;
use crate::sax::DEFAULT_WORD_LEN;
use crate::stream::SynthKind;

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    File { path: PathBuf, drop_first_column: bool },
    Synthetic(SynthKind),
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dataset::File { path, .. } => write!(f, "file:{}", path.display()),
            Dataset::Synthetic(SynthKind::RandomWalk) => f.write_str("synthetic:walk"),
            Dataset::Synthetic(SynthKind::SineWithNoise) => f.write_str("synthetic:sine"),
        }
    }
}

/// Query workload: noisy copies of a "hot" subset of archived windows,
/// optionally mixed with pure random-walk patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub query_count: usize,
    /// Per-point Gaussian noise added to a normalized source window.
    pub noise: f64,
    /// Fraction of archived windows queries are drawn from.
    pub hot_fraction: f64,
    /// Fraction of queries that are random patterns instead.
    pub random_fraction: f64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self { query_count: 50, noise: 0.01, hot_fraction: 0.2, random_fraction: 0.0 }
    }
}

impl fmt::Display for WorkloadSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "queries={} noise={} hot_fraction={} random_fraction={}",
            self.query_count, self.noise, self.hot_fraction, self.random_fraction
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Dataset,
    /// Basic window size, the SAX window length.
    pub tw: usize,
    /// Number of windows to index.
    pub nw: usize,
    pub slide: usize,
    pub word_len: usize,
    pub alphas: Vec<usize>,
    pub tree: TreeParams,
    pub radii: Vec<f64>,
    pub mode: QueryMode,
    pub workload: WorkloadSpec,
    pub seed: u64,
    /// Record wall-clock query latency in the report.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: Dataset::Synthetic(SynthKind::RandomWalk),
            tw: 512,
            nw: 3600,
            slide: 512,
            word_len: DEFAULT_WORD_LEN,
            alphas: vec![4, 6, 8],
            tree: TreeParams::default(),
            radii: (1..=10).map(|i| i as f64 / 10.0).collect(),
            mode: QueryMode::Approximate,
            workload: WorkloadSpec::default(),
            seed: 1,
            timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.tw == 0 || self.nw == 0 || self.slide == 0 || self.slide > self.tw {
            return bad("tw, nw must be positive and 1 <= slide <= tw");
        }
        if self.alphas.is_empty() || self.radii.is_empty() {
            return bad("at least one alphabet size and one radius are required");
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("radii must be positive");
        }
        if self.radii.windows(2).any(|p| p[0] >= p[1]) {
            return bad("radii must be sorted ascending without repeats");
        }
        let w = &self.workload;
        if w.query_count == 0 || !(w.noise >= 0.0 && w.noise.is_finite()) {
            return bad("query count must be positive and noise non-negative");
        }
        if !(w.hot_fraction > 0.0 && w.hot_fraction <= 1.0) || !(0.0..=1.0).contains(&w.random_fraction) {
            return bad("hot fraction must be in (0, 1] and random fraction in [0, 1]");
        }
        self.tree.validate()
    }
}

/// `key=value` settings, as read from a config file and overridden by flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

const KEYS: &[&str] = &[
    "dataset", "synthetic", "tw", "nw", "slide", "word-len", "alpha", "order", "mbr-cap", "htree",
    "tmpth", "age-mode", "radii", "mode", "queries", "noise", "hot-fraction", "random-fraction", "seed",
    "out", "drop-first-column", "timing",
];

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key=value", n + 1)))?;
            out.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = key.replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown setting {key:?}")));
        }
        self.0.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("invalid value {v:?} for {key}"))))
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None | Some("false") | Some("0") | Some("no") => Ok(false),
            Some("true") | Some("1") | Some("yes") | Some("") => Ok(true),
            Some(v) => Err(Error::Config(format!("invalid boolean {v:?} for {key}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse::<T>().map_err(|_| Error::Config(format!("invalid {key} entry {x:?}"))))
                    .collect()
            })
            .transpose()
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }

    /// Builds an experiment configuration on top of the defaults.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        let drop_first_column = self.flag("drop-first-column")?;
        match (self.get("dataset"), self.get("synthetic")) {
            (Some(_), Some(_)) => return Err(Error::Config("--dataset and --synthetic are exclusive".into())),
            (Some(path), None) => c.dataset = Dataset::File { path: PathBuf::from(path), drop_first_column },
            (None, Some("walk")) => c.dataset = Dataset::Synthetic(SynthKind::RandomWalk),
            (None, Some("sine")) => c.dataset = Dataset::Synthetic(SynthKind::SineWithNoise),
            (None, Some(other)) => return Err(Error::Config(format!("unknown synthetic kind {other:?}"))),
            (None, None) => {}
        }
        if let Some(tw) = self.parsed("tw")? {
            c.tw = tw;
            c.slide = tw;
        }
        if let Some(v) = self.parsed("nw")? {
            c.nw = v;
        }
        if let Some(v) = self.parsed("slide")? {
            c.slide = v;
        }
        if let Some(v) = self.parsed("word-len")? {
            c.word_len = v;
        }
        if let Some(v) = self.list("alpha")? {
            c.alphas = v;
        }
        if let Some(v) = self.parsed("order")? {
            c.tree.order = v;
        }
        if let Some(v) = self.parsed("mbr-cap")? {
            c.tree.mbr_capacity = v;
        }
        if let Some(v) = self.parsed("htree")? {
            c.tree.max_height = v;
        }
        if let Some(v) = self.parsed("tmpth")? {
            c.tree.prune_threshold = v;
        }
        if self.flag("age-mode")? {
            c.tree.prune_mode = PruneMode::Age;
        }
        if let Some(v) = self.list("radii")? {
            c.radii = v;
        }
        if let Some(v) = self.parsed("mode")? {
            c.mode = v;
        }
        if let Some(v) = self.parsed("queries")? {
            c.workload.query_count = v;
        }
        if let Some(v) = self.parsed("noise")? {
            c.workload.noise = v;
        }
        if let Some(v) = self.parsed("hot-fraction")? {
            c.workload.hot_fraction = v;
        }
        if let Some(v) = self.parsed("random-fraction")? {
            c.workload.random_fraction = v;
        }
        if let Some(v) = self.parsed("seed")? {
            c.seed = v;
        }
        c.timing = self.flag("timing")?;
        c.validate()?;
        Ok(c)
    }
}
