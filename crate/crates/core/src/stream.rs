//! Sliding-window feature extraction over a point stream.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sax::{sax_transform, NormalizedWindow, SaxConfig, SaxWord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamPoint {
    pub seq: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    len: usize,
    slide: usize,
}

impl WindowSpec {
    pub fn new(len: usize, slide: usize) -> Result<Self> {
        if len == 0 || slide == 0 || slide > len {
            return Err(Error::Config(format!(
                "window spec requires 1 <= slide <= len, got len={len} slide={slide}"
            )));
        }
        Ok(Self { len, slide })
    }

    /// Non-overlapping windows.
    pub fn tumbling(len: usize) -> Result<Self> {
        Self::new(len, len)
    }

    pub fn window_len(&self) -> usize {
        self.len
    }

    pub fn slide(&self) -> usize {
        self.slide
    }

    /// Windows emitted by a stream of `n` points.
    pub fn emissions(&self, n: usize) -> usize {
        if n < self.len {
            0
        } else {
            (n - self.len) / self.slide + 1
        }
    }

    /// Points needed to emit `windows` windows.
    pub fn points_for(&self, windows: usize) -> usize {
        if windows == 0 {
            0
        } else {
            (windows - 1) * self.slide + self.len
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub window_id: u64,
    pub start_seq: u64,
    pub normalized: NormalizedWindow,
    pub word: SaxWord,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArchiveLookup {
    Found(Arc<WindowRecord>),
    Evicted,
    Unknown,
}

#[derive(Debug, Default)]
struct ArchiveInner {
    first_id: u64,
    records: VecDeque<Arc<WindowRecord>>,
}

/// Append-only window store with oldest-first eviction.
///
/// Records are appended with consecutive ids. Readers share the lock, and a
/// record becomes visible only once fully inserted.
#[derive(Debug)]
pub struct WindowArchive {
    capacity: Option<usize>,
    inner: RwLock<ArchiveInner>,
}

impl Default for WindowArchive {
    fn default() -> Self {
        Self::unbounded()
    }
}

impl WindowArchive {
    pub fn unbounded() -> Self {
        Self { capacity: None, inner: RwLock::default() }
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self { capacity: Some(capacity.max(1)), inner: RwLock::default() }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn append(&self, record: Arc<WindowRecord>) -> Result<()> {
        let mut inner = self.inner.write().expect("archive lock poisoned");
        let next = inner.first_id + inner.records.len() as u64;
        if inner.records.is_empty() {
            inner.first_id = record.window_id;
        } else if record.window_id != next {
            return Err(Error::Config(format!(
                "archive expects window id {next}, got {}",
                record.window_id
            )));
        }
        inner.records.push_back(record);
        if let Some(cap) = self.capacity {
            while inner.records.len() > cap {
                inner.records.pop_front();
                inner.first_id += 1;
            }
        }
        Ok(())
    }

    pub fn get(&self, window_id: u64) -> ArchiveLookup {
        let inner = self.inner.read().expect("archive lock poisoned");
        if window_id < inner.first_id {
            return ArchiveLookup::Evicted;
        }
        match inner.records.get((window_id - inner.first_id) as usize) {
            Some(r) => ArchiveLookup::Found(Arc::clone(r)),
            None => ArchiveLookup::Unknown,
        }
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("archive lock poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Snapshot of the retained records in id order.
    pub fn records(&self) -> Vec<Arc<WindowRecord>> {
        self.inner.read().expect("archive lock poisoned").records.iter().cloned().collect()
    }
}

/// Buffers points and emits one SAX feature per completed window.
#[derive(Debug)]
pub struct SlidingWindow {
    spec: WindowSpec,
    cfg: SaxConfig,
    buf: VecDeque<StreamPoint>,
    seen: u64,
    last_seq: Option<u64>,
    next_id: u64,
    archive: Arc<WindowArchive>,
}

impl SlidingWindow {
    pub fn new(spec: WindowSpec, cfg: SaxConfig, archive: Arc<WindowArchive>) -> Result<Self> {
        if spec.window_len() != cfg.window_len() {
            return Err(Error::Config(format!(
                "window length {} does not match SAX window length {}",
                spec.window_len(),
                cfg.window_len()
            )));
        }
        Ok(Self {
            spec,
            cfg,
            buf: VecDeque::with_capacity(spec.window_len()),
            seen: 0,
            last_seq: None,
            next_id: 0,
            archive,
        })
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    pub fn config(&self) -> &SaxConfig {
        &self.cfg
    }

    pub fn archive(&self) -> &Arc<WindowArchive> {
        &self.archive
    }

    /// Appends a point; returns the archived record when a window completes.
    pub fn push(&mut self, point: StreamPoint) -> Result<Option<Arc<WindowRecord>>> {
        if let Some(last) = self.last_seq {
            if point.seq <= last {
                return Err(Error::OutOfOrder { last, got: point.seq });
            }
        }
        self.last_seq = Some(point.seq);
        if self.buf.len() == self.spec.window_len() {
            self.buf.pop_front();
        }
        self.buf.push_back(point);
        self.seen += 1;

        let w = self.spec.window_len() as u64;
        if self.seen < w || !(self.seen - w).is_multiple_of(self.spec.slide() as u64) {
            return Ok(None);
        }
        let raw: Vec<f64> = self.buf.iter().map(|p| p.value).collect();
        let (word, normalized) = sax_transform(&raw, &self.cfg)?;
        let record = Arc::new(WindowRecord {
            window_id: self.next_id,
            start_seq: self.buf[0].seq,
            normalized,
            word,
        });
        self.next_id += 1;
        self.archive.append(Arc::clone(&record))?;
        Ok(Some(record))
    }

    /// Pushes `value` with the next sequence number.
    pub fn push_value(&mut self, value: f64) -> Result<Option<Arc<WindowRecord>>> {
        let seq = self.last_seq.map_or(0, |s| s + 1);
        self.push(StreamPoint { seq, value })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Drops the first token of every row (UCR class labels).
    pub drop_first_column: bool,
}

/// Reads a numeric stream: whitespace- or comma-separated reals, rows
/// flattened in order, `#` comment lines ignored.
pub fn read_stream_file(path: &Path, opts: ParseOptions) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    parse_stream(&text, opts).map_err(|(line, msg)| Error::Parse { path: path.to_path_buf(), line, msg })
}

fn parse_stream(text: &str, opts: ParseOptions) -> std::result::Result<Vec<f64>, (usize, String)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty());
        for tok in tokens.skip(usize::from(opts.drop_first_column)) {
            let v: f64 = tok.parse().map_err(|_| (i + 1, format!("not a number: {tok:?}")))?;
            if !v.is_finite() {
                return Err((i + 1, format!("non-finite value: {tok:?}")));
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// Iterator of features produced by pushing a fixed sequence of values.
pub struct Replay<I> {
    values: I,
    window: SlidingWindow,
}

impl<I: Iterator<Item = f64>> Iterator for Replay<I> {
    type Item = Result<Arc<WindowRecord>>;

    fn next(&mut self) -> Option<Self::Item> {
        for v in self.values.by_ref() {
            match self.window.push_value(v) {
                Ok(Some(rec)) => return Some(Ok(rec)),
                Ok(None) => {}
                Err(e) => return Some(Err(e)),
            }
        }
        None
    }
}

impl<I> Replay<I> {
    pub fn archive(&self) -> &Arc<WindowArchive> {
        self.window.archive()
    }
}

pub fn replay_values<I: IntoIterator<Item = f64>>(values: I, window: SlidingWindow) -> Replay<I::IntoIter> {
    Replay { values: values.into_iter(), window }
}

/// Parses `path` up front, then replays it through a fresh sliding window.
pub fn replay_file(
    path: &Path,
    spec: WindowSpec,
    cfg: SaxConfig,
    opts: ParseOptions,
    archive: Arc<WindowArchive>,
) -> Result<Replay<std::vec::IntoIter<f64>>> {
    let values = read_stream_file(path, opts)?;
    Ok(replay_values(values, SlidingWindow::new(spec, cfg, archive)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    RandomWalk,
    SineWithNoise,
}

/// Deterministic synthetic stream of `n` points.
///
/// Random walk: unit-variance Gaussian steps from 0. Sine: period 64,
/// amplitude 1, Gaussian noise with standard deviation 0.1.
pub fn synth_stream(kind: SynthKind, n: usize, seed: u64) -> impl Iterator<Item = StreamPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = 0.0f64;
    (0..n as u64).map(move |seq| {
        let z: f64 = rng.sample(StandardNormal);
        let value = match kind {
            SynthKind::RandomWalk => {
                level += z;
                level
            }
            SynthKind::SineWithNoise => {
                (std::f64::consts::TAU * seq as f64 / 64.0).sin() + 0.1 * z
            }
        };
        StreamPoint { seq, value }
    })
}
