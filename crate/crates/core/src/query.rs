//! Range similarity queries.
//!
//! A query pattern is z-normalized and reduced to a SAX word. The descent
//! skips a subtree when the lexicographic range it spans is provably farther
//! than the radius, enters an element when its symbol envelope is within the
//! radius (recording the visit), and admits member words whose MinDist is
//! within the radius. Approximate mode returns the admitted postings; exact
//! mode re-checks each against the archived normalized window.

use std::collections::BTreeSet;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::index::{BsTree, Mbr, Member, Node};
use crate::prune::touch;
use crate::sax::{self, euclidean, sax_transform, SaxConfig, SaxWord, SymbolEnvelope};
use crate::stream::{ArchiveLookup, WindowArchive};

/// Absorbs rounding when comparing a lower bound against the radius.
const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryMode {
    #[default]
    Approximate,
    Exact,
}

impl QueryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryMode::Approximate => "approximate",
            QueryMode::Exact => "exact",
        }
    }
}

impl FromStr for QueryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approximate" | "approx" => Ok(QueryMode::Approximate),
            "exact" => Ok(QueryMode::Exact),
            other => Err(Error::Config(format!("unknown query mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeQuery {
    pub pattern: Vec<f64>,
    pub radius: f64,
    pub mode: QueryMode,
}

impl RangeQuery {
    pub fn new(pattern: Vec<f64>, radius: f64, mode: QueryMode) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::Config(format!("radius must be finite and non-negative, got {radius}")));
        }
        Ok(Self { pattern, radius, mode })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryResult {
    /// Window ids: candidate postings (approximate) or verified matches (exact).
    pub matches: BTreeSet<u64>,
    /// Admitted member words with their postings.
    pub candidates: Vec<Member>,
    /// Candidate windows no longer in the archive (exact mode only).
    pub unverifiable: Vec<u64>,
    pub candidates_examined: usize,
    pub elements_visited: usize,
    pub nodes_visited: usize,
    pub elapsed: Duration,
}

/// Runs `query`, recording a visit on every entered element.
pub fn range_search(tree: &mut BsTree, query: &RangeQuery, archive: &WindowArchive) -> Result<QueryResult> {
    check_query(tree.sax(), query)?;
    let clock = tree.advance_clock();
    search(tree, query, archive, Some(clock))
}

/// Runs `query` without touching timestamps or the clock.
pub fn range_search_untouched(tree: &BsTree, query: &RangeQuery, archive: &WindowArchive) -> Result<QueryResult> {
    check_query(tree.sax(), query)?;
    search(tree, query, archive, None)
}

fn check_query(cfg: &SaxConfig, query: &RangeQuery) -> Result<()> {
    if query.pattern.len() != cfg.window_len() {
        return Err(Error::Shape { expected: cfg.window_len(), actual: query.pattern.len() });
    }
    if !(query.radius.is_finite() && query.radius >= 0.0) {
        return Err(Error::Config(format!("radius must be finite and non-negative, got {}", query.radius)));
    }
    Ok(())
}

struct Search<'a> {
    cfg: &'a SaxConfig,
    word: SaxWord,
    radius: f64,
    clock: Option<u64>,
    result: QueryResult,
}

impl Search<'_> {
    fn within(&self, env: &SymbolEnvelope) -> bool {
        sax::mindist_envelope_unchecked(&self.word, env, self.cfg) <= self.radius + BOUND_SLACK
    }

    fn visit_element(&mut self, e: &Mbr) {
        let Some(env) = e.envelope() else { return };
        if !self.within(env) {
            return;
        }
        if let Some(clock) = self.clock {
            touch(e, clock);
        }
        self.result.elements_visited += 1;
        for m in e.members() {
            if sax::mindist_unchecked(&self.word, &m.word, self.cfg) <= self.radius + BOUND_SLACK {
                self.result.candidates.push(m.clone());
            }
        }
    }

    fn visit_node(&mut self, node: &Node, lower: &SaxWord, upper: &SaxWord) {
        self.result.nodes_visited += 1;
        for e in node.elements() {
            self.visit_element(e);
        }
        let k = node.elements().len();
        for (i, child) in node.children().iter().enumerate() {
            let lo = if i == 0 { lower } else { node.elements()[i - 1].hi() };
            let hi = if i == k { upper } else { node.elements()[i].lo() };
            if self.within(&SymbolEnvelope::of_range(lo, hi, self.cfg.alphabet())) {
                self.visit_node(child, lo, hi);
            }
        }
    }
}

fn search(tree: &BsTree, query: &RangeQuery, archive: &WindowArchive, clock: Option<u64>) -> Result<QueryResult> {
    let start = Instant::now();
    let cfg = tree.sax();
    let (word, normalized) = sax_transform(&query.pattern, cfg)?;
    let mut s = Search { cfg, word, radius: query.radius, clock, result: QueryResult::default() };

    if !tree.is_empty() {
        let l = cfg.word_len();
        let lower = SaxWord::from_symbols(vec![0u8; l]);
        let upper = SaxWord::from_symbols(vec![(cfg.alphabet() - 1) as u8; l]);
        s.visit_node(tree.root(), &lower, &upper);
    }

    let mut result = s.result;
    let ids = result.candidates.iter().flat_map(|m| m.postings.iter().copied());
    match query.mode {
        QueryMode::Approximate => {
            result.matches = ids.collect();
            result.candidates_examined = result.matches.len();
        }
        QueryMode::Exact => {
            let ids: BTreeSet<u64> = ids.collect();
            result.candidates_examined = ids.len();
            for id in ids {
                match archive.get(id) {
                    ArchiveLookup::Found(rec) => {
                        if rec.normalized.values.len() != normalized.values.len() {
                            return Err(Error::Config(format!(
                                "archived window {id} has length {}, query has {}",
                                rec.normalized.values.len(),
                                normalized.values.len()
                            )));
                        }
                        if euclidean(&normalized.values, &rec.normalized.values) <= query.radius {
                            result.matches.insert(id);
                        }
                    }
                    ArchiveLookup::Evicted | ArchiveLookup::Unknown => result.unverifiable.push(id),
                }
            }
        }
    }
    result.elapsed = start.elapsed();
    Ok(result)
}

/// `(precision, recall)`; an empty result has precision 1 and an empty
/// truth set has recall 1.
pub fn precision_recall(result: &BTreeSet<u64>, truth: &BTreeSet<u64>) -> (f64, f64) {
    let hits = result.intersection(truth).count() as f64;
    let precision = if result.is_empty() { 1.0 } else { hits / result.len() as f64 };
    let recall = if truth.is_empty() { 1.0 } else { hits / truth.len() as f64 };
    (precision, recall)
}

/// Parses one batch line: `radius<TAB>v1,v2,...`.
pub fn parse_query_line(line: &str, mode: QueryMode) -> Result<RangeQuery> {
    let (r, values) = line
        .split_once('\t')
        .ok_or_else(|| Error::Config("query line must be radius<TAB>values".into()))?;
    let radius: f64 = r.trim().parse().map_err(|_| Error::Config(format!("bad radius {r:?}")))?;
    let pattern = values
        .split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Config(format!("bad pattern value {v:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    RangeQuery::new(pattern, radius, mode)
}

pub const RESULT_CSV_HEADER: &str = "query_index,mode,matches,candidates,nodes_visited,elapsed_us";

pub fn result_csv_row(index: usize, mode: QueryMode, r: &QueryResult) -> String {
    format!(
        "{index},{},{},{},{},{}",
        mode.as_str(),
        r.matches.len(),
        r.candidates_examined,
        r.nodes_visited,
        r.elapsed.as_micros()
    )
}
