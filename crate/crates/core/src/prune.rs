//! Least-recently-visited pruning and the incremental build loop.
//!
//! Every element carries the logical clock value of its last query visit.
//! Pruning walks the elements depth-first (a node's elements left to right,
//! then its subtrees left to right) and judges each one against its
//! successor in that walk:
//!
//! * `ts >= threshold`: kept.
//! * `ts < threshold` and `ts < successor ts`: kept as a bridge.
//! * otherwise: pruned. The last element has no successor and cannot bridge.
//!
//! Kept elements are reinserted, in walk order, into a fresh tree whose
//! timestamps and clock start at zero.

use std::borrow::Borrow;
use std::fmt;

use log::warn;

use crate::error::Result;
use crate::index::{BsTree, Mbr};
use crate::sax::SaxWord;
use crate::stream::WindowRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PruneMode {
    /// `ts` is compared directly against the threshold.
    #[default]
    Absolute,
    /// An element is fresh when `clock - ts <= threshold`.
    Age,
}

impl PruneMode {
    /// Absolute timestamp below which an element is stale.
    pub fn threshold(self, tmp_th: u64, clock: u64) -> u64 {
        match self {
            PruneMode::Absolute => tmp_th,
            PruneMode::Age => clock.saturating_sub(tmp_th),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Bridge,
    Prune,
}

pub fn verdict(ts: u64, successor: Option<u64>, threshold: u64) -> Verdict {
    if ts >= threshold {
        Verdict::Keep
    } else if successor.is_some_and(|next| ts < next) {
        Verdict::Bridge
    } else {
        Verdict::Prune
    }
}

/// Records a query visit.
pub fn touch(element: &Mbr, clock: u64) {
    element.set_ts(clock);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PruneReport {
    pub clock: u64,
    pub visited: usize,
    pub kept: usize,
    pub pruned: usize,
    pub bridges: usize,
    pub old_height: usize,
    pub new_height: usize,
}

impl PruneReport {
    pub const CSV_HEADER: &'static str = "clock,visited,kept,pruned,bridges,old_height,new_height";
}

impl fmt::Display for PruneReport {
    /// One CSV row in [`PruneReport::CSV_HEADER`] order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.clock, self.visited, self.kept, self.pruned, self.bridges, self.old_height, self.new_height
        )
    }
}

/// Prunes stale elements and rebuilds a balanced replacement tree.
pub fn lrv_prune(tree: BsTree, tmp_th: u64, mode: PruneMode) -> Result<(BsTree, PruneReport)> {
    let threshold = mode.threshold(tmp_th, tree.clock());
    let mut report = PruneReport {
        clock: tree.clock(),
        old_height: tree.height(),
        ..PruneReport::default()
    };
    let mut fresh = tree.empty_like();
    let elements = tree.into_preorder();
    let stamps: Vec<u64> = elements.iter().map(Mbr::ts).collect();
    report.visited = elements.len();

    for (i, element) in elements.into_iter().enumerate() {
        match verdict(stamps[i], stamps.get(i + 1).copied(), threshold) {
            Verdict::Prune => {
                report.pruned += 1;
                continue;
            }
            Verdict::Bridge => report.bridges += 1,
            Verdict::Keep => {}
        }
        report.kept += 1;
        element.set_ts(0);
        fresh.index_insert(element)?;
    }
    report.new_height = fresh.height();
    Ok((fresh, report))
}

/// Prunes `tree` in place using its own threshold parameters.
pub fn prune_in_place(tree: &mut BsTree) -> Result<PruneReport> {
    let params = *tree.params();
    let old = std::mem::replace(tree, tree.empty_like());
    let (fresh, report) = lrv_prune(old, params.prune_threshold, params.prune_mode)?;
    *tree = fresh;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedOutcome {
    /// Height at the end of the loop iteration.
    pub height: usize,
    pub prune: Option<PruneReport>,
    /// Set when pruning could not bring the height back under the limit.
    pub escaped: bool,
}

/// Drives insertion and pruning: insert while the height is within
/// `max_height`, prune when it is exceeded, then resume.
#[derive(Debug, Clone)]
pub struct IndexBuilder {
    tree: BsTree,
    slack: usize,
    prunes: Vec<PruneReport>,
    escapes: usize,
}

impl IndexBuilder {
    pub fn new(tree: BsTree) -> Self {
        Self { tree, slack: 0, prunes: Vec::new(), escapes: 0 }
    }

    pub fn tree(&self) -> &BsTree {
        &self.tree
    }

    /// Mutable access for interleaving queries with the build.
    pub fn tree_mut(&mut self) -> &mut BsTree {
        &mut self.tree
    }

    pub fn into_tree(self) -> BsTree {
        self.tree
    }

    pub fn prune_reports(&self) -> &[PruneReport] {
        &self.prunes
    }

    /// Times the no-progress escape raised the effective height limit.
    pub fn escapes(&self) -> usize {
        self.escapes
    }

    pub fn effective_max_height(&self) -> usize {
        self.tree.params().max_height + self.slack
    }

    /// One loop iteration: insert a feature and prune if the tree outgrew
    /// its height limit.
    pub fn feed(&mut self, word: &SaxWord, window_id: u64) -> Result<FeedOutcome> {
        let height = self.tree.insert_feature(word, window_id)?;
        if height <= self.effective_max_height() {
            return Ok(FeedOutcome { height, prune: None, escaped: false });
        }
        let report = self.prune()?;
        let max = self.tree.params().max_height;
        let escaped = report.new_height > max;
        if escaped {
            self.escapes += 1;
            self.slack = report.new_height - max;
            warn!(
                "pruning left height {} above limit {max}; raising the limit for this cycle",
                report.new_height
            );
        }
        Ok(FeedOutcome { height: self.tree.height(), prune: Some(report), escaped })
    }

    /// Forces a prune cycle regardless of height.
    pub fn prune(&mut self) -> Result<PruneReport> {
        let report = prune_in_place(&mut self.tree)?;
        self.slack = 0;
        self.prunes.push(report);
        Ok(report)
    }

    /// Consumes the whole feature source.
    pub fn build_index<I, R>(&mut self, features: I) -> Result<()>
    where
        I: IntoIterator<Item = Result<R>>,
        R: Borrow<WindowRecord>,
    {
        for feature in features {
            let feature = feature?;
            let rec = feature.borrow();
            self.feed(&rec.word, rec.window_id)?;
        }
        Ok(())
    }
}
