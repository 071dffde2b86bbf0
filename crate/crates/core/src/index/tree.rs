use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::index::catalog::MbrCatalog;
use crate::index::mbr::{Mbr, MbrInsert};
use crate::prune::PruneMode;
use crate::sax::{SaxConfig, SaxWord, SymbolEnvelope};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    /// Maximum number of children per node (`m`).
    pub order: usize,
    /// Maximum distinct words per MBR (`c`).
    pub mbr_capacity: usize,
    /// Height that triggers pruning once exceeded (`htree`).
    pub max_height: usize,
    /// Pruning threshold (`tmpTh`).
    pub prune_threshold: u64,
    pub prune_mode: PruneMode,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            order: 16,
            mbr_capacity: 64,
            max_height: 6,
            prune_threshold: 1,
            prune_mode: PruneMode::Absolute,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.order < 3 {
            return Err(Error::Config(format!("tree order must be at least 3, got {}", self.order)));
        }
        if self.mbr_capacity == 0 {
            return Err(Error::Config("MBR capacity must be positive".into()));
        }
        if self.max_height == 0 {
            return Err(Error::Config("maximum height must be at least 1".into()));
        }
        Ok(())
    }

    pub fn min_children(&self) -> usize {
        self.order.div_ceil(2)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Node {
    elements: Vec<Mbr>,
    children: Vec<Node>,
}

impl Node {
    pub fn elements(&self) -> &[Mbr] {
        &self.elements
    }

    pub fn children(&self) -> &[Node] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// B-tree of order `m` whose elements are MBRs keyed by their low word.
#[derive(Debug, Clone)]
pub struct BsTree {
    root: Node,
    params: TreeParams,
    sax: SaxConfig,
    catalog: MbrCatalog,
    clock: u64,
    height: usize,
    elements: usize,
}

impl BsTree {
    pub fn new(sax: SaxConfig, params: TreeParams) -> Result<Self> {
        params.validate()?;
        let catalog = MbrCatalog::new(sax.word_len(), sax.alphabet(), params.mbr_capacity)?;
        Ok(Self::from_parts(sax, params, catalog))
    }

    /// Uses an explicit catalog, e.g. one imported from a range file.
    pub fn with_catalog(sax: SaxConfig, params: TreeParams, catalog: MbrCatalog) -> Result<Self> {
        params.validate()?;
        if catalog.word_len() != sax.word_len()
            || catalog.alphabet() != sax.alphabet()
            || catalog.capacity() != params.mbr_capacity
        {
            return Err(Error::Config("catalog does not match the SAX configuration".into()));
        }
        Ok(Self::from_parts(sax, params, catalog))
    }

    fn from_parts(sax: SaxConfig, params: TreeParams, catalog: MbrCatalog) -> Self {
        Self { root: Node::default(), params, sax, catalog, clock: 0, height: 0, elements: 0 }
    }

    /// An empty tree with the same configuration.
    pub fn empty_like(&self) -> Self {
        Self::from_parts(self.sax.clone(), self.params, self.catalog.clone())
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut TreeParams {
        &mut self.params
    }

    pub fn sax(&self) -> &SaxConfig {
        &self.sax
    }

    pub fn catalog(&self) -> &MbrCatalog {
        &self.catalog
    }

    /// Number of levels; 0 for an empty tree.
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn element_count(&self) -> usize {
        self.elements
    }

    pub fn is_empty(&self) -> bool {
        self.elements == 0
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub(crate) fn advance_clock(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    pub fn find_covering(&self, word: &SaxWord) -> Option<&Mbr> {
        let mut node = &self.root;
        loop {
            let i = node.elements.partition_point(|e| e.lo() <= word);
            if i > 0 && node.elements[i - 1].hi() >= word {
                return Some(&node.elements[i - 1]);
            }
            if node.is_leaf() {
                return None;
            }
            node = &node.children[i];
        }
    }

    fn find_covering_mut(&mut self, word: &SaxWord) -> Option<&mut Mbr> {
        let mut node = &mut self.root;
        loop {
            let i = node.elements.partition_point(|e| e.lo() <= word);
            if i > 0 && node.elements[i - 1].hi() >= word {
                return Some(&mut node.elements[i - 1]);
            }
            if node.is_leaf() {
                return None;
            }
            node = &mut node.children[i];
        }
    }

    /// Standard B-tree insertion keyed by `mbr.lo`; returns the new height.
    ///
    /// A median promoted out of a split node takes the largest timestamp
    /// among that node's elements.
    pub fn index_insert(&mut self, mbr: Mbr) -> Result<usize> {
        if mbr.lo().len() != self.sax.word_len() {
            return Err(Error::WordLength { expected: self.sax.word_len(), actual: mbr.lo().len() });
        }
        let order = self.params.order;
        if let Some((median, right)) = insert_rec(&mut self.root, mbr, order)? {
            let left = std::mem::take(&mut self.root);
            self.root = Node { elements: vec![median], children: vec![left, right] };
            self.height += 1;
        }
        if self.height == 0 {
            self.height = 1;
        }
        self.elements += 1;
        Ok(self.height)
    }

    /// Adds one stream feature: into the covering MBR when indexed, otherwise
    /// into a fresh MBR taken from the catalog. Returns the current height.
    pub fn insert_feature(&mut self, word: &SaxWord, window_id: u64) -> Result<usize> {
        if word.len() != self.sax.word_len() {
            return Err(Error::WordLength { expected: self.sax.word_len(), actual: word.len() });
        }
        if let Some(mbr) = self.find_covering_mut(word) {
            mbr.insert(word, window_id)?;
            return Ok(self.height);
        }
        let (lo, hi) = self.catalog.lookup(word)?;
        let mut mbr = Mbr::new(lo, hi, self.params.mbr_capacity)?;
        let inserted = mbr.insert(word, window_id)?;
        debug_assert_eq!(inserted, MbrInsert::Inserted);
        mbr.set_ts(0);
        self.index_insert(mbr)
    }

    /// Elements in depth-first order: a node's elements left to right, then
    /// its subtrees left to right.
    pub fn preorder(&self) -> Vec<&Mbr> {
        fn walk<'a>(node: &'a Node, out: &mut Vec<&'a Mbr>) {
            out.extend(node.elements.iter());
            for c in &node.children {
                walk(c, out);
            }
        }
        let mut out = Vec::with_capacity(self.elements);
        walk(&self.root, &mut out);
        out
    }

    pub(crate) fn into_preorder(self) -> Vec<Mbr> {
        fn walk(node: Node, out: &mut Vec<Mbr>) {
            out.extend(node.elements);
            for c in node.children {
                walk(c, out);
            }
        }
        let mut out = Vec::with_capacity(self.elements);
        walk(self.root, &mut out);
        out
    }

    /// Elements in key order.
    pub fn in_order(&self) -> Vec<&Mbr> {
        fn walk<'a>(node: &'a Node, out: &mut Vec<&'a Mbr>) {
            for (i, e) in node.elements.iter().enumerate() {
                if let Some(c) = node.children.get(i) {
                    walk(c, out);
                }
                out.push(e);
            }
            if let Some(c) = node.children.last() {
                if !node.is_leaf() {
                    walk(c, out);
                }
            }
        }
        let mut out = Vec::with_capacity(self.elements);
        walk(&self.root, &mut out);
        out
    }

    /// Flattened `word -> postings` view of the whole index.
    pub fn word_postings(&self) -> BTreeMap<SaxWord, Vec<u64>> {
        self.in_order()
            .into_iter()
            .flat_map(|e| e.members().iter().map(|m| (m.word.clone(), m.postings.clone())))
            .collect()
    }

    pub fn word_count(&self) -> usize {
        self.in_order().iter().map(|e| e.members().len()).sum()
    }

    /// Preorder rendering, one node per line, indented by depth:
    /// `[lo..hi n=<members> ts=<ts>]` per element.
    pub fn dump(&self) -> String {
        fn walk(node: &Node, depth: usize, out: &mut String) {
            out.push_str(&"  ".repeat(depth));
            let parts: Vec<String> = node
                .elements
                .iter()
                .map(|e| format!("[{}..{} n={} ts={}]", e.lo(), e.hi(), e.members().len(), e.ts()))
                .collect();
            out.push_str(&parts.join(" "));
            out.push('\n');
            for c in &node.children {
                walk(c, depth + 1, out);
            }
        }
        let mut out = String::new();
        let _ = writeln!(
            out,
            "height={} elements={} clock={}",
            self.height, self.elements, self.clock
        );
        if !self.is_empty() {
            walk(&self.root, 0, &mut out);
        }
        out
    }

    /// Checks every structural invariant; the error names the first failure.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut leaf_depth = None;
        let mut count = 0usize;
        check_node(self, &self.root, 0, true, &mut leaf_depth, &mut count)?;
        if count != self.elements {
            return Err(format!("element count {count} != cached {}", self.elements));
        }
        let expected_height = if self.elements == 0 { 0 } else { leaf_depth.unwrap_or(0) + 1 };
        if expected_height != self.height {
            return Err(format!("height {} != leaf depth + 1 = {expected_height}", self.height));
        }
        let seq = self.in_order();
        for pair in seq.windows(2) {
            if pair[0].hi() >= pair[1].lo() {
                return Err(format!(
                    "ranges out of order: [{}, {}] then [{}, {}]",
                    pair[0].lo(),
                    pair[0].hi(),
                    pair[1].lo(),
                    pair[1].hi()
                ));
            }
        }
        Ok(())
    }
}

fn insert_rec(node: &mut Node, mbr: Mbr, order: usize) -> Result<Option<(Mbr, Node)>> {
    let i = node.elements.partition_point(|e| e.lo() < mbr.lo());
    if let Some(e) = node.elements.get(i) {
        if e.lo() == mbr.lo() {
            return Err(Error::DuplicateKey { lo: mbr.lo().to_string(), hi: mbr.hi().to_string() });
        }
    }
    let overlaps_prev = i > 0 && node.elements[i - 1].hi() >= mbr.lo();
    let overlaps_next = node.elements.get(i).is_some_and(|e| e.lo() <= mbr.hi());
    if overlaps_prev || overlaps_next {
        return Err(Error::OverlappingRange { lo: mbr.lo().to_string(), hi: mbr.hi().to_string() });
    }

    if node.is_leaf() {
        node.elements.insert(i, mbr);
    } else if let Some((median, right)) = insert_rec(&mut node.children[i], mbr, order)? {
        node.elements.insert(i, median);
        node.children.insert(i + 1, right);
    }

    if node.elements.len() < order {
        return Ok(None);
    }
    let ts = node.elements.iter().map(Mbr::ts).max().unwrap_or(0);
    let mid = node.elements.len() / 2;
    let right_elements = node.elements.split_off(mid + 1);
    let median = node.elements.pop().expect("split of a full node");
    median.set_ts(ts);
    let right_children = if node.is_leaf() { Vec::new() } else { node.children.split_off(mid + 1) };
    Ok(Some((median, Node { elements: right_elements, children: right_children })))
}

fn check_node(
    tree: &BsTree,
    node: &Node,
    depth: usize,
    is_root: bool,
    leaf_depth: &mut Option<usize>,
    count: &mut usize,
) -> std::result::Result<(), String> {
    let m = tree.params.order;
    let min_children = tree.params.min_children();
    let k = node.elements.len();
    *count += k;

    if k > m - 1 {
        return Err(format!("node at depth {depth} holds {k} elements, max {}", m - 1));
    }
    if node.is_leaf() {
        if !is_root && k < min_children - 1 {
            return Err(format!("leaf at depth {depth} holds {k} elements, min {}", min_children - 1));
        }
        match *leaf_depth {
            None => *leaf_depth = Some(depth),
            Some(d) if d != depth => return Err(format!("leaves at depths {d} and {depth}")),
            _ => {}
        }
    } else {
        let nc = node.children.len();
        if nc != k + 1 {
            return Err(format!("internal node at depth {depth}: {nc} children for {k} elements"));
        }
        if is_root && nc < 2 {
            return Err("internal root with fewer than two children".into());
        }
        if !is_root && nc < min_children {
            return Err(format!("internal node at depth {depth} has {nc} children, min {min_children}"));
        }
    }
    if k > 1 && node.elements.windows(2).any(|p| p[0].lo() >= p[1].lo()) {
        return Err(format!("node at depth {depth} not sorted by low word"));
    }

    for e in &node.elements {
        check_mbr(tree, e)?;
    }
    for c in &node.children {
        check_node(tree, c, depth + 1, false, leaf_depth, count)?;
    }
    Ok(())
}

fn check_mbr(tree: &BsTree, e: &Mbr) -> std::result::Result<(), String> {
    let label = || format!("[{}, {}]", e.lo(), e.hi());
    match tree.catalog.lookup(e.lo()) {
        Ok((lo, hi)) if lo == *e.lo() && hi == *e.hi() => {}
        _ => return Err(format!("MBR {} is not a catalog range", label())),
    }
    let members = e.members();
    if members.is_empty() {
        return Err(format!("MBR {} is empty", label()));
    }
    if members.len() > tree.params.mbr_capacity {
        return Err(format!("MBR {} exceeds capacity", label()));
    }
    if members.windows(2).any(|p| p[0].word >= p[1].word) {
        return Err(format!("MBR {} members not strictly ascending", label()));
    }
    if members.iter().any(|m| !e.covers(&m.word) || m.postings.is_empty()) {
        return Err(format!("MBR {} has an out-of-range or posting-less member", label()));
    }
    let mut env = SymbolEnvelope::of_word(&members[0].word);
    members.iter().for_each(|m| env.extend(&m.word));
    if e.envelope() != Some(&env) {
        return Err(format!("MBR {} envelope is not the member envelope", label()));
    }
    Ok(())
}
