//! Partition of the word universe into consecutive lexicographic ranges.
//!
//! The universe of `alphabet^word_len` words is cut into ranges of at most
//! `capacity` words each. The default partition is computed from word ranks;
//! an explicit range table can be imported instead.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::sax::SaxWord;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MbrCatalog {
    word_len: usize,
    alphabet: usize,
    capacity: u128,
    universe: u128,
    table: Option<Vec<(SaxWord, SaxWord)>>,
}

impl MbrCatalog {
    pub fn new(word_len: usize, alphabet: usize, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("MBR capacity must be positive".into()));
        }
        if alphabet < 2 || word_len == 0 {
            return Err(Error::Config("catalog needs alphabet >= 2 and word length >= 1".into()));
        }
        let universe = (alphabet as u128).checked_pow(word_len as u32).ok_or_else(|| {
            Error::Config(format!("word universe {alphabet}^{word_len} does not fit in 128 bits"))
        })?;
        Ok(Self { word_len, alphabet, capacity: capacity as u128, universe, table: None })
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn capacity(&self) -> usize {
        self.capacity as usize
    }

    pub fn universe(&self) -> u128 {
        self.universe
    }

    pub fn range_count(&self) -> u128 {
        match &self.table {
            Some(t) => t.len() as u128,
            None => self.universe.div_ceil(self.capacity),
        }
    }

    /// 0-based lexicographic rank of `word` in the universe.
    pub fn rank(&self, word: &SaxWord) -> u128 {
        word.symbols().iter().fold(0u128, |acc, &s| acc * self.alphabet as u128 + s as u128)
    }

    pub fn unrank(&self, mut rank: u128) -> SaxWord {
        let a = self.alphabet as u128;
        let mut symbols = vec![0u8; self.word_len];
        for slot in symbols.iter_mut().rev() {
            *slot = (rank % a) as u8;
            rank /= a;
        }
        SaxWord::from_symbols(symbols)
    }

    fn check(&self, word: &SaxWord) -> Result<()> {
        if word.len() != self.word_len {
            return Err(Error::WordLength { expected: self.word_len, actual: word.len() });
        }
        if word.symbols().iter().any(|&s| s as usize >= self.alphabet) {
            return Err(Error::Config(format!("word {word} outside alphabet {}", self.alphabet)));
        }
        Ok(())
    }

    /// The unique `[lo, hi]` range covering `word`.
    pub fn lookup(&self, word: &SaxWord) -> Result<(SaxWord, SaxWord)> {
        self.check(word)?;
        if let Some(table) = &self.table {
            let i = table.partition_point(|(lo, _)| lo <= word) - 1;
            return Ok(table[i].clone());
        }
        Ok(self.range_at(self.rank(word) / self.capacity))
    }

    fn range_at(&self, idx: u128) -> (SaxWord, SaxWord) {
        let start = idx * self.capacity;
        let end = (start + self.capacity).min(self.universe) - 1;
        (self.unrank(start), self.unrank(end))
    }

    /// Every range in lexicographic order.
    pub fn ranges(&self) -> Box<dyn Iterator<Item = (SaxWord, SaxWord)> + '_> {
        match &self.table {
            Some(t) => Box::new(t.iter().cloned()),
            None => Box::new((0..self.range_count()).map(|i| self.range_at(i))),
        }
    }

    /// Writes `lo<TAB>hi` lines in range order.
    pub fn export<W: Write>(&self, mut out: W) -> Result<()> {
        for (lo, hi) in self.ranges() {
            writeln!(out, "{lo}\t{hi}")?;
        }
        Ok(())
    }

    /// Reads a range table; it must tile the universe with ranges of at most
    /// `capacity` words.
    pub fn import<R: BufRead>(input: R, word_len: usize, alphabet: usize, capacity: usize) -> Result<Self> {
        let mut cat = Self::new(word_len, alphabet, capacity)?;
        let mut table = Vec::new();
        let mut expect: u128 = 0;
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Catalog(format!("line {}: {msg}", n + 1));
            let (lo, hi) = line.split_once('\t').ok_or_else(|| bad("expected lo<TAB>hi".into()))?;
            let lo = SaxWord::from_letters(lo.trim(), alphabet).map_err(|e| bad(e.to_string()))?;
            let hi = SaxWord::from_letters(hi.trim(), alphabet).map_err(|e| bad(e.to_string()))?;
            cat.check(&lo).map_err(|e| bad(e.to_string()))?;
            cat.check(&hi).map_err(|e| bad(e.to_string()))?;
            let (rl, rh) = (cat.rank(&lo), cat.rank(&hi));
            if rl != expect {
                return Err(bad(format!("range starting at {lo} leaves a gap or overlap")));
            }
            if rh < rl || rh - rl + 1 > cat.capacity {
                return Err(bad(format!("range [{lo}, {hi}] is empty or exceeds capacity {capacity}")));
            }
            expect = rh + 1;
            table.push((lo, hi));
        }
        if expect != cat.universe {
            return Err(Error::Catalog("ranges do not cover the whole universe".into()));
        }
        cat.table = Some(table);
        Ok(cat)
    }
}
