use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::sax::{SaxWord, SymbolEnvelope};

/// A distinct word and the windows it was observed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub word: SaxWord,
    pub postings: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbrInsert {
    Inserted,
    DuplicateAppended,
}

/// Lexicographic bucket of at most `capacity` distinct words in `[lo, hi]`.
///
/// The visit timestamp is atomic so read-only traversals can record visits.
#[derive(Debug)]
pub struct Mbr {
    lo: SaxWord,
    hi: SaxWord,
    members: Vec<Member>,
    envelope: Option<SymbolEnvelope>,
    ts: AtomicU64,
    capacity: usize,
}

impl Clone for Mbr {
    fn clone(&self) -> Self {
        Self {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            members: self.members.clone(),
            envelope: self.envelope.clone(),
            ts: AtomicU64::new(self.ts()),
            capacity: self.capacity,
        }
    }
}

impl Mbr {
    pub fn new(lo: SaxWord, hi: SaxWord, capacity: usize) -> Result<Self> {
        if lo > hi || lo.len() != hi.len() {
            return Err(Error::Config(format!("invalid MBR range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, members: Vec::new(), envelope: None, ts: AtomicU64::new(0), capacity })
    }

    pub fn lo(&self) -> &SaxWord {
        &self.lo
    }

    pub fn hi(&self) -> &SaxWord {
        &self.hi
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn envelope(&self) -> Option<&SymbolEnvelope> {
        self.envelope.as_ref()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn ts(&self) -> u64 {
        self.ts.load(Ordering::Relaxed)
    }

    pub fn set_ts(&self, ts: u64) {
        self.ts.store(ts, Ordering::Relaxed);
    }

    pub fn covers(&self, word: &SaxWord) -> bool {
        self.lo <= *word && *word <= self.hi
    }

    pub fn postings(&self, word: &SaxWord) -> Option<&[u64]> {
        self.members
            .binary_search_by(|m| m.word.cmp(word))
            .ok()
            .map(|i| self.members[i].postings.as_slice())
    }

    pub fn posting_count(&self) -> usize {
        self.members.iter().map(|m| m.postings.len()).sum()
    }

    /// Inserts `word` at its sorted position, or appends `window_id` to the
    /// postings of an existing member.
    pub fn insert(&mut self, word: &SaxWord, window_id: u64) -> Result<MbrInsert> {
        if !self.covers(word) {
            return Err(Error::RangeViolation {
                word: word.to_string(),
                lo: self.lo.to_string(),
                hi: self.hi.to_string(),
            });
        }
        match self.members.binary_search_by(|m| m.word.cmp(word)) {
            Ok(i) => {
                self.members[i].postings.push(window_id);
                Ok(MbrInsert::DuplicateAppended)
            }
            Err(i) => {
                if self.members.len() >= self.capacity {
                    return Err(Error::CapacityExceeded { capacity: self.capacity });
                }
                self.members.insert(i, Member { word: word.clone(), postings: vec![window_id] });
                match &mut self.envelope {
                    Some(env) => env.extend(word),
                    None => self.envelope = Some(SymbolEnvelope::of_word(word)),
                }
                Ok(MbrInsert::Inserted)
            }
        }
    }
}
