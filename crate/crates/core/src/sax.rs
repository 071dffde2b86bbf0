//! Symbolic Aggregate approXimation.
//!
//! A window of `w` reals is z-normalized, reduced to `l` segment means (PAA),
//! and each mean is mapped to one of `alpha` letters using breakpoints that
//! split N(0, 1) into equiprobable cells. Letters are stored as 0-based cell
//! indices so that byte-wise comparison of words is lexicographic order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::normal;

pub const MIN_ALPHABET: usize = 2;
pub const MAX_ALPHABET: usize = 26;
pub const DEFAULT_WORD_LEN: usize = 8;
pub const DEFAULT_EPSILON_STD: f64 = 1e-12;

/// Parameters shared by every word produced for one index.
#[derive(Debug, Clone, PartialEq)]
pub struct SaxConfig {
    window_len: usize,
    word_len: usize,
    alphabet: usize,
    breakpoints: Vec<f64>,
    epsilon_std: f64,
}

impl SaxConfig {
    pub fn new(window_len: usize, word_len: usize, alphabet: usize) -> Result<Self> {
        if word_len == 0 || window_len == 0 {
            return Err(Error::Config("window and word length must be positive".into()));
        }
        if !window_len.is_multiple_of(word_len) {
            return Err(Error::Config(format!(
                "word length {word_len} must divide window length {window_len}"
            )));
        }
        Ok(Self {
            window_len,
            word_len,
            alphabet,
            breakpoints: breakpoints(alphabet)?,
            epsilon_std: DEFAULT_EPSILON_STD,
        })
    }

    pub fn with_epsilon_std(mut self, epsilon_std: f64) -> Result<Self> {
        if !(epsilon_std > 0.0 && epsilon_std.is_finite()) {
            return Err(Error::Config("epsilon_std must be a small positive real".into()));
        }
        self.epsilon_std = epsilon_std;
        Ok(self)
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn epsilon_std(&self) -> f64 {
        self.epsilon_std
    }

    /// Points per PAA segment.
    pub fn segment_len(&self) -> usize {
        self.window_len / self.word_len
    }

    /// Distance between two cells, zero when they are equal or adjacent.
    pub fn cell_dist(&self, a: u8, b: u8) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if hi - lo <= 1 {
            0.0
        } else {
            self.breakpoints[hi as usize - 1] - self.breakpoints[lo as usize]
        }
    }

    fn check_word(&self, word: &SaxWord) -> Result<()> {
        if word.len() != self.word_len {
            return Err(Error::WordLength { expected: self.word_len, actual: word.len() });
        }
        if let Some(&s) = word.symbols().iter().find(|&&s| s as usize >= self.alphabet) {
            return Err(Error::Config(format!(
                "symbol index {s} outside alphabet of size {}",
                self.alphabet
            )));
        }
        Ok(())
    }
}

/// Fixed-length word over `a..` letters, ordered lexicographically.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SaxWord(Box<[u8]>);

impl SaxWord {
    /// Builds a word from 0-based cell indices.
    pub fn from_symbols(symbols: impl Into<Box<[u8]>>) -> Self {
        Self(symbols.into())
    }

    /// Parses letters `a`..`z`; every letter must be below `alphabet`.
    pub fn from_letters(letters: &str, alphabet: usize) -> Result<Self> {
        let symbols = letters
            .bytes()
            .map(|b| {
                let idx = b.wrapping_sub(b'a');
                if b.is_ascii_lowercase() && (idx as usize) < alphabet {
                    Ok(idx)
                } else {
                    Err(Error::Config(format!(
                        "letter {:?} outside alphabet of size {alphabet}",
                        b as char
                    )))
                }
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self(symbols.into()))
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SaxWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in self.0.iter() {
            write!(f, "{}", (b'a' + s) as char)?;
        }
        Ok(())
    }
}

impl fmt::Debug for SaxWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SaxWord({self})")
    }
}

impl FromStr for SaxWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_letters(s, MAX_ALPHABET)
    }
}

/// Per-position `[min, max]` symbol bounds of a set of words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolEnvelope {
    min: Box<[u8]>,
    max: Box<[u8]>,
}

impl SymbolEnvelope {
    pub fn new(min: impl Into<Box<[u8]>>, max: impl Into<Box<[u8]>>) -> Result<Self> {
        let (min, max) = (min.into(), max.into());
        if min.len() != max.len() {
            return Err(Error::WordLength { expected: min.len(), actual: max.len() });
        }
        if let Some(i) = min.iter().zip(max.iter()).position(|(a, b)| a > b) {
            return Err(Error::InvalidEnvelope(i));
        }
        Ok(Self { min, max })
    }

    /// The degenerate envelope holding exactly `word`.
    pub fn of_word(word: &SaxWord) -> Self {
        Self { min: word.0.clone(), max: word.0.clone() }
    }

    /// Bounds every word `v` with `lo <= v <= hi` lexicographically.
    ///
    /// Positions before the first difference of `lo` and `hi` are fixed,
    /// the first differing position ranges over `[lo_k, hi_k]`, and later
    /// positions are unconstrained.
    pub fn of_range(lo: &SaxWord, hi: &SaxWord, alphabet: usize) -> Self {
        let top = (alphabet - 1) as u8;
        let mut min = lo.0.clone();
        let mut max = lo.0.clone();
        if let Some(k) = lo.0.iter().zip(hi.0.iter()).position(|(a, b)| a != b) {
            max[k] = hi.0[k];
            for j in k + 1..min.len() {
                min[j] = 0;
                max[j] = top;
            }
        }
        Self { min, max }
    }

    pub fn min(&self) -> &[u8] {
        &self.min
    }

    pub fn max(&self) -> &[u8] {
        &self.max
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    pub fn contains(&self, word: &SaxWord) -> bool {
        word.len() == self.len()
            && word.0.iter().enumerate().all(|(i, &s)| self.min[i] <= s && s <= self.max[i])
    }

    /// Grows the envelope to contain `word`.
    pub fn extend(&mut self, word: &SaxWord) {
        for (i, &s) in word.0.iter().enumerate() {
            self.min[i] = self.min[i].min(s);
            self.max[i] = self.max[i].max(s);
        }
    }
}

/// A z-normalized window together with the statistics of its source.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedWindow {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the source.
    pub std: f64,
}

/// Standard normal quantiles at `i / alpha`, `i = 1..alpha`.
pub fn breakpoints(alphabet: usize) -> Result<Vec<f64>> {
    if !(MIN_ALPHABET..=MAX_ALPHABET).contains(&alphabet) {
        return Err(Error::Config(format!(
            "alphabet size {alphabet} outside [{MIN_ALPHABET}, {MAX_ALPHABET}]"
        )));
    }
    let a = alphabet as f64;
    Ok((1..alphabet)
        .map(|i| {
            // exact antisymmetry: compute the lower half and mirror it
            let j = i.min(alphabet - i);
            let b = normal::inverse_cdf(j as f64 / a);
            if 2 * i == alphabet {
                0.0
            } else if i == j {
                b
            } else {
                -b
            }
        })
        .collect())
}

pub fn znormalize(raw: &[f64], cfg: &SaxConfig) -> Result<NormalizedWindow> {
    if raw.len() != cfg.window_len {
        return Err(Error::Shape { expected: cfg.window_len, actual: raw.len() });
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let values = if std <= cfg.epsilon_std {
        vec![0.0; raw.len()]
    } else {
        raw.iter().map(|x| (x - mean) / std).collect()
    };
    Ok(NormalizedWindow { values, mean, std })
}

pub fn paa(values: &[f64], cfg: &SaxConfig) -> Result<Vec<f64>> {
    if values.len() != cfg.window_len {
        return Err(Error::Shape { expected: cfg.window_len, actual: values.len() });
    }
    let seg = cfg.segment_len();
    Ok(values.chunks_exact(seg).map(|c| c.iter().sum::<f64>() / seg as f64).collect())
}

/// Maps each PAA value to its cell; a value on a breakpoint goes to the upper cell.
pub fn discretize(paa_values: &[f64], cfg: &SaxConfig) -> Result<SaxWord> {
    if paa_values.len() != cfg.word_len {
        return Err(Error::Shape { expected: cfg.word_len, actual: paa_values.len() });
    }
    let symbols: Vec<u8> = paa_values
        .iter()
        .map(|&v| cfg.breakpoints.partition_point(|&b| b <= v) as u8)
        .collect();
    Ok(SaxWord::from_symbols(symbols))
}

pub fn sax_transform(raw: &[f64], cfg: &SaxConfig) -> Result<(SaxWord, NormalizedWindow)> {
    let nw = znormalize(raw, cfg)?;
    let word = discretize(&paa(&nw.values, cfg)?, cfg)?;
    Ok((word, nw))
}

fn scaled(cfg: &SaxConfig, sum_sq: f64) -> f64 {
    (cfg.window_len as f64 / cfg.word_len as f64).sqrt() * sum_sq.sqrt()
}

/// Lower bound on the Euclidean distance between the normalized windows
/// behind two words.
pub fn mindist(q: &SaxWord, c: &SaxWord, cfg: &SaxConfig) -> Result<f64> {
    cfg.check_word(q)?;
    cfg.check_word(c)?;
    let sum_sq = q
        .symbols()
        .iter()
        .zip(c.symbols())
        .map(|(&a, &b)| cfg.cell_dist(a, b).powi(2))
        .sum::<f64>();
    Ok(scaled(cfg, sum_sq))
}

/// Lower bound on `mindist(q, v)` over every word `v` inside `env`.
pub fn mindist_envelope(q: &SaxWord, env: &SymbolEnvelope, cfg: &SaxConfig) -> Result<f64> {
    cfg.check_word(q)?;
    if env.len() != cfg.word_len {
        return Err(Error::WordLength { expected: cfg.word_len, actual: env.len() });
    }
    if let Some(i) = env.min.iter().zip(env.max.iter()).position(|(a, b)| a > b) {
        return Err(Error::InvalidEnvelope(i));
    }
    Ok(mindist_envelope_unchecked(q, env, cfg))
}

pub(crate) fn mindist_envelope_unchecked(q: &SaxWord, env: &SymbolEnvelope, cfg: &SaxConfig) -> f64 {
    let sum_sq = q
        .symbols()
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let (lo, hi) = (env.min[i], env.max[i]);
            if s < lo {
                cfg.cell_dist(s, lo).powi(2)
            } else if s > hi {
                cfg.cell_dist(s, hi).powi(2)
            } else {
                0.0
            }
        })
        .sum::<f64>();
    scaled(cfg, sum_sq)
}

pub(crate) fn mindist_unchecked(q: &SaxWord, c: &SaxWord, cfg: &SaxConfig) -> f64 {
    let sum_sq = q
        .symbols()
        .iter()
        .zip(c.symbols())
        .map(|(&a, &b)| cfg.cell_dist(a, b).powi(2))
        .sum::<f64>();
    scaled(cfg, sum_sq)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(w: usize, l: usize, a: usize) -> SaxConfig {
        SaxConfig::new(w, l, a).unwrap()
    }

    fn word(s: &str, a: usize) -> SaxWord {
        SaxWord::from_letters(s, a).unwrap()
    }

    #[test]
    fn config_rejects_bad_shapes() {
        assert!(SaxConfig::new(10, 3, 4).is_err());
        assert!(SaxConfig::new(8, 4, 1).is_err());
        assert!(SaxConfig::new(8, 4, 27).is_err());
        assert!(SaxConfig::new(8, 0, 4).is_err());
        assert!(SaxConfig::new(8, 4, 26).is_ok());
    }

    #[test]
    fn znormalize_examples() {
        let nw = znormalize(&[1.0, 2.0, 3.0], &cfg(3, 1, 2)).unwrap();
        let s = 1.5f64.sqrt();
        for (v, e) in nw.values.iter().zip([-s, 0.0, s]) {
            assert!((v - e).abs() < 1e-12);
        }
        assert_eq!(nw.mean, 2.0);
        assert!((nw.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);

        let flat = znormalize(&[5.0; 4], &cfg(4, 2, 2)).unwrap();
        assert_eq!(flat.values, vec![0.0; 4]);

        let a = znormalize(&[0.3, -1.0, 2.0], &cfg(3, 1, 2)).unwrap();
        let b = znormalize(&[7.3, 6.0, 9.0], &cfg(3, 1, 2)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }

        assert!(matches!(
            znormalize(&[1.0, 2.0], &cfg(3, 1, 2)),
            Err(Error::Shape { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn paa_examples() {
        assert_eq!(paa(&[1.0, 1.0, 3.0, 3.0], &cfg(4, 2, 3)).unwrap(), vec![1.0, 3.0]);
        assert_eq!(paa(&[0.0; 6], &cfg(6, 3, 3)).unwrap(), vec![0.0; 3]);
        assert_eq!(
            paa(&[2.0, 0.0, 0.0, 2.0, 4.0, 6.0, 6.0, 4.0], &cfg(8, 4, 3)).unwrap(),
            vec![1.0, 1.0, 5.0, 5.0]
        );
    }

    #[test]
    fn breakpoint_tables() {
        assert_eq!(breakpoints(2).unwrap(), vec![0.0]);
        let b3 = breakpoints(3).unwrap();
        assert!((b3[0] + 0.4307).abs() < 1e-3 && (b3[1] - 0.4307).abs() < 1e-3);
        let b4 = breakpoints(4).unwrap();
        for (v, e) in b4.iter().zip([-0.6745, 0.0, 0.6745]) {
            assert!((v - e).abs() < 1e-3);
        }
        assert!(breakpoints(1).is_err());
        assert!(breakpoints(27).is_err());
    }

    #[test]
    fn breakpoints_antisymmetric_and_increasing() {
        for a in 2..=26 {
            let b = breakpoints(a).unwrap();
            assert_eq!(b.len(), a - 1);
            assert!(b.windows(2).all(|p| p[0] < p[1]));
            for i in 0..b.len() {
                assert_eq!(b[i], -b[b.len() - 1 - i]);
            }
        }
    }

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize(&[-1.0, 0.1, 1.0], &cfg(3, 3, 3)).unwrap().to_string(), "abc");
        assert_eq!(discretize(&[0.0; 4], &cfg(4, 4, 2)).unwrap().to_string(), "bbbb");
        let c = cfg(4, 4, 26);
        let low = c.breakpoints()[0] - 1.0;
        assert_eq!(discretize(&[low; 4], &c).unwrap().to_string(), "aaaa");
        // tie goes up
        let b = cfg(4, 1, 3).breakpoints()[0];
        assert_eq!(discretize(&[b], &cfg(4, 1, 3)).unwrap().to_string(), "b");
    }

    #[test]
    fn sax_transform_examples() {
        let (w, _) = sax_transform(&[3.0; 8], &cfg(8, 4, 4)).unwrap();
        assert_eq!(w.to_string(), "cccc");
        let (w, nw) = sax_transform(&[0.0, 0.0, 10.0, 10.0], &cfg(4, 2, 3)).unwrap();
        assert_eq!(w.to_string(), "ac");
        assert_eq!(nw.values, vec![-1.0, -1.0, 1.0, 1.0]);
    }

    #[test]
    fn mindist_examples() {
        let c3 = cfg(3, 3, 3);
        assert_eq!(mindist(&word("abc", 3), &word("abc", 3), &c3).unwrap(), 0.0);
        assert_eq!(mindist(&word("ab", 3), &word("bc", 3), &cfg(4, 2, 3)).unwrap(), 0.0);
        let d = mindist(&word("ac", 3), &word("ca", 3), &cfg(4, 2, 3)).unwrap();
        // beta_2 - beta_1 for alpha = 3 is 2 * Phi^-1(2/3)
        let gap: f64 = 2.0 * 0.430_727_299_295_457_5;
        assert!((d - 2f64.sqrt() * (2.0 * gap * gap).sqrt()).abs() < 1e-9);
        assert!((d - 1.7228).abs() < 1e-3);
        assert!(mindist(&word("ab", 3), &word("abc", 3), &c3).is_err());
    }

    #[test]
    fn mindist_envelope_examples() {
        let c = cfg(4, 2, 4);
        let env = SymbolEnvelope::new(vec![2, 2], vec![3, 3]).unwrap();
        let d = mindist_envelope(&word("aa", 4), &env, &c).unwrap();
        assert!((d - 2f64.sqrt() * (2.0 * 0.6745f64.powi(2)).sqrt()).abs() < 1e-3);
        assert!((d - 1.3490).abs() < 1e-3);

        let inside = SymbolEnvelope::new(vec![0, 1], vec![2, 3]).unwrap();
        assert_eq!(mindist_envelope(&word("bc", 4), &inside, &c).unwrap(), 0.0);

        let w = word("ad", 4);
        let single = SymbolEnvelope::of_word(&w);
        for q in ["aa", "da", "cb", "dd"] {
            let q = word(q, 4);
            assert_eq!(
                mindist_envelope(&q, &single, &c).unwrap(),
                mindist(&q, &w, &c).unwrap()
            );
        }
        assert!(SymbolEnvelope::new(vec![2, 1], vec![1, 3]).is_err());
    }

    #[test]
    fn range_envelope_bounds_range() {
        let lo = word("abca", 4);
        let hi = word("acab", 4);
        let env = SymbolEnvelope::of_range(&lo, &hi, 4);
        assert_eq!(env.min(), &[0, 1, 0, 0]);
        assert_eq!(env.max(), &[0, 2, 3, 3]);
        let same = SymbolEnvelope::of_range(&lo, &lo, 4);
        assert_eq!(same, SymbolEnvelope::of_word(&lo));
    }

    fn all_words(l: usize, a: usize) -> Vec<SaxWord> {
        let mut out = vec![vec![]];
        for _ in 0..l {
            out = out
                .into_iter()
                .flat_map(|p: Vec<u8>| {
                    (0..a as u8).map(move |s| {
                        let mut v = p.clone();
                        v.push(s);
                        v
                    })
                })
                .collect();
        }
        out.into_iter().map(SaxWord::from_symbols).collect()
    }

    #[test]
    fn range_envelope_contains_every_word_in_range() {
        let words = all_words(3, 3);
        for i in 0..words.len() {
            for j in i..words.len() {
                let env = SymbolEnvelope::of_range(&words[i], &words[j], 3);
                for w in &words[i..=j] {
                    assert!(env.contains(w), "{w} not in [{}, {}]", words[i], words[j]);
                }
            }
        }
    }

    #[test]
    fn envelope_dominance_by_enumeration() {
        // all non-empty subsets of a 3-letter, 2-position universe would be 2^9;
        // use contiguous runs plus a few scattered sets
        let c = cfg(4, 2, 3);
        let words = all_words(2, 3);
        let mut sets: Vec<Vec<SaxWord>> = Vec::new();
        for mask in 1u32..(1 << words.len()) {
            sets.push(
                (0..words.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| words[i].clone())
                    .collect(),
            );
        }
        for set in &sets {
            let mut env = SymbolEnvelope::of_word(&set[0]);
            set.iter().for_each(|w| env.extend(w));
            for q in &words {
                let lb = mindist_envelope(q, &env, &c).unwrap();
                let best = set
                    .iter()
                    .map(|s| mindist(q, s, &c).unwrap())
                    .fold(f64::INFINITY, f64::min);
                assert!(lb <= best + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn lower_bound_holds(
            a in prop::collection::vec(-100.0f64..100.0, 32),
            b in prop::collection::vec(-100.0f64..100.0, 32),
            alpha in 2usize..=10,
        ) {
            let c = cfg(32, 8, alpha);
            let (wa, na) = sax_transform(&a, &c).unwrap();
            let (wb, nb) = sax_transform(&b, &c).unwrap();
            let md = mindist(&wa, &wb, &c).unwrap();
            prop_assert!(md <= euclidean(&na.values, &nb.values) + 1e-9);
        }

        #[test]
        fn mindist_symmetric_nonnegative(
            x in prop::collection::vec(0u8..6, 5),
            y in prop::collection::vec(0u8..6, 5),
        ) {
            let c = cfg(10, 5, 6);
            let (p, q) = (SaxWord::from_symbols(x), SaxWord::from_symbols(y));
            let d1 = mindist(&p, &q, &c).unwrap();
            prop_assert!(d1 >= 0.0);
            prop_assert_eq!(d1, mindist(&q, &p, &c).unwrap());
            prop_assert_eq!(mindist(&p, &p, &c).unwrap(), 0.0);
        }

        #[test]
        fn discretize_monotone(v in -4.0f64..4.0, dv in 0.0f64..3.0, alpha in 2usize..=26) {
            let c = cfg(1, 1, alpha);
            let lo = discretize(&[v], &c).unwrap();
            let hi = discretize(&[v + dv], &c).unwrap();
            prop_assert!(lo <= hi);
        }

        #[test]
        fn znormalize_moments(raw in prop::collection::vec(-1e3f64..1e3, 16)) {
            let nw = znormalize(&raw, &cfg(16, 4, 4)).unwrap();
            if nw.std > DEFAULT_EPSILON_STD {
                let m = nw.values.iter().sum::<f64>() / 16.0;
                let v = nw.values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 16.0;
                prop_assert!(m.abs() < 1e-9);
                prop_assert!((v.sqrt() - 1.0).abs() < 1e-9);
            }
        }
    }
}
