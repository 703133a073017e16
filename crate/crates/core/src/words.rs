//! Words over the class alphabet, queue details and class details.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::graph::{ClassSet, CompatibilityGraph};

/// Default cap on the number of states `enumerate_w2` may produce.
pub const DEFAULT_STATE_BOUND: usize = 2_000_000;

/// A finite word over the classes. The empty word prints as `-`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(SmallVec<[u8; 16]>);

/// A queue detail is an admissible word (see [`is_admissible`]).
pub type QueueDetail = Word;

impl Word {
    pub fn new() -> Self {
        Word(SmallVec::new())
    }

    pub fn from_slice(letters: &[u8]) -> Self {
        Word(SmallVec::from_slice(letters))
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, letter: u8) {
        self.0.push(letter);
    }

    pub fn remove(&mut self, pos: usize) -> u8 {
        self.0.remove(pos)
    }

    pub fn extend_from_slice(&mut self, letters: &[u8]) {
        self.0.extend_from_slice(letters);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        w.extend_from_slice(other.letters());
        w
    }

    pub fn repeat(&self, times: usize) -> Word {
        let mut w = Word::new();
        for _ in 0..times {
            w.extend_from_slice(self.letters());
        }
        w
    }

    /// `|w|_a`
    pub fn count(&self, letter: u8) -> usize {
        self.0.iter().filter(|&&c| c == letter).count()
    }

    pub fn support(&self) -> ClassSet {
        self.0.iter().copied().collect()
    }

    /// Prefix of length `len`.
    pub fn prefix(&self, len: usize) -> Word {
        Word::from_slice(&self.0[..len])
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// Checks every letter lies in `1..=n`.
    pub fn check_range(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&c| c == 0 || c as usize > n) {
            Some(&c) => Err(Error::OutOfRange { class: c as usize, n }),
            None => Ok(()),
        }
    }

    /// Parses `-` (empty), a digit string such as `133224`, or a
    /// comma-separated list such as `1,13,2`.
    pub fn parse(text: &str) -> Result<Word> {
        let t = text.trim();
        if t == "-" || t.is_empty() {
            return Ok(Word::new());
        }
        let mut w = Word::new();
        if t.contains(',') {
            for tok in t.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let c: u8 = tok.parse().map_err(|e| Error::Parse(format!("letter `{tok}`: {e}")))?;
                w.push(c);
            }
        } else {
            for ch in t.chars() {
                let d = ch
                    .to_digit(10)
                    .ok_or_else(|| Error::Parse(format!("bad letter `{ch}` in `{t}`")))?;
                w.push(d as u8);
            }
        }
        Ok(w)
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        Word::parse(s)
    }
}

impl From<&[u8]> for Word {
    fn from(letters: &[u8]) -> Self {
        Word::from_slice(letters)
    }
}

impl<const N: usize> From<[u8; N]> for Word {
    fn from(letters: [u8; N]) -> Self {
        Word::from_slice(&letters)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        if self.0.iter().all(|&c| c < 10) {
            for c in &self.0 {
                write!(f, "{c}")?;
            }
            return Ok(());
        }
        let parts: Vec<String> = self.0.iter().map(u8::to_string).collect();
        write!(f, "{}", parts.join(","))?;
        if self.0.len() == 1 {
            write!(f, ",")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

/// Per-class counts; entry `k` is the count of class `k + 1`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassDetail(pub Vec<u32>);

impl ClassDetail {
    pub fn zeros(n: usize) -> Self {
        ClassDetail(vec![0; n])
    }

    pub fn from_counts(counts: &[u32]) -> Self {
        ClassDetail(counts.to_vec())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, class: u8) -> u32 {
        self.0[class as usize - 1]
    }

    pub fn set(&mut self, class: u8, value: u32) {
        self.0[class as usize - 1] = value;
    }

    /// The l1 norm.
    pub fn norm(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }

    pub fn l1_distance(&self, other: &ClassDetail) -> u64 {
        self.0.iter().zip(&other.0).map(|(&a, &b)| a.abs_diff(b) as u64).sum()
    }

    pub fn support(&self) -> ClassSet {
        (1..=self.0.len() as u8).filter(|&c| self.get(c) > 0).collect()
    }

    pub fn is_admissible(&self, g: &CompatibilityGraph) -> bool {
        self.0.len() == g.n() && g.is_independent(self.support())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().trim_start_matches('(').trim_end_matches(')');
        t.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("count `{tok}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(ClassDetail)
    }
}

impl fmt::Display for ClassDetail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl fmt::Debug for ClassDetail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// `[w]`, the commutative image of a word over `n` classes.
pub fn commutative_image(word: &Word, n: usize) -> ClassDetail {
    let mut x = ClassDetail::zeros(n);
    for &c in word.letters() {
        x.0[c as usize - 1] += 1;
    }
    x
}

/// True iff the support of `word` is empty or independent in `g`.
pub fn is_admissible(g: &CompatibilityGraph, word: &Word) -> bool {
    word.check_range(g.n()).is_ok() && g.is_independent(word.support())
}

/// `W_2(C)`: admissible words of even length at most `2C`, ordered by length
/// and then lexicographically (so the empty word comes first).
pub fn enumerate_w2(g: &CompatibilityGraph, capacity: usize) -> Result<Vec<Word>> {
    enumerate_w2_bounded(g, capacity, DEFAULT_STATE_BOUND)
}

pub fn enumerate_w2_bounded(g: &CompatibilityGraph, capacity: usize, bound: usize) -> Result<Vec<Word>> {
    let mut out = vec![Word::new()];
    let mut buf = Word::new();
    for len in (2..=2 * capacity).step_by(2) {
        extend_words(g, len, &mut buf, &mut out, bound)?;
    }
    Ok(out)
}

fn extend_words(g: &CompatibilityGraph, len: usize, buf: &mut Word, out: &mut Vec<Word>, bound: usize) -> Result<()> {
    if buf.len() == len {
        if out.len() >= bound {
            return Err(Error::TooLarge(format!(
                "more than {bound} admissible words of length <= {len}"
            )));
        }
        out.push(buf.clone());
        return Ok(());
    }
    let forbidden = g.neighbors_of_set(buf.support())?;
    for c in 1..=g.n() as u8 {
        if forbidden.contains(c) {
            continue;
        }
        buf.push(c);
        let r = extend_words(g, len, buf, out, bound);
        buf.remove(buf.len() - 1);
        r?;
    }
    Ok(())
}

/// All admissible class details with every entry at most `max_count`,
/// ordered by norm and then lexicographically on the count vector.
pub fn enumerate_class_details(g: &CompatibilityGraph, max_count: u32) -> Vec<ClassDetail> {
    let mut out = vec![ClassDetail::zeros(g.n())];
    if max_count == 0 {
        return out;
    }
    for set in g.independent_sets() {
        let members = set.to_vec();
        let mut counts = vec![1u32; members.len()];
        loop {
            let mut x = ClassDetail::zeros(g.n());
            for (&c, &k) in members.iter().zip(&counts) {
                x.set(c, k);
            }
            out.push(x);
            // odometer over 1..=max_count
            let mut k = 0;
            while k < counts.len() && counts[k] == max_count {
                counts[k] = 1;
                k += 1;
            }
            if k == counts.len() {
                break;
            }
            counts[k] += 1;
        }
    }
    out.sort_by(|a, b| a.norm().cmp(&b.norm()).then_with(|| a.0.cmp(&b.0)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn word_text_forms() {
        assert_eq!(w("133224").letters(), &[1, 3, 3, 2, 2, 4]);
        assert_eq!(w("-"), Word::new());
        assert_eq!(Word::new().to_string(), "-");
        assert_eq!(w("1,13,2").letters(), &[1, 13, 2]);
        assert_eq!(w("1,13,2").to_string(), "1,13,2");
        assert_eq!(Word::from([12]).to_string(), "12,");
        assert_eq!(w("12,"), Word::from([12]));
        assert!(Word::parse("1a").is_err());
    }

    #[test]
    fn commutative_images() {
        assert_eq!(commutative_image(&w("1331"), 4).0, vec![2, 0, 2, 0]);
        assert_eq!(commutative_image(&Word::new(), 4).0, vec![0, 0, 0, 0]);
        assert_eq!(commutative_image(&w("33"), 4).0, vec![0, 0, 2, 0]);
    }

    #[test]
    fn admissibility() {
        let paw = CompatibilityGraph::paw();
        assert!(is_admissible(&paw, &w("13")));
        assert!(!is_admissible(&paw, &w("34")));
        assert!(is_admissible(&paw, &Word::new()));
        assert!(is_admissible(&paw, &w("22")));
        assert!(!is_admissible(&paw, &w("15")));
    }

    #[test]
    fn w2_small_cases() {
        let paw = CompatibilityGraph::paw();
        let states = enumerate_w2(&paw, 1).unwrap();
        let expected: Vec<Word> = ["-", "11", "13", "14", "22", "31", "33", "41", "44"]
            .iter()
            .map(|s| w(s))
            .collect();
        assert_eq!(states, expected);

        let edge = CompatibilityGraph::from_edge_list(2, &[(1, 2)]).unwrap();
        assert_eq!(enumerate_w2(&edge, 1).unwrap(), vec![w("-"), w("11"), w("22")]);
        assert_eq!(enumerate_w2(&paw, 0).unwrap(), vec![Word::new()]);
        assert!(matches!(enumerate_w2_bounded(&paw, 3, 10), Err(Error::TooLarge(_))));
    }

    #[test]
    fn class_detail_enumeration() {
        let paw = CompatibilityGraph::paw();
        let xs = enumerate_class_details(&paw, 2);
        // zero, 4 singletons x 2 values, 2 pairs x 4 values
        assert_eq!(xs.len(), 1 + 8 + 8);
        assert!(xs.iter().all(|x| x.is_admissible(&paw)));
        assert_eq!(xs[0], ClassDetail::zeros(4));
        assert_eq!(enumerate_class_details(&paw, 0).len(), 1);
    }

    #[test]
    fn class_detail_parse() {
        assert_eq!(ClassDetail::parse("(2,0,1,0)").unwrap().0, vec![2, 0, 1, 0]);
        assert_eq!(ClassDetail::parse("2,0,1,0").unwrap().to_string(), "(2,0,1,0)");
    }
}
