//! Pair-partition words and the double-letter reduction.
//!
//! A word is a sequence of letter ids. It is canonical when first
//! occurrences appear in the order `1, 2, 3, ...`, and a partition word when
//! it is canonical and every letter occurs exactly twice. A double letter is
//! an adjacent equal pair; the first and last positions are not adjacent.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `k` accepted by [`enumerate_partition_words`]; there are
/// `(2k - 1)!!` words of length `2k`.
pub const ENUMERATION_MAX_K: usize = 8;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(Vec<u32>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Wraps letters as given, without relabelling.
    pub fn from_letters(letters: Vec<u32>) -> Self {
        Word(letters)
    }

    /// Relabels symbols by order of first occurrence.
    pub fn canonicalize<T: Eq + Hash>(seq: &[T]) -> Self {
        let mut ids: HashMap<&T, u32> = HashMap::new();
        let letters = seq
            .iter()
            .map(|s| {
                let next = ids.len() as u32 + 1;
                *ids.entry(s).or_insert(next)
            })
            .collect();
        Word(letters)
    }

    /// Parses and canonicalizes. Symbols are single characters (`"baab"`),
    /// or separated by `,`, `.` or spaces (`"1.2.10.10.2.1"`).
    pub fn parse(s: &str) -> Self {
        let s = s.trim();
        if s.contains([',', '.', ' ']) {
            let parts: Vec<&str> = s
                .split([',', '.', ' '])
                .filter(|p| !p.is_empty())
                .collect();
            Word::canonicalize(&parts)
        } else {
            let chars: Vec<char> = s.chars().filter(|c| *c != '∅').collect();
            Word::canonicalize(&chars)
        }
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_canonical(&self) -> bool {
        let mut next = 1;
        for &l in &self.0 {
            if l == next {
                next += 1;
            } else if l == 0 || l > next {
                return false;
            }
        }
        true
    }

    /// Number of distinct letters.
    pub fn alphabet_size(&self) -> usize {
        let mut seen: Vec<u32> = self.0.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn to_canonical(&self) -> Word {
        Word::canonicalize(&self.0)
    }

    pub fn is_partition_word(&self) -> bool {
        is_partition_word(self)
    }

    /// Positions `i` with `w[i] == w[i + 1]`.
    pub fn double_letter_positions(&self) -> Vec<usize> {
        (0..self.0.len().saturating_sub(1))
            .filter(|&i| self.0[i] == self.0[i + 1])
            .collect()
    }

    pub fn contains_letter(&self, letter: u32) -> bool {
        self.0.contains(&letter)
    }

    fn slice(&self, range: std::ops::Range<usize>) -> Word {
        Word(self.0[range].to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        if self.0.iter().all(|&l| l <= 9) {
            for l in &self.0 {
                write!(f, "{l}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Word::parse(s))
    }
}

pub fn canonicalize<T: Eq + Hash>(seq: &[T]) -> Word {
    Word::canonicalize(seq)
}

/// True iff `w` is canonical and every letter occurs exactly twice. The
/// empty word qualifies vacuously.
pub fn is_partition_word(w: &Word) -> bool {
    if !w.is_canonical() || w.len() % 2 != 0 {
        return false;
    }
    let mut counts = vec![0u8; w.len() / 2 + 2];
    for &l in w.letters() {
        let Some(c) = counts.get_mut(l as usize) else {
            return false;
        };
        *c += 1;
        if *c > 2 {
            return false;
        }
    }
    counts[1..=w.len() / 2].iter().all(|&c| c == 2)
}

/// All canonical pair-partition words of length `2k`, in lexicographic order.
pub fn enumerate_partition_words(k: usize) -> Result<Vec<Word>> {
    Error::check_budget("partition word k", k as u128, ENUMERATION_MAX_K as u128)?;
    let mut out = Vec::new();
    let mut slots = vec![0u32; 2 * k];
    fill_pairs(&mut slots, 1, &mut out);
    out.sort();
    Ok(out)
}

fn fill_pairs(slots: &mut [u32], next: u32, out: &mut Vec<Word>) {
    let Some(first) = slots.iter().position(|&s| s == 0) else {
        out.push(Word(slots.to_vec()));
        return;
    };
    slots[first] = next;
    for partner in first + 1..slots.len() {
        if slots[partner] == 0 {
            slots[partner] = next;
            fill_pairs(slots, next + 1, out);
            slots[partner] = 0;
        }
    }
    slots[first] = 0;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionTrace {
    /// The input followed by each intermediate word, with original letter ids.
    pub steps: Vec<Word>,
    /// The fixpoint, recanonicalized.
    pub final_word: Word,
}

/// Deletes the leftmost double letter until none remains.
pub fn reduce(w: &Word) -> ReductionTrace {
    reduce_with(w, |_| 0)
}

/// Like [`reduce`], with `choose` picking which of the current double-letter
/// positions to delete (an index into the slice it is given).
pub fn reduce_with<F>(w: &Word, mut choose: F) -> ReductionTrace
where
    F: FnMut(&[usize]) -> usize,
{
    let mut current = w.clone();
    let mut steps = vec![current.clone()];
    loop {
        let candidates = current.double_letter_positions();
        if candidates.is_empty() {
            break;
        }
        let at = candidates[choose(&candidates).min(candidates.len() - 1)];
        current.0.drain(at..at + 2);
        steps.push(current.clone());
    }
    ReductionTrace {
        final_word: current.to_canonical(),
        steps,
    }
}

/// Outcome of [`is_catalan`]. The empty word has no double letter, so it is
/// reported separately; counting conventions treat it as Catalan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalanStatus {
    Empty,
    Catalan,
    NonCatalan,
}

impl CatalanStatus {
    /// Catalan, counting the empty word as Catalan.
    pub fn counts_as_catalan(self) -> bool {
        !matches!(self, CatalanStatus::NonCatalan)
    }
}

pub fn is_catalan(w: &Word) -> Result<CatalanStatus> {
    if !is_partition_word(w) {
        return Err(Error::invalid(format!("{w} is not a partition word")));
    }
    if w.is_empty() {
        return Ok(CatalanStatus::Empty);
    }
    if !w.double_letter_positions().is_empty() && reduce(w).final_word.is_empty() {
        Ok(CatalanStatus::Catalan)
    } else {
        Ok(CatalanStatus::NonCatalan)
    }
}

/// `C_k = (2k)! / ((k + 1)! k!)`, exact.
pub fn catalan_count(k: u64) -> Result<u64> {
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c
            .checked_mul(2 * (2 * i + 1))
            .map(|v| v / (i + 2))
            .filter(|&v| v <= u64::MAX as u128)
            .ok_or_else(|| Error::invalid(format!("catalan_count({k}) overflows u64")))?;
    }
    Ok(c as u64)
}

/// Decomposition of a reduced word.
///
/// With `a` the letter at the last new position, `b` the letter right after
/// the first `a`, and `c` the letter right after the second `a` (if any):
/// `w = w1 a b w2 a` or `w = w1 a b w2 a c w3`, where `b, c` occur in `w1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReducedForm {
    Empty,
    Tail {
        w1: Word,
        a: u32,
        b: u32,
        w2: Word,
    },
    Inner {
        w1: Word,
        a: u32,
        b: u32,
        w2: Word,
        c: u32,
        w3: Word,
    },
}

pub fn classify_reduced(w: &Word) -> Result<ReducedForm> {
    if w.is_empty() {
        return Ok(ReducedForm::Empty);
    }
    if !w.double_letter_positions().is_empty() {
        return Err(Error::invalid(format!("{w} is not reduced")));
    }
    let letters = w.letters();
    let mut first_seen = HashMap::new();
    let mut last_new = 0;
    for (i, &l) in letters.iter().enumerate() {
        if first_seen.insert(l, i).is_none() {
            last_new = i;
        }
    }
    let a = letters[last_new];
    let malformed = || Error::invalid(format!("{w} does not decompose around its last new letter"));
    let second_a = letters[last_new + 1..]
        .iter()
        .position(|&l| l == a)
        .map(|p| p + last_new + 1)
        .ok_or_else(malformed)?;
    if last_new == 0 || second_a == last_new + 1 {
        return Err(malformed());
    }
    let w1 = w.slice(0..last_new);
    let b = letters[last_new + 1];
    let w2 = w.slice(last_new + 2..second_a);
    if !w1.contains_letter(b) {
        return Err(malformed());
    }
    if second_a == letters.len() - 1 {
        return Ok(ReducedForm::Tail { w1, a, b, w2 });
    }
    let c = letters[second_a + 1];
    if !w1.contains_letter(c) || c == a || c == b {
        return Err(malformed());
    }
    let w3 = w.slice(second_a + 2..letters.len());
    Ok(ReducedForm::Inner { w1, a, b, w2, c, w3 })
}
