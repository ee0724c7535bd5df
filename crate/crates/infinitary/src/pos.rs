//! Positions: finite words over the naturals.
//!
//! Term positions use the letters 0 (abstraction body), 1 (function side of
//! an application) and 2 (argument side). Derivation positions reuse 0 and 1
//! and replace 2 by an argument track k ≥ 2.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A word over ℕ. Ordered lexicographically, so a prefix sorts before its
/// extensions and the extensions of a word form a contiguous range.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos(Vec<u64>);

impl Pos {
    pub fn eps() -> Pos {
        Pos(Vec::new())
    }

    pub fn new(letters: Vec<u64>) -> Pos {
        Pos(letters)
    }

    pub fn letters(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, k: u64) -> Pos {
        let mut v = self.0.clone();
        v.push(k);
        Pos(v)
    }

    pub fn concat(&self, other: &Pos) -> Pos {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Pos(v)
    }

    pub fn push(&mut self, k: u64) {
        self.0.push(k);
    }

    pub fn pop(&mut self) -> Option<u64> {
        self.0.pop()
    }

    pub fn parent(&self) -> Option<Pos> {
        if self.0.is_empty() {
            None
        } else {
            Some(Pos(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn last(&self) -> Option<u64> {
        self.0.last().copied()
    }

    pub fn first(&self) -> Option<u64> {
        self.0.first().copied()
    }

    pub fn prefix(&self, n: usize) -> Pos {
        Pos(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn suffix_from(&self, n: usize) -> Pos {
        Pos(self.0[n.min(self.0.len())..].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Pos) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// `other` with `self` removed from its front, if `self` is a prefix.
    pub fn strip_prefix_of(&self, other: &Pos) -> Option<Pos> {
        if self.is_prefix_of(other) {
            Some(Pos(other.0[self.0.len()..].to_vec()))
        } else {
            None
        }
    }

    /// Applicative depth: number of letters ≥ 2.
    pub fn ad(&self) -> usize {
        self.0.iter().filter(|&&k| k >= 2).count()
    }

    /// Letterwise `min(k, 2)`: maps a derivation position to the term
    /// position of its subject.
    pub fn collapse(&self) -> Pos {
        Pos(self.0.iter().map(|&k| k.min(2)).collect())
    }

    /// `max(ad(a), max letter of a)`.
    pub fn rank(&self) -> u64 {
        let m = self.0.iter().copied().max().unwrap_or(0);
        m.max(self.ad() as u64)
    }

    /// Length first, then lexicographic.
    pub fn cmp_length_lex(&self, other: &Pos) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }

    /// Positions `p` with `self ≤ p` occupy a contiguous range in the lexicographic
    /// order; this is an exclusive upper bound for it.
    pub fn subtree_end(&self) -> Option<Pos> {
        let mut v = self.0.clone();
        while let Some(last) = v.pop() {
            if last < u64::MAX {
                v.push(last + 1);
                return Some(Pos(v));
            }
        }
        None
    }
}

impl From<Vec<u64>> for Pos {
    fn from(v: Vec<u64>) -> Pos {
        Pos(v)
    }
}

impl From<&[u64]> for Pos {
    fn from(v: &[u64]) -> Pos {
        Pos(v.to_vec())
    }
}

impl fmt::Display for Pos {
    /// `ε` for the empty word, digits run together when every letter is a
    /// single digit, dot-separated otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        if self.0.iter().all(|&k| k < 10) {
            for k in &self.0 {
                write!(f, "{k}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
            f.write_str(&parts.join("."))
        }
    }
}

impl fmt::Debug for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pos({self})")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid position `{0}`")]
pub struct PosParseError(pub String);

impl FromStr for Pos {
    type Err = PosParseError;

    /// Accepts `ε`, `e` or the empty string for the empty word; letters are
    /// separated by `.` or `·`, or written as a digit run.
    fn from_str(s: &str) -> Result<Pos, PosParseError> {
        let s = s.trim();
        if s.is_empty() || s == "ε" || s == "e" || s == "eps" {
            return Ok(Pos::eps());
        }
        let err = || PosParseError(s.to_string());
        if s.contains('.') || s.contains('·') {
            let mut v = Vec::new();
            for part in s.split(['.', '·']) {
                v.push(part.trim().parse::<u64>().map_err(|_| err())?);
            }
            Ok(Pos(v))
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(u64::from).ok_or_else(err))
                .collect::<Result<Vec<_>, _>>()
                .map(Pos)
        }
    }
}

impl Serialize for Pos {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        s.serialize_str(&parts.join("."))
    }
}

impl<'de> Deserialize<'de> for Pos {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Pos, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand used pervasively in tests: `pos("0.1.2")`, `pos("012")`, `pos("")`.
pub fn pos(s: &str) -> Pos {
    s.parse().expect("valid position literal")
}
