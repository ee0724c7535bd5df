//! Choosing axiom tracks for axioms created by lifting or expansion.
//!
//! The only requirement is injectivity on the positions of the created
//! axioms. Three policies are offered:
//!
//! * [`TrackPolicy::graded`]: a fixed injection `ℕ* → ℕ∖{0,1}` enumerating
//!   positions by weight `|a| + Σ letters`, then lexicographically. Weight
//!   grows with the letters, so values overflow `u64` quickly once tracks
//!   produced by earlier expansions appear in positions.
//! * [`TrackPolicy::memo`]: positions get `2, 3, 4, …` in the order they are
//!   first requested (each batch in length-lexicographic order). Sharing one
//!   memo across a family keeps the choice uniform.
//! * [`TrackPolicy::from_reference`]: reuse the axiom tracks of a reference
//!   derivation, so expanding a reduct reproduces the original exactly.

use std::collections::BTreeMap;

use crate::pos::Pos;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("track injection overflows at position {0}")]
pub struct TrackOverflow(pub Pos);

#[derive(Debug, Clone)]
pub enum TrackPolicy {
    Graded,
    Memo { table: BTreeMap<Pos, u64>, next: u64 },
    Reference { tracks: BTreeMap<Pos, u64>, fallback: Box<TrackPolicy> },
}

impl Default for TrackPolicy {
    fn default() -> Self {
        TrackPolicy::memo()
    }
}

impl TrackPolicy {
    pub fn graded() -> TrackPolicy {
        TrackPolicy::Graded
    }

    pub fn memo() -> TrackPolicy {
        TrackPolicy::Memo { table: BTreeMap::new(), next: 2 }
    }

    /// Tracks of the given axioms; other positions fall back to a memo
    /// starting above every reference track.
    pub fn from_reference(tracks: BTreeMap<Pos, u64>) -> TrackPolicy {
        let next = tracks.values().copied().max().unwrap_or(1) + 1;
        TrackPolicy::Reference { tracks, fallback: Box::new(TrackPolicy::Memo { table: BTreeMap::new(), next }) }
    }

    pub fn track(&mut self, a: &Pos) -> Result<u64, TrackOverflow> {
        match self {
            TrackPolicy::Graded => graded_index(a).and_then(|i| i.checked_add(2)).ok_or_else(|| TrackOverflow(a.clone())),
            TrackPolicy::Memo { table, next } => {
                if let Some(k) = table.get(a) {
                    return Ok(*k);
                }
                let k = *next;
                *next = next.checked_add(1).ok_or_else(|| TrackOverflow(a.clone()))?;
                table.insert(a.clone(), k);
                Ok(k)
            }
            TrackPolicy::Reference { tracks, fallback } => match tracks.get(a) {
                Some(k) => Ok(*k),
                None => fallback.track(a),
            },
        }
    }

    /// Tracks for a batch of positions, requested in length-lex order.
    pub fn assign(&mut self, positions: impl IntoIterator<Item = Pos>) -> Result<BTreeMap<Pos, u64>, TrackOverflow> {
        let mut ps: Vec<Pos> = positions.into_iter().collect();
        ps.sort_by(|a, b| a.cmp_length_lex(b));
        ps.dedup();
        ps.into_iter().map(|p| self.track(&p).map(|k| (p, k))).collect()
    }
}

/// Number of positions strictly before `a` in the graded enumeration.
pub fn graded_index(a: &Pos) -> Option<u64> {
    // Sequences of weight exactly n are the compositions of n.
    fn below(n: u128) -> Option<u128> {
        // Σ_{m<n} count(m) = 2^{n-1} for n ≥ 1.
        if n == 0 {
            Some(0)
        } else {
            1u128.checked_shl(u32::try_from(n - 1).ok()?).filter(|_| n - 1 < 127)
        }
    }
    let w: u128 = a.letters().iter().try_fold(0u128, |acc, &k| acc.checked_add(k as u128 + 1))?;
    let mut idx = below(w)?;
    let mut rest = w;
    for &k in a.letters() {
        // Sequences with this prefix and a smaller next letter q < k use
        // weight q+1 there, leaving rest-q-1; sum count(m) for m in [rest-k, rest-1].
        if k > 0 {
            let hi = below(rest)?;
            let lo = below(rest - k as u128)?;
            idx = idx.checked_add(hi - lo)?;
        }
        rest -= k as u128 + 1;
    }
    u64::try_from(idx).ok()
}
