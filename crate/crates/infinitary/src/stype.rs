//! Sequence types of the rigid system S.
//!
//! `T ::= o | (k·S_k)_{k∈K} → T` where `K ⊆ ℕ∖{0,1}`. A sequence may end
//! with a cofinite family (every track `≥ n` carries the same type), and a
//! type may refer back to an enclosing arrow with [`SType::Back`], which is
//! enough for the regular types used by the fixtures (`ρ = (ρ)_{k≥2} → o`).
//!
//! Positions inside types: letter 1 goes to the codomain, letter `k ≥ 2`
//! to the domain entry on track `k`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::pos::Pos;
use crate::r0::{show_var, RType};
use crate::term::Var;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SType {
    Atom(String),
    Arrow(Seq, Box<SType>),
    /// The `i`-th enclosing arrow (0 is the nearest).
    Back(u32),
}

/// Track-indexed sequence of types.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Seq {
    fin: BTreeMap<u64, SType>,
    /// `(n, T)`: every track `≥ n` carries `T`. Finite keys are all `< n`.
    tail: Option<(u64, Box<SType>)>,
}

/// Symbol found at a (bi)position.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Sym {
    Atom(String),
    Arrow,
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Atom(a) => f.write_str(a),
            Sym::Arrow => f.write_str("→"),
        }
    }
}

impl Seq {
    pub fn empty() -> Seq {
        Seq::default()
    }

    pub fn single(k: u64, t: SType) -> Seq {
        Seq { fin: BTreeMap::from([(k, t)]), tail: None }
    }

    /// Panics on a track below 2.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, SType)>) -> Seq {
        let fin: BTreeMap<u64, SType> = pairs.into_iter().collect();
        assert!(fin.keys().all(|&k| k >= 2), "tracks start at 2");
        Seq { fin, tail: None }
    }

    pub fn with_tail(mut self, from: u64, t: SType) -> Seq {
        assert!(from >= 2 && self.fin.keys().all(|&k| k < from), "tail must follow the finite tracks");
        self.tail = Some((from, Box::new(t)));
        self
    }

    pub fn get(&self, k: u64) -> Option<&SType> {
        self.fin.get(&k).or(match &self.tail {
            Some((n, t)) if k >= *n => Some(t),
            _ => None,
        })
    }

    /// Finite part, in track order.
    pub fn entries(&self) -> impl Iterator<Item = (u64, &SType)> {
        self.fin.iter().map(|(k, t)| (*k, t))
    }

    pub fn tail(&self) -> Option<(u64, &SType)> {
        self.tail.as_ref().map(|(n, t)| (*n, &**t))
    }

    /// `Rt(F)` for finite sequences.
    pub fn tracks(&self) -> BTreeSet<u64> {
        self.fin.keys().copied().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.fin.is_empty() && self.tail.is_none()
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none() && self.fin.values().all(SType::is_finite)
    }

    pub fn len(&self) -> usize {
        self.fin.len()
    }

    /// `F ⊎ G`; on overlap returns the smallest conflicting track.
    pub fn disjoint_union(&self, other: &Seq) -> Result<Seq, u64> {
        if let Some(k) = self.fin.keys().find(|k| other.get(**k).is_some()) {
            return Err(*k);
        }
        if let Some(k) = other.fin.keys().find(|k| self.get(**k).is_some()) {
            return Err(*k);
        }
        let tail = match (&self.tail, &other.tail) {
            (Some((a, _)), Some((b, _))) => return Err(*a.max(b)),
            (Some(t), None) | (None, Some(t)) => Some(t.clone()),
            (None, None) => None,
        };
        let mut fin = self.fin.clone();
        fin.extend(other.fin.iter().map(|(k, t)| (*k, t.clone())));
        Ok(Seq { fin, tail })
    }

    pub fn map(&self, f: &dyn Fn(&SType) -> SType) -> Seq {
        Seq {
            fin: self.fin.iter().map(|(k, t)| (*k, f(t))).collect(),
            tail: self.tail.as_ref().map(|(n, t)| (*n, Box::new(f(t)))),
        }
    }

    /// Restriction to the given tracks (finite part only).
    pub fn restrict(&self, keep: &dyn Fn(u64) -> bool) -> Seq {
        Seq { fin: self.fin.iter().filter(|(k, _)| keep(**k)).map(|(k, t)| (*k, t.clone())).collect(), tail: None }
    }

    /// Symbol at `k·c`.
    pub fn symbol_at(&self, c: &Pos) -> Option<Sym> {
        let (&k, rest) = c.letters().split_first()?;
        if k < 2 {
            return None;
        }
        self.get(k)?.symbol_at(&Pos::new(rest.to_vec()))
    }

    /// `supp(F) = ⋃ k·supp(S_k)` for finite sequences; positions longer
    /// than `max_len` are dropped for regular ones.
    pub fn support_upto(&self, max_len: usize) -> BTreeSet<Pos> {
        let mut out = BTreeSet::new();
        for (k, t) in &self.fin {
            for c in t.support_upto(max_len.saturating_sub(1)) {
                if max_len > 0 {
                    out.insert(Pos::new(std::iter::once(*k).chain(c.letters().iter().copied()).collect()));
                }
            }
        }
        out
    }

    pub fn support(&self) -> BTreeSet<Pos> {
        assert!(self.is_finite(), "support of an infinite sequence");
        self.support_upto(usize::MAX)
    }

    pub fn collapse(&self) -> Option<Vec<RType>> {
        if self.tail.is_some() {
            return None;
        }
        let mut v = self.fin.values().map(SType::collapse).collect::<Option<Vec<_>>>()?;
        v.sort();
        Some(v)
    }

    /// Pointwise order: every track here exists there with a larger type.
    pub fn leq(&self, other: &Seq) -> bool {
        self.fin.iter().all(|(k, t)| other.get(*k).is_some_and(|u| t.leq(u)))
            && match (&self.tail, &other.tail) {
                (None, _) => true,
                (Some((a, t)), Some((b, u))) => a >= b && t.leq(u),
                (Some(_), None) => false,
            }
    }

    /// Union of bisupports; `None` on a symbol clash.
    pub fn join(&self, other: &Seq) -> Option<Seq> {
        if self.tail.is_some() || other.tail.is_some() {
            return (self == other).then(|| self.clone());
        }
        let mut fin = self.fin.clone();
        for (k, u) in &other.fin {
            let v = match fin.get(k) {
                Some(t) => t.join(u)?,
                None => u.clone(),
            };
            fin.insert(*k, v);
        }
        Some(Seq { fin, tail: None })
    }

    /// Intersection of bisupports.
    pub fn meet(&self, other: &Seq) -> Option<Seq> {
        let mut fin = BTreeMap::new();
        for (k, t) in &self.fin {
            if let Some(u) = other.fin.get(k) {
                fin.insert(*k, t.meet(u)?);
            }
        }
        Some(Seq { fin, tail: None })
    }

    fn has_empty(&self, positive: bool) -> bool {
        self.fin.values().any(|t| t.has_empty(positive)) || self.tail.as_ref().is_some_and(|(_, t)| t.has_empty(positive))
    }
}

impl SType {
    pub fn o() -> SType {
        SType::Atom("o".into())
    }

    pub fn atom(a: &str) -> SType {
        SType::Atom(a.into())
    }

    pub fn arrow(dom: Seq, cod: SType) -> SType {
        SType::Arrow(dom, Box::new(cod))
    }

    /// Whether the type has no back-references and no cofinite families.
    pub fn is_finite(&self) -> bool {
        match self {
            SType::Atom(_) => true,
            SType::Arrow(f, t) => f.is_finite() && t.is_finite(),
            SType::Back(_) => false,
        }
    }

    /// `T(c)`, following back-references through the enclosing arrows.
    pub fn symbol_at(&self, c: &Pos) -> Option<Sym> {
        let mut stack: Vec<&SType> = Vec::new();
        let mut cur = self;
        let letters = c.letters();
        let mut i = 0;
        loop {
            while let SType::Back(j) = cur {
                let idx = stack.len().checked_sub(1 + *j as usize)?;
                cur = stack[idx];
                stack.truncate(idx);
            }
            let SType::Arrow(f, t) = cur else {
                let SType::Atom(a) = cur else { unreachable!() };
                return (i == letters.len()).then(|| Sym::Atom(a.clone()));
            };
            if i == letters.len() {
                return Some(Sym::Arrow);
            }
            stack.push(cur);
            cur = match letters[i] {
                1 => t,
                k if k >= 2 => f.get(k)?,
                _ => return None,
            };
            i += 1;
        }
    }

    /// Support positions of length at most `max_len`.
    pub fn support_upto(&self, max_len: usize) -> BTreeSet<Pos> {
        let mut out = BTreeSet::new();
        let mut frontier = vec![Pos::eps()];
        while let Some(c) = frontier.pop() {
            let Some(sym) = self.symbol_at(&c) else { continue };
            out.insert(c.clone());
            if sym != Sym::Arrow || c.len() >= max_len {
                continue;
            }
            frontier.push(c.child(1));
            for k in self.domain_tracks_at(&c) {
                frontier.push(c.child(k));
            }
        }
        out
    }

    /// Finite domain tracks of the arrow at `c`, plus the first tail track.
    fn domain_tracks_at(&self, c: &Pos) -> Vec<u64> {
        let mut stack: Vec<&SType> = Vec::new();
        let mut cur = self;
        for &l in c.letters() {
            while let SType::Back(j) = cur {
                let idx = stack.len() - 1 - *j as usize;
                cur = stack[idx];
                stack.truncate(idx);
            }
            let SType::Arrow(f, t) = cur else { return vec![] };
            stack.push(cur);
            cur = if l == 1 { t } else { f.get(l).expect("walked a support position") };
        }
        while let SType::Back(j) = cur {
            let idx = stack.len() - 1 - *j as usize;
            cur = stack[idx];
            stack.truncate(idx);
        }
        match cur {
            SType::Arrow(f, _) => f.fin.keys().copied().chain(f.tail.as_ref().map(|(n, _)| *n)).collect(),
            _ => vec![],
        }
    }

    pub fn support(&self) -> BTreeSet<Pos> {
        assert!(self.is_finite(), "support of an infinite type");
        self.support_upto(usize::MAX)
    }

    /// Forgets tracks; `None` for infinite types.
    pub fn collapse(&self) -> Option<RType> {
        match self {
            SType::Atom(a) => Some(RType::Atom(a.clone())),
            SType::Arrow(f, t) => Some(RType::arrow(f.collapse()?, t.collapse()?)),
            SType::Back(_) => None,
        }
    }

    /// `[σ1,…,σn] → τ ↦ (2·σ1,…,(n+1)·σn) → τ`, recursively, with the
    /// multiset taken in sorted order.
    pub fn canonical_lift(r: &RType) -> SType {
        match r {
            RType::Atom(a) => SType::Atom(a.clone()),
            RType::Arrow(dom, cod) => SType::arrow(
                Seq::from_pairs(dom.iter().enumerate().map(|(i, s)| (i as u64 + 2, SType::canonical_lift(s)))),
                SType::canonical_lift(cod),
            ),
        }
    }

    /// `()` occurring with the given polarity (as for R0 types).
    pub fn has_empty(&self, positive: bool) -> bool {
        match self {
            SType::Atom(_) | SType::Back(_) => false,
            SType::Arrow(f, t) => (f.is_empty() && !positive) || f.has_empty(!positive) || t.has_empty(positive),
        }
    }

    /// Bisupport inclusion with symbol agreement.
    pub fn leq(&self, other: &SType) -> bool {
        match (self, other) {
            (SType::Atom(a), SType::Atom(b)) => a == b,
            (SType::Arrow(f, t), SType::Arrow(g, u)) => f.leq(g) && t.leq(u),
            (SType::Back(i), SType::Back(j)) => i == j,
            _ => false,
        }
    }

    pub fn join(&self, other: &SType) -> Option<SType> {
        match (self, other) {
            (SType::Arrow(f, t), SType::Arrow(g, u)) => Some(SType::arrow(f.join(g)?, t.join(u)?)),
            _ => (self == other).then(|| self.clone()),
        }
    }

    pub fn meet(&self, other: &SType) -> Option<SType> {
        match (self, other) {
            (SType::Arrow(f, t), SType::Arrow(g, u)) => Some(SType::arrow(f.meet(g)?, t.meet(u)?)),
            _ => (self == other).then(|| self.clone()),
        }
    }
}

/// Finite map from variables to non-empty sequence types.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SCtx(BTreeMap<Var, Seq>);

impl SCtx {
    pub fn empty() -> SCtx {
        SCtx::default()
    }

    pub fn single(x: Var, k: u64, t: SType) -> SCtx {
        SCtx(BTreeMap::from([(x, Seq::single(k, t))]))
    }

    pub fn get(&self, x: &Var) -> Option<&Seq> {
        self.0.get(x)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Var, &Seq)> {
        self.0.iter()
    }

    pub fn insert(&mut self, x: Var, s: Seq) {
        if s.is_empty() {
            self.0.remove(&x);
        } else {
            self.0.insert(x, s);
        }
    }

    pub fn remove(&mut self, x: &Var) -> Option<Seq> {
        self.0.remove(x)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `C ⊎ D`, or the first `(x, k)` with a track conflict.
    pub fn disjoint_union(&self, other: &SCtx) -> Result<SCtx, (Var, u64)> {
        let mut out = self.0.clone();
        for (x, s) in &other.0 {
            let merged = match out.get(x) {
                Some(f) => f.disjoint_union(s).map_err(|k| (x.clone(), k))?,
                None => s.clone(),
            };
            out.insert(x.clone(), merged);
        }
        Ok(SCtx(out))
    }

    /// Splits off the variable bound by an abstraction whose body has this
    /// context, returning its sequence and the abstraction's context.
    pub fn unbind(&self) -> (Seq, SCtx) {
        self.unbind_at(0)
    }

    /// Removes `#j` and closes the gap in the de Bruijn indices above it.
    pub fn unbind_at(&self, j: u32) -> (Seq, SCtx) {
        let mut out = BTreeMap::new();
        let mut dom = Seq::empty();
        for (x, s) in &self.0 {
            match x {
                Var::Bound(i) if *i == j => dom = s.clone(),
                Var::Bound(i) if *i > j => {
                    out.insert(Var::Bound(i - 1), s.clone());
                }
                _ => {
                    out.insert(x.clone(), s.clone());
                }
            }
        }
        (dom, SCtx(out))
    }

    /// Shifts every bound index by `d` (moving the context under `d` binders).
    pub fn shifted(&self, d: u32) -> SCtx {
        self.shifted_from(0, i64::from(d))
    }

    /// Adds `delta` to every bound index `≥ cutoff`, i.e. to the variables
    /// bound above the `cutoff` innermost binders.
    pub fn shifted_from(&self, cutoff: u32, delta: i64) -> SCtx {
        SCtx(
            self.0
                .iter()
                .map(|(x, s)| match x {
                    Var::Bound(i) if *i >= cutoff => {
                        let j = u32::try_from(i64::from(*i) + delta).expect("index stays in range");
                        (Var::Bound(j), s.clone())
                    }
                    _ => (x.clone(), s.clone()),
                })
                .collect(),
        )
    }

    pub fn symbol_at(&self, x: &Var, c: &Pos) -> Option<Sym> {
        self.0.get(x)?.symbol_at(c)
    }

    pub fn collapse(&self) -> Option<crate::r0::R0Ctx> {
        let mut out = crate::r0::R0Ctx::empty();
        for (x, s) in &self.0 {
            out.insert(x.clone(), s.collapse()?);
        }
        Some(out)
    }

    pub fn leq(&self, other: &SCtx) -> bool {
        self.0.iter().all(|(x, s)| other.0.get(x).is_some_and(|u| s.leq(u)))
    }

    pub fn join(&self, other: &SCtx) -> Option<SCtx> {
        let mut out = self.0.clone();
        for (x, s) in &other.0 {
            let v = match out.get(x) {
                Some(f) => f.join(s)?,
                None => s.clone(),
            };
            out.insert(x.clone(), v);
        }
        Some(SCtx(out))
    }

    pub fn meet(&self, other: &SCtx) -> Option<SCtx> {
        let mut out = SCtx::empty();
        for (x, s) in &self.0 {
            if let Some(u) = other.0.get(x) {
                out.insert(x.clone(), s.meet(u)?);
            }
        }
        Some(out)
    }

    /// Whether `()` occurs negatively in some entry's type.
    pub fn has_negative_empty(&self) -> bool {
        self.0.values().any(|s| s.has_empty(false))
    }
}

/// `()` occurs neither negatively in the context nor positively in the type.
pub fn is_unforgetful_s(ctx: &SCtx, ty: &SType) -> bool {
    !ctx.has_negative_empty() && !ty.has_empty(true)
}

impl fmt::Display for SType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SType::Atom(a) => f.write_str(a),
            SType::Back(i) => write!(f, "^{i}"),
            SType::Arrow(dom, cod) => write!(f, "{dom} -> {cod}"),
        }
    }
}

impl fmt::Display for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.fin.iter().map(|(k, t)| format!("{k}:{t}")).collect();
        if let Some((n, t)) = &self.tail {
            parts.push(format!("k>={n}:{t}"));
        }
        write!(f, "({})", parts.join(", "))
    }
}

impl fmt::Debug for SType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Debug for Seq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for SCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(x, s)| format!("{}: {s}", show_var(x))).collect();
        f.write_str(&parts.join(", "))
    }
}

impl fmt::Debug for SCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("S-type syntax error at offset {at}: {msg}")]
pub struct STypeParseError {
    pub at: usize,
    pub msg: String,
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn err<T>(&self, msg: &str) -> Result<T, STypeParseError> {
        Err(STypeParseError { at: self.i, msg: msg.into() })
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.s[self.i..].starts_with(tok.as_bytes()) {
            self.i += tok.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Option<u64> {
        self.ws();
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[start..self.i]).ok()?.parse().ok()
    }

    /// After `(`: a sequence starts with `)`, `k>=` or `<digits>:`.
    fn looks_like_seq(&self) -> bool {
        let mut j = self.i;
        while j < self.s.len() && self.s[j].is_ascii_whitespace() {
            j += 1;
        }
        if j < self.s.len() && self.s[j] == b')' {
            return true;
        }
        if self.s[j..].starts_with(b"k>=") {
            return true;
        }
        let d0 = j;
        while j < self.s.len() && self.s[j].is_ascii_digit() {
            j += 1;
        }
        while j < self.s.len() && self.s[j].is_ascii_whitespace() {
            j += 1;
        }
        j > d0 && j < self.s.len() && self.s[j] == b':'
    }

    fn seq(&mut self) -> Result<Seq, STypeParseError> {
        let mut fin = BTreeMap::new();
        let mut tail = None;
        if self.eat(")") {
            return Ok(Seq { fin, tail });
        }
        loop {
            if self.eat("k>=") {
                let n = self.number().filter(|&n| n >= 2).ok_or(()).or_else(|_| self.err("expected a track ≥ 2"))?;
                if !self.eat(":") {
                    return self.err("expected `:`");
                }
                tail = Some((n, Box::new(self.ty()?)));
                if !self.eat(")") {
                    return self.err("a cofinite family must come last");
                }
                break;
            }
            let k = match self.number() {
                Some(k) if k >= 2 => k,
                _ => return self.err("expected a track ≥ 2"),
            };
            if !self.eat(":") {
                return self.err("expected `:`");
            }
            let t = self.ty()?;
            if fin.insert(k, t).is_some() {
                return self.err("duplicate track");
            }
            if self.eat(")") {
                break;
            }
            if !self.eat(",") {
                return self.err("expected `,` or `)`");
            }
        }
        if let Some((n, _)) = &tail {
            if fin.keys().any(|k| k >= n) {
                return self.err("finite track inside the cofinite family");
            }
        }
        Ok(Seq { fin, tail })
    }

    fn ty(&mut self) -> Result<SType, STypeParseError> {
        self.ws();
        if self.eat("(") {
            if self.looks_like_seq() {
                let dom = self.seq()?;
                if !(self.eat("->") || self.eat("→")) {
                    return self.err("a sequence must be followed by `->`");
                }
                let cod = self.ty()?;
                return Ok(SType::arrow(dom, cod));
            }
            let t = self.ty()?;
            if !self.eat(")") {
                return self.err("expected `)`");
            }
            return Ok(t);
        }
        if self.eat("^") {
            let i = self.number().ok_or(()).or_else(|_| self.err("expected an index"))?;
            return Ok(SType::Back(i as u32));
        }
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || b"_'".contains(&self.s[self.i])) {
            self.i += 1;
        }
        // `o′` as a synonym of `o'`.
        if self.s[self.i..].starts_with("′".as_bytes()) && self.i > start {
            self.i += "′".len();
            let name = format!("{}'", String::from_utf8_lossy(&self.s[start..self.i - "′".len()]));
            return Ok(SType::Atom(name));
        }
        if start == self.i {
            return self.err("expected a type");
        }
        Ok(SType::Atom(String::from_utf8_lossy(&self.s[start..self.i]).into_owned()))
    }
}

/// Parses `o`, `(2:o, 3:o') -> o`, `() -> o`, `(k>=2: ^0) -> o`.
pub fn parse_stype(src: &str) -> Result<SType, STypeParseError> {
    let mut p = Parser { s: src.as_bytes(), i: 0 };
    let t = p.ty()?;
    p.ws();
    if p.i != p.s.len() {
        return p.err("trailing input");
    }
    check_backrefs(&t, 0).map_err(|msg| STypeParseError { at: 0, msg })?;
    Ok(t)
}

/// Parses a bare sequence `(k:T, …)`.
pub fn parse_seq(src: &str) -> Result<Seq, STypeParseError> {
    let mut p = Parser { s: src.as_bytes(), i: 0 };
    if !p.eat("(") {
        return p.err("expected `(`");
    }
    let s = p.seq()?;
    p.ws();
    if p.i != p.s.len() {
        return p.err("trailing input");
    }
    Ok(s)
}

fn check_backrefs(t: &SType, depth: u32) -> Result<(), String> {
    match t {
        SType::Atom(_) => Ok(()),
        SType::Back(i) if *i < depth => Ok(()),
        SType::Back(i) => Err(format!("^{i} has no enclosing arrow")),
        SType::Arrow(f, c) => {
            for (_, s) in f.entries() {
                check_backrefs(s, depth + 1)?;
            }
            if let Some((_, s)) = f.tail() {
                check_backrefs(s, depth + 1)?;
            }
            // A back-reference in the codomain spine would unfold to 1^ω.
            if spine_backref(c, 0) {
                return Err("back-reference along the codomain spine (infinite 1-branch)".into());
            }
            check_backrefs(c, depth + 1)
        }
    }
}

fn spine_backref(t: &SType, under: u32) -> bool {
    match t {
        SType::Back(i) => *i <= under,
        SType::Arrow(_, c) => spine_backref(c, under + 1),
        SType::Atom(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pos::pos;

    fn st(s: &str) -> SType {
        parse_stype(s).unwrap()
    }

    #[test]
    fn syntax_round_trip() {
        for s in ["o", "o'", "() -> o", "(2:o, 3:o') -> o", "(8:o, 3:o', 2:o) -> o'", "(2:(3:o) -> o) -> (4:o) -> o", "(k>=2:^0) -> o"] {
            let t = st(s);
            assert_eq!(st(&t.to_string()), t, "{s}");
        }
        assert_eq!(st("(2:o′)→o"), st("(2:o') -> o"));
        assert!(parse_stype("(1:o) -> o").is_err());
        assert!(parse_stype("(2:o, 2:o) -> o").is_err());
        assert!(parse_stype("^0").is_err());
        assert!(parse_stype("(2:o) -> ^0").is_err());
        assert_eq!(st("((2:o) -> o)"), st("(2:o) -> o"));
    }

    #[test]
    fn support_decomposition() {
        let s_ex = st("(8:o, 3:o', 2:o) -> o'");
        let expect: BTreeSet<Pos> = ["", "1", "2", "3", "8"].into_iter().map(pos).collect();
        assert_eq!(s_ex.support(), expect);
        assert_eq!(s_ex.symbol_at(&pos("1")), Some(Sym::Atom("o'".into())));
        assert_eq!(s_ex.symbol_at(&Pos::eps()), Some(Sym::Arrow));
        assert_eq!(s_ex.symbol_at(&pos("4")), None);
    }

    #[test]
    fn regular_type_unfolds() {
        let rho = st("(k>=2:^0) -> o");
        assert!(!rho.is_finite());
        assert_eq!(rho.symbol_at(&pos("1")), Some(Sym::Atom("o".into())));
        assert_eq!(rho.symbol_at(&pos("7.5.9")), Some(Sym::Arrow));
        assert_eq!(rho.symbol_at(&pos("7.5.1")), Some(Sym::Atom("o".into())));
        assert_eq!(rho.symbol_at(&pos("7.1.1")), None);
        assert_eq!(rho.collapse(), None);
        assert!(rho.support_upto(2).contains(&pos("2.1")));
    }

    #[test]
    fn disjoint_union_conflicts() {
        let a = parse_seq("(2:o, 5:o)").unwrap();
        let b = parse_seq("(3:o')").unwrap();
        let c = parse_seq("(5:o')").unwrap();
        assert_eq!(a.disjoint_union(&b).unwrap(), b.disjoint_union(&a).unwrap());
        assert_eq!(a.disjoint_union(&c), Err(5));
        let tail = Seq::empty().with_tail(4, SType::o());
        assert_eq!(a.disjoint_union(&tail), Err(5));
        assert!(b.disjoint_union(&tail).is_ok());
    }

    #[test]
    fn collapse_and_canonical_lift() {
        let s_ex = st("(8:o, 3:o', 2:o) -> o'");
        assert_eq!(s_ex.collapse().unwrap().to_string(), "[o, o, o'] -> o'");
        let r = crate::r0::parse_rtype("[o, o] -> o").unwrap();
        assert_eq!(SType::canonical_lift(&r), st("(2:o, 3:o) -> o"));
        assert_eq!(SType::canonical_lift(&r).collapse().unwrap(), r);
    }

    #[test]
    fn order_and_lattice() {
        let small = st("(2:() -> o) -> o");
        let big = st("(2:(2:o) -> o, 3:o) -> o");
        assert!(small.leq(&big) && !big.leq(&small));
        assert_eq!(small.join(&big).unwrap(), big);
        assert_eq!(small.meet(&big).unwrap(), small);
        assert!(st("o").join(&st("o'")).is_none());
    }

    #[test]
    fn unforgetful_polarity() {
        let x = Var::Free("x".into());
        let c = SCtx::single(x, 2, st("() -> o"));
        assert!(!is_unforgetful_s(&c, &SType::o()));
        assert!(is_unforgetful_s(&SCtx::empty(), &st("(2:o) -> o")));
        assert!(is_unforgetful_s(&SCtx::empty(), &st("() -> o")));
        assert!(!is_unforgetful_s(&SCtx::empty(), &st("(2:() -> o) -> o")));
    }
}
