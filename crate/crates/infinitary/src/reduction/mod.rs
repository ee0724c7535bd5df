//! Strategies over positional β-reduction and recorded reduction paths.

pub mod bohm;

use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::Serialize;

use crate::pos::Pos;
use crate::term::{Label, Node, NodeId, StepError, Term, Var};

pub use bohm::{bohm_prefix, BohmNode, BottomKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReductionError {
    #[error("term has no head: its spine of abstractions and applications is infinite")]
    Headless,
    #[error("term is already normal")]
    AlreadyNormal,
    #[error("term is not 001")]
    Non001,
    #[error("no leftmost-outermost redex: the leftmost branch reaching a redex is infinite")]
    NoLeftmostRedex,
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Shape of a head normal form `λx1…xp. h t1…tq`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeadNormal {
    pub p: usize,
    /// Relative to the head position, so `Bound(i)` with `i < p` is one of
    /// the `x_j`.
    pub head: Var,
    pub q: usize,
}

#[derive(Debug, Clone)]
pub enum HeadOutcome {
    Reduced { term: Term, at: Pos },
    Normal(HeadNormal),
}

/// Position of the head redex, or the head normal form decomposition.
pub fn head_redex(t: &Term) -> Result<Result<Pos, HeadNormal>, ReductionError> {
    let mut n = t.root();
    let mut at = Pos::eps();
    let mut seen: HashSet<NodeId> = HashSet::new();
    let mut p = 0;
    while let Node::Abs { body, .. } = t.node(n) {
        if !seen.insert(n) {
            return Err(ReductionError::Headless);
        }
        p += 1;
        at.push(0);
        n = *body;
    }
    let mut q = 0;
    loop {
        if !seen.insert(n) {
            return Err(ReductionError::Headless);
        }
        match t.node(n) {
            Node::App(l, _) => {
                if matches!(t.node(*l), Node::Abs { .. }) {
                    return Ok(Ok(at));
                }
                q += 1;
                at.push(1);
                n = *l;
            }
            Node::Var(v) => return Ok(Err(HeadNormal { p, head: v.clone(), q })),
            Node::Abs { .. } => unreachable!("abstraction under application spine is a redex"),
        }
    }
}

pub fn head_step(t: &Term) -> Result<HeadOutcome, ReductionError> {
    match head_redex(t)? {
        Ok(at) => Ok(HeadOutcome::Reduced { term: t.reduce_at(&at)?, at }),
        Err(hnf) => Ok(HeadOutcome::Normal(hnf)),
    }
}

/// Minimal applicative depth of a redex, `None` for normal forms.
pub fn adr(t: &Term) -> Option<usize> {
    // 0-1 breadth-first search: argument edges cost 1, others 0.
    let mut dist: Vec<Option<usize>> = vec![None; t.node_count()];
    let mut dq = VecDeque::from([(t.root(), 0usize)]);
    let mut best: Option<usize> = None;
    while let Some((n, d)) = dq.pop_front() {
        if dist[n as usize].is_some_and(|old| old <= d) {
            continue;
        }
        dist[n as usize] = Some(d);
        if t.is_redex_node(n) {
            best = Some(best.map_or(d, |b| b.min(d)));
        }
        for (letter, m) in t.edges(n) {
            if letter == 2 {
                dq.push_back((m, d + 1));
            } else {
                dq.push_front((m, d));
            }
        }
    }
    best
}

/// Every redex position of applicative depth `adr(t)`, in left-to-right
/// order. Nested ones (inside the function part of another) are included;
/// this enumerates the choices of the nondeterministic →hh relation.
pub fn minimal_depth_redexes(t: &Term) -> Result<Vec<Pos>, ReductionError> {
    if !t.is_001() {
        return Err(ReductionError::Non001);
    }
    let Some(d) = adr(t) else { return Ok(vec![]) };
    let mut out = Vec::new();
    let mut stack = vec![(t.root(), Pos::eps(), 0usize)];
    while let Some((n, p, depth)) = stack.pop() {
        if depth == d && t.is_redex_node(n) {
            out.push(p.clone());
        }
        let mut kids = t.edges(n);
        kids.reverse();
        for (letter, m) in kids {
            let nd = depth + usize::from(letter == 2);
            if nd <= d {
                stack.push((m, p.child(letter), nd));
            }
        }
    }
    Ok(out)
}

/// Outermost minimal-depth redexes; these are pairwise disjoint.
pub fn hh_redexes(t: &Term) -> Result<Vec<Pos>, ReductionError> {
    let all = minimal_depth_redexes(t)?;
    Ok(all.iter().filter(|b| !all.iter().any(|a| a != *b && a.is_prefix_of(b))).cloned().collect())
}

/// Contracts every outermost redex of minimal applicative depth at once.
pub fn hh_parallel_step(t: &Term) -> Result<(Term, Vec<Pos>), ReductionError> {
    let redexes = hh_redexes(t)?;
    if redexes.is_empty() {
        return Err(ReductionError::AlreadyNormal);
    }
    let mut cur = t.clone();
    for b in &redexes {
        cur = cur.reduce_at(b)?;
    }
    Ok((cur, redexes))
}

/// The first redex in pre-order (function side before argument side).
pub fn leftmost_redex(t: &Term) -> Result<Option<Pos>, ReductionError> {
    let n = t.node_count();
    // has[i]: some redex is reachable from node i
    let mut has: Vec<bool> = (0..n as u32).map(|i| t.is_redex_node(i)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n as u32 {
            if !has[i as usize] && t.edges(i).iter().any(|(_, m)| has[*m as usize]) {
                has[i as usize] = true;
                changed = true;
            }
        }
    }
    if !has[t.root() as usize] {
        return Ok(None);
    }
    let mut cur = t.root();
    let mut at = Pos::eps();
    let mut seen = HashSet::new();
    loop {
        if t.is_redex_node(cur) {
            return Ok(Some(at));
        }
        if !seen.insert(cur) {
            return Err(ReductionError::NoLeftmostRedex);
        }
        let (letter, next) = match t.node(cur) {
            Node::Abs { body, .. } => (0, *body),
            Node::App(l, r) => {
                if has[*l as usize] {
                    (1, *l)
                } else {
                    (2, *r)
                }
            }
            Node::Var(_) => unreachable!("variables reach no redex"),
        };
        at.push(letter);
        cur = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Head,
    Leftmost,
    Hh,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "head" => Ok(Strategy::Head),
            "lo" | "leftmost" => Ok(Strategy::Leftmost),
            "hh" => Ok(Strategy::Hh),
            _ => Err(format!("unknown strategy `{s}` (head | lo | hh)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Step {
    /// One position, or several disjoint ones for a parallel hh step.
    pub redexes: Vec<Pos>,
    /// Smallest applicative depth among `redexes`.
    pub depth: usize,
    pub result: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathEnd {
    NormalForm,
    /// Head strategy stopped at a head normal form that still has redexes.
    HeadNormalForm,
    /// A term already seen on this path came back.
    Stalled,
    FuelExhausted,
    Headless,
    NoLeftmostRedex,
}

#[derive(Debug, Clone)]
pub struct Path {
    pub start: Term,
    pub strategy: Strategy,
    pub steps: Vec<Step>,
    pub end: PathEnd,
}

impl Path {
    pub fn last_term(&self) -> &Term {
        self.steps.last().map_or(&self.start, |s| &s.result)
    }

    /// The term before step `i` (`i == steps.len()` gives the last term).
    pub fn term_at(&self, i: usize) -> &Term {
        if i == 0 {
            &self.start
        } else {
            &self.steps[i - 1].result
        }
    }

    pub fn depths(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.depth).collect()
    }

    /// A posteriori productivity: no loop was found, depths never decrease,
    /// and the path either normalised or went strictly deeper than it started.
    pub fn productive(&self) -> bool {
        if matches!(self.end, PathEnd::Stalled | PathEnd::Headless | PathEnd::NoLeftmostRedex) {
            return false;
        }
        let d = self.depths();
        if d.windows(2).any(|w| w[1] < w[0]) {
            return false;
        }
        self.end == PathEnd::NormalForm || d.is_empty() || d.last() > d.first()
    }

    /// The path as single-redex steps: `(before, position, after)`.
    pub fn sequential(&self) -> Result<Vec<(Term, Pos, Term)>, StepError> {
        let mut out = Vec::new();
        let mut cur = self.start.clone();
        for s in &self.steps {
            for b in &s.redexes {
                let next = cur.reduce_at(b)?;
                out.push((cur, b.clone(), next.clone()));
                cur = next;
            }
        }
        Ok(out)
    }

    /// Builds a path from explicit single positions.
    pub fn from_positions(start: Term, positions: &[Pos]) -> Result<Path, StepError> {
        let mut steps = Vec::new();
        let mut cur = start.clone();
        for b in positions {
            cur = cur.reduce_at(b)?;
            steps.push(Step { redexes: vec![b.clone()], depth: b.ad(), result: cur.clone() });
        }
        let end = if cur.is_normal() { PathEnd::NormalForm } else { PathEnd::FuelExhausted };
        Ok(Path { start, strategy: Strategy::Leftmost, steps, end })
    }
}

/// Runs `strategy` for at most `fuel` steps.
pub fn run_path(t: &Term, strategy: Strategy, fuel: usize) -> Result<Path, ReductionError> {
    if !t.is_001() {
        return Err(ReductionError::Non001);
    }
    let mut steps = Vec::new();
    let mut cur = t.clone();
    let mut seen: HashSet<String> = HashSet::from([cur.canonical_key()]);
    let end = loop {
        let redexes = match strategy {
            Strategy::Head => match head_redex(&cur) {
                Err(ReductionError::Headless) => break PathEnd::Headless,
                Err(e) => return Err(e),
                Ok(Ok(b)) => vec![b],
                Ok(Err(_)) => {
                    break if cur.is_normal() { PathEnd::NormalForm } else { PathEnd::HeadNormalForm };
                }
            },
            Strategy::Leftmost => match leftmost_redex(&cur) {
                Err(ReductionError::NoLeftmostRedex) => break PathEnd::NoLeftmostRedex,
                Err(e) => return Err(e),
                Ok(None) => break PathEnd::NormalForm,
                Ok(Some(b)) => vec![b],
            },
            Strategy::Hh => {
                let r = hh_redexes(&cur)?;
                if r.is_empty() {
                    break PathEnd::NormalForm;
                }
                r
            }
        };
        if steps.len() >= fuel {
            break PathEnd::FuelExhausted;
        }
        let mut next = cur.clone();
        for b in &redexes {
            next = next.reduce_at(b)?;
        }
        let depth = redexes.iter().map(Pos::ad).min().unwrap_or(0);
        steps.push(Step { redexes, depth, result: next.clone() });
        cur = next;
        if !seen.insert(cur.canonical_key()) {
            break PathEnd::Stalled;
        }
    };
    Ok(Path { start: t.clone(), strategy, steps, end })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitPrefix {
    Stable(BTreeMap<Pos, Label>),
    NotStable,
}

/// The part of the limit of `path` at applicative depth ≤ `d`, when the
/// recorded steps already show that it no longer changes.
pub fn limit_prefix(path: &Path, d: usize) -> Result<LimitPrefix, ReductionError> {
    let last = path.last_term();
    let settled = if path.end == PathEnd::NormalForm {
        true
    } else {
        match path.steps.iter().rposition(|s| s.depth <= d) {
            Some(i) => i + 1 < path.steps.len(),
            None => !path.steps.is_empty(),
        }
    };
    if !settled {
        return Ok(LimitPrefix::NotStable);
    }
    let labels = last.labels_to_depth(d).map_err(|_| ReductionError::Non001)?;
    Ok(LimitPrefix::Stable(labels))
}
