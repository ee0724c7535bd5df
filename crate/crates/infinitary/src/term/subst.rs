//! Index shifting, β-substitution and positional rewriting on term graphs.
//!
//! All operations copy on write: nodes reached only through unchanged
//! subgraphs are shared, and memo tables keyed by (node, binder offset)
//! make cyclic inputs terminate.

use std::collections::HashMap;

use super::{Node, NodeId, Term, Var};
use crate::pos::Pos;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("no redex at position {0}")]
    NotARedex(Pos),
    #[error("position {0} is not in the support")]
    PositionOutOfSupport(Pos),
    #[error("substitution would produce a non-regular term")]
    NonRegular,
}

const HOLE: Node = Node::Var(Var::Bound(u32::MAX));

struct Arena {
    nodes: Vec<Node>,
    loose: Vec<Option<i64>>,
    shift_memo: HashMap<(NodeId, u32, u32), NodeId>,
    subst_memo: HashMap<(NodeId, u32), NodeId>,
}

impl Arena {
    fn new(nodes: Vec<Node>) -> Arena {
        let loose = Term::raw(nodes.clone(), 0).loose_bounds();
        Arena { nodes, loose, shift_memo: HashMap::new(), subst_memo: HashMap::new() }
    }

    fn alloc(&mut self) -> NodeId {
        self.nodes.push(HOLE);
        self.nodes.len() as u32 - 1
    }

    fn untouched(&self, n: NodeId, cutoff: u32) -> bool {
        match self.loose.get(n as usize).copied().flatten() {
            None => true,
            Some(v) => v < cutoff as i64,
        }
    }

    /// Adds `d` to every index ≥ `c` escaping `n`.
    fn shift(&mut self, n: NodeId, d: u32, c: u32) -> NodeId {
        if d == 0 || self.untouched(n, c) {
            return n;
        }
        if let Some(&m) = self.shift_memo.get(&(n, d, c)) {
            return m;
        }
        let node = self.nodes[n as usize].clone();
        if let Node::Var(Var::Bound(i)) = node {
            let out = Node::Var(Var::Bound(if i >= c { i + d } else { i }));
            self.nodes.push(out);
            let id = self.nodes.len() as u32 - 1;
            self.shift_memo.insert((n, d, c), id);
            return id;
        }
        let id = self.alloc();
        self.shift_memo.insert((n, d, c), id);
        let out = match node {
            Node::Abs { hint, body } => Node::Abs { hint, body: self.shift(body, d, c + 1) },
            Node::App(l, r) => {
                let l = self.shift(l, d, c);
                let r = self.shift(r, d, c);
                Node::App(l, r)
            }
            Node::Var(_) => unreachable!(),
        };
        self.nodes[id as usize] = out;
        id
    }

    /// `n[j := s]` where `s` lives at the binder depth of the redex.
    fn subst(&mut self, n: NodeId, j: u32, s: NodeId) -> NodeId {
        if self.untouched(n, j) {
            return n;
        }
        if let Some(&m) = self.subst_memo.get(&(n, j)) {
            return m;
        }
        let node = self.nodes[n as usize].clone();
        if let Node::Var(Var::Bound(i)) = node {
            let id = if i == j {
                self.shift(s, j, 0)
            } else {
                self.nodes.push(Node::Var(Var::Bound(if i > j { i - 1 } else { i })));
                self.nodes.len() as u32 - 1
            };
            self.subst_memo.insert((n, j), id);
            return id;
        }
        let id = self.alloc();
        self.subst_memo.insert((n, j), id);
        let out = match node {
            Node::Abs { hint, body } => Node::Abs { hint, body: self.subst(body, j + 1, s) },
            Node::App(l, r) => {
                let l = self.subst(l, j, s);
                let r = self.subst(r, j, s);
                Node::App(l, r)
            }
            Node::Var(_) => unreachable!(),
        };
        self.nodes[id as usize] = out;
        id
    }
}

/// Rebuilds the path from the root to `b`, replacing the node at `b` by `new`.
fn path_copy(nodes: &mut Vec<Node>, path: &[NodeId], b: &Pos, new: NodeId) -> NodeId {
    let mut cur = new;
    for (i, &letter) in b.letters().iter().enumerate().rev() {
        let n = path[i];
        let copy = match (&nodes[n as usize], letter) {
            (Node::Abs { hint, .. }, 0) => Node::Abs { hint: hint.clone(), body: cur },
            (Node::App(_, r), 1) => Node::App(cur, *r),
            (Node::App(l, _), _) => Node::App(*l, cur),
            _ => unreachable!("path letters follow the graph"),
        };
        nodes.push(copy);
        cur = nodes.len() as u32 - 1;
    }
    cur
}

impl Term {
    /// Contracts the redex at `b`.
    pub fn reduce_at(&self, b: &Pos) -> Result<Term, StepError> {
        let path = self.path_nodes(b).ok_or_else(|| StepError::PositionOutOfSupport(b.clone()))?;
        let n = *path.last().unwrap();
        let (body, arg) = match self.node(n) {
            Node::App(l, r) => match self.node(*l) {
                Node::Abs { body, .. } => (*body, *r),
                _ => return Err(StepError::NotARedex(b.clone())),
            },
            _ => return Err(StepError::NotARedex(b.clone())),
        };
        let mut arena = Arena::new(self.nodes.clone());
        let contractum = arena.subst(body, 0, arg);
        let mut nodes = arena.nodes;
        let root = path_copy(&mut nodes, &path, b, contractum);
        Ok(Term::raw(nodes, root).gc())
    }

    /// Replaces the subterm at `b` by `u`. Indices of `u` are taken
    /// relative to the binders above `b`.
    pub fn replace_at(&self, b: &Pos, u: &Term) -> Result<Term, StepError> {
        let path = self.path_nodes(b).ok_or_else(|| StepError::PositionOutOfSupport(b.clone()))?;
        let (mut nodes, uroot) = self.merged(u);
        let root = path_copy(&mut nodes, &path, b, uroot);
        Ok(Term::raw(nodes, root).gc())
    }

    /// Adds `d` to every escaping bound index.
    pub fn shifted(&self, d: u32) -> Term {
        let mut arena = Arena::new(self.nodes.clone());
        let root = arena.shift(self.root, d, 0);
        Term::raw(arena.nodes, root).gc()
    }

    /// `(λ.self) u` contracted: substitutes `u` for index 0.
    pub fn instantiate(&self, u: &Term) -> Term {
        let (nodes, uroot) = self.merged(u);
        let mut arena = Arena::new(nodes);
        let root = arena.subst(self.root, 0, uroot);
        Term::raw(arena.nodes, root).gc()
    }
}

/// `t[u/x]` for the free name `x`. Loose indices of `u` are shifted under
/// binders; a cyclic `t` whose `x` sits below an abstraction on a cycle
/// would then need unboundedly many copies, which is reported as
/// non-regular.
pub(crate) fn try_substitute_free(t: &Term, x: &str, u: &Term) -> Result<Term, StepError> {
    let (nodes, uroot) = t.merged(u);
    let mut w = FreeSubst {
        has_x: reaches(&nodes, &Node::Var(Var::Free(x.to_string()))),
        target: Node::Var(Var::Free(x.to_string())),
        // Without loose indices in `u` the binder depth is irrelevant.
        track_depth: u.loose_bound().is_some(),
        limit: nodes.len() as u32 + 1,
        memo: HashMap::new(),
        uroot,
        arena: Arena::new(nodes),
    };
    let root = w.go(t.root, 0)?;
    Ok(Term::raw(w.arena.nodes, root).gc())
}

struct FreeSubst {
    arena: Arena,
    memo: HashMap<(NodeId, u32), NodeId>,
    has_x: Vec<bool>,
    target: Node,
    track_depth: bool,
    limit: u32,
    uroot: NodeId,
}

impl FreeSubst {
    fn go(&mut self, n: NodeId, depth: u32) -> Result<NodeId, StepError> {
        if !self.has_x[n as usize] {
            return Ok(n);
        }
        if depth > self.limit {
            return Err(StepError::NonRegular);
        }
        if let Some(&m) = self.memo.get(&(n, depth)) {
            return Ok(m);
        }
        let node = self.arena.nodes[n as usize].clone();
        if node == self.target {
            let id = self.arena.shift(self.uroot, depth, 0);
            self.memo.insert((n, depth), id);
            return Ok(id);
        }
        let id = self.arena.alloc();
        self.memo.insert((n, depth), id);
        let out = match node {
            Node::Abs { hint, body } => {
                let inner = if self.track_depth { depth + 1 } else { 0 };
                Node::Abs { hint, body: self.go(body, inner)? }
            }
            Node::App(l, r) => {
                let l = self.go(l, depth)?;
                let r = self.go(r, depth)?;
                Node::App(l, r)
            }
            Node::Var(_) => unreachable!(),
        };
        self.arena.nodes[id as usize] = out;
        Ok(id)
    }
}

/// `out[n]` iff a node equal to `target` is reachable from `n`.
fn reaches(nodes: &[Node], target: &Node) -> Vec<bool> {
    let mut out: Vec<bool> = nodes.iter().map(|n| n == target).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..nodes.len() {
            if out[i] {
                continue;
            }
            let v = match &nodes[i] {
                Node::Var(_) => false,
                Node::Abs { body, .. } => out[*body as usize],
                Node::App(l, r) => out[*l as usize] || out[*r as usize],
            };
            if v {
                out[i] = true;
                changed = true;
            }
        }
    }
    out
}
