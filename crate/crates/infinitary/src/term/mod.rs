//! Finite and regular infinite λ-terms.
//!
//! A term is a rooted graph whose unfolding is the (possibly infinite)
//! syntax tree. Bound variables are nameless: `Bound(i)` refers to the
//! `i`-th enclosing abstraction on the path from the root, so two terms
//! are α-equivalent exactly when their graphs are bisimilar.

mod subst;
pub mod syntax;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::pos::Pos;

pub use subst::StepError;
pub use syntax::{parse_term, print_term, ParseError};

pub type NodeId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Var {
    Bound(u32),
    Free(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Var(Var),
    /// `hint` is the surface binder name; it carries no meaning.
    Abs { hint: String, body: NodeId },
    App(NodeId, NodeId),
}

/// The constructor found at a position of the unfolding.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Var(Var),
    Abs,
    App,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("term is not 001: a cycle avoids argument edges")]
    Non001,
    #[error("position {0} is not in the support")]
    PositionOutOfSupport(Pos),
    #[error("malformed graph: {0}")]
    Malformed(String),
}

#[derive(Clone)]
pub struct Term {
    nodes: Vec<Node>,
    root: NodeId,
}

impl Term {
    /// Builds a term from raw nodes, checking that every edge is in range.
    pub fn from_nodes(nodes: Vec<Node>, root: NodeId) -> Result<Term, TermError> {
        let n = nodes.len() as u32;
        let ok = |id: NodeId| id < n;
        if !ok(root) {
            return Err(TermError::Malformed(format!("root {root} out of range")));
        }
        for (i, node) in nodes.iter().enumerate() {
            let good = match node {
                Node::Var(_) => true,
                Node::Abs { body, .. } => ok(*body),
                Node::App(l, r) => ok(*l) && ok(*r),
            };
            if !good {
                return Err(TermError::Malformed(format!("node {i} has a dangling edge")));
            }
        }
        Ok(Term { nodes, root }.gc())
    }

    pub(crate) fn raw(nodes: Vec<Node>, root: NodeId) -> Term {
        Term { nodes, root }
    }

    pub fn var(name: &str) -> Term {
        Term::raw(vec![Node::Var(Var::Free(name.to_string()))], 0)
    }

    pub fn bvar(i: u32) -> Term {
        Term::raw(vec![Node::Var(Var::Bound(i))], 0)
    }

    /// `λhint.body`, where `body` already uses `Bound(0)` for the new binder.
    pub fn lam(hint: &str, body: Term) -> Term {
        let mut nodes = body.nodes;
        let b = body.root;
        nodes.push(Node::Abs { hint: hint.to_string(), body: b });
        let root = nodes.len() as u32 - 1;
        Term::raw(nodes, root)
    }

    pub fn app(f: Term, a: Term) -> Term {
        let mut nodes = f.nodes;
        let off = nodes.len() as u32;
        nodes.extend(a.nodes.into_iter().map(|n| offset_node(n, off)));
        nodes.push(Node::App(f.root, a.root + off));
        let root = nodes.len() as u32 - 1;
        Term::raw(nodes, root)
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn label_of(&self, id: NodeId) -> Label {
        match self.node(id) {
            Node::Var(v) => Label::Var(v.clone()),
            Node::Abs { .. } => Label::Abs,
            Node::App(..) => Label::App,
        }
    }

    /// Follows one edge of the unfolding.
    pub fn step(&self, id: NodeId, letter: u64) -> Option<NodeId> {
        match (self.node(id), letter) {
            (Node::Abs { body, .. }, 0) => Some(*body),
            (Node::App(l, _), 1) => Some(*l),
            (Node::App(_, r), 2) => Some(*r),
            _ => None,
        }
    }

    pub fn node_at(&self, b: &Pos) -> Option<NodeId> {
        let mut cur = self.root;
        for &k in b.letters() {
            cur = self.step(cur, k)?;
        }
        Some(cur)
    }

    /// Node ids visited from the root to `b` inclusive.
    pub fn path_nodes(&self, b: &Pos) -> Option<Vec<NodeId>> {
        let mut cur = self.root;
        let mut out = vec![cur];
        for &k in b.letters() {
            cur = self.step(cur, k)?;
            out.push(cur);
        }
        Some(out)
    }

    pub fn label_at(&self, b: &Pos) -> Option<Label> {
        self.node_at(b).map(|id| self.label_of(id))
    }

    pub fn in_support(&self, b: &Pos) -> bool {
        self.node_at(b).is_some()
    }

    /// Number of abstractions crossed on the way from the root to `b`.
    pub fn binders_above(&self, b: &Pos) -> Option<usize> {
        let path = self.path_nodes(b)?;
        Some(path[..path.len() - 1].iter().filter(|&&n| matches!(self.node(n), Node::Abs { .. })).count())
    }

    /// Binder hints of the abstractions above `b`, innermost first.
    pub fn binder_hints_above(&self, b: &Pos) -> Option<Vec<String>> {
        let path = self.path_nodes(b)?;
        let mut out = Vec::new();
        for &n in path[..path.len() - 1].iter().rev() {
            if let Node::Abs { hint, .. } = self.node(n) {
                out.push(hint.clone());
            }
        }
        Some(out)
    }

    /// The subterm rooted at `b`. Bound indices pointing above `b` stay loose.
    pub fn subterm(&self, b: &Pos) -> Option<Term> {
        let id = self.node_at(b)?;
        Some(Term { nodes: self.nodes.clone(), root: id }.gc())
    }

    pub fn reachable(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n as usize], true) {
                continue;
            }
            order.push(n);
            match self.node(n) {
                Node::Var(_) => {}
                Node::Abs { body, .. } => stack.push(*body),
                Node::App(l, r) => {
                    stack.push(*r);
                    stack.push(*l);
                }
            }
        }
        order
    }

    /// Drops unreachable nodes and renumbers in depth-first order.
    pub fn gc(&self) -> Term {
        let order = self.reachable();
        let mut map = HashMap::with_capacity(order.len());
        for (i, &n) in order.iter().enumerate() {
            map.insert(n, i as u32);
        }
        let nodes = order
            .iter()
            .map(|&n| match self.node(n) {
                Node::Var(v) => Node::Var(v.clone()),
                Node::Abs { hint, body } => Node::Abs { hint: hint.clone(), body: map[body] },
                Node::App(l, r) => Node::App(map[l], map[r]),
            })
            .collect();
        Term { nodes, root: 0 }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// True iff the unfolding is finite.
    pub fn is_finite(&self) -> bool {
        !self.has_cycle(|_| true)
    }

    /// Every cycle crosses an argument edge.
    pub fn is_001(&self) -> bool {
        !self.has_cycle(|letter| letter != 2)
    }

    fn has_cycle(&self, follow: impl Fn(u64) -> bool) -> bool {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color = vec![0u8; self.nodes.len()];
        let reach = self.reachable();
        for &start in &reach {
            if color[start as usize] != 0 {
                continue;
            }
            let mut stack: Vec<(NodeId, usize)> = vec![(start, 0)];
            color[start as usize] = 1;
            while let Some(&mut (n, ref mut i)) = stack.last_mut() {
                let edges = self.edges(n);
                if *i < edges.len() {
                    let (letter, m) = edges[*i];
                    *i += 1;
                    if !follow(letter) {
                        continue;
                    }
                    match color[m as usize] {
                        0 => {
                            color[m as usize] = 1;
                            stack.push((m, 0));
                        }
                        1 => return true,
                        _ => {}
                    }
                } else {
                    color[n as usize] = 2;
                    stack.pop();
                }
            }
        }
        false
    }

    pub fn edges(&self, n: NodeId) -> Vec<(u64, NodeId)> {
        match self.node(n) {
            Node::Var(_) => vec![],
            Node::Abs { body, .. } => vec![(0, *body)],
            Node::App(l, r) => vec![(1, *l), (2, *r)],
        }
    }

    /// All positions of the unfolding with applicative depth at most `d`.
    pub fn support_to_depth(&self, d: usize) -> Result<BTreeSet<Pos>, TermError> {
        if !self.is_001() {
            return Err(TermError::Non001);
        }
        let mut out = BTreeSet::new();
        let mut stack = vec![(self.root, Pos::eps(), 0usize)];
        while let Some((n, p, depth)) = stack.pop() {
            for (letter, m) in self.edges(n) {
                let nd = depth + usize::from(letter == 2);
                if nd <= d {
                    stack.push((m, p.child(letter), nd));
                }
            }
            out.insert(p);
        }
        Ok(out)
    }

    /// Labelled restriction of the unfolding to applicative depth `d`.
    pub fn labels_to_depth(&self, d: usize) -> Result<BTreeMap<Pos, Label>, TermError> {
        let supp = self.support_to_depth(d)?;
        Ok(supp
            .into_iter()
            .map(|p| {
                let l = self.label_at(&p).expect("support position");
                (p, l)
            })
            .collect())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.reachable()
            .into_iter()
            .filter_map(|n| match self.node(n) {
                Node::Var(Var::Free(x)) => Some(x.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn is_redex_node(&self, n: NodeId) -> bool {
        matches!(self.node(n), Node::App(l, _) if matches!(self.node(*l), Node::Abs { .. }))
    }

    pub fn is_redex_at(&self, b: &Pos) -> bool {
        self.node_at(b).is_some_and(|n| self.is_redex_node(n))
    }

    /// No redex anywhere in the unfolding (decidable because the graph is finite).
    pub fn is_normal(&self) -> bool {
        !self.reachable().into_iter().any(|n| self.is_redex_node(n))
    }

    /// For each node, the largest index that escapes it: the maximum over
    /// variable occurrences below of `index − abstractions crossed`, or `None`
    /// when no bound variable escapes.
    pub(crate) fn loose_bounds(&self) -> Vec<Option<i64>> {
        let n = self.nodes.len();
        let mut val: Vec<Option<i64>> = vec![None; n];
        // Cycles can only lower the value, so longest-path relaxation converges.
        let mut changed = true;
        let mut rounds = 0;
        while changed && rounds <= n + 1 {
            changed = false;
            rounds += 1;
            for i in 0..n {
                let new = match &self.nodes[i] {
                    Node::Var(Var::Bound(k)) => Some(*k as i64),
                    Node::Var(Var::Free(_)) => None,
                    Node::Abs { body, .. } => val[*body as usize].map(|v| v - 1),
                    Node::App(l, r) => max_opt(val[*l as usize], val[*r as usize]),
                };
                if new > val[i] {
                    val[i] = new;
                    changed = true;
                }
            }
        }
        val.into_iter().map(|v| v.filter(|&x| x >= 0)).collect()
    }

    /// Largest bound index escaping the root, if any.
    pub fn loose_bound(&self) -> Option<u32> {
        self.loose_bounds()[self.root as usize].map(|v| v as u32)
    }

    pub fn is_closed(&self) -> bool {
        self.loose_bound().is_none() && self.free_vars().is_empty()
    }

    /// Coarsest bisimulation classes of the reachable nodes (binder hints ignored).
    fn partition(&self) -> (Vec<NodeId>, HashMap<NodeId, usize>) {
        let reach = self.reachable();
        let mut block: HashMap<NodeId, usize> = HashMap::new();
        let mut keys: HashMap<String, usize> = HashMap::new();
        for &n in &reach {
            let k = match self.node(n) {
                Node::Var(Var::Bound(i)) => format!("b{i}"),
                Node::Var(Var::Free(x)) => format!("f{x}"),
                Node::Abs { .. } => "L".to_string(),
                Node::App(..) => "A".to_string(),
            };
            let len = keys.len();
            let id = *keys.entry(k).or_insert(len);
            block.insert(n, id);
        }
        let mut count = keys.len();
        loop {
            let mut sig: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
            let mut next = HashMap::with_capacity(reach.len());
            for &n in &reach {
                let children: Vec<usize> = self.edges(n).iter().map(|(_, m)| block[m]).collect();
                let len = sig.len();
                let id = *sig.entry((block[&n], children)).or_insert(len);
                next.insert(n, id);
            }
            let new_count = sig.len();
            block = next;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        (reach, block)
    }

    /// The minimal graph with the same unfolding, numbered depth-first from
    /// the root. Two terms are equal iff their canonical forms are identical
    /// up to binder hints.
    pub fn canonical(&self) -> Term {
        let (reach, block) = self.partition();
        let mut rep: HashMap<usize, NodeId> = HashMap::new();
        for &n in &reach {
            rep.entry(block[&n]).or_insert(n);
        }
        let mut nodes: Vec<Node> = Vec::new();
        let mut num: HashMap<usize, NodeId> = HashMap::new();
        let mut order = Vec::new();
        let mut stack = vec![block[&self.root]];
        while let Some(b) = stack.pop() {
            if num.contains_key(&b) {
                continue;
            }
            num.insert(b, order.len() as u32);
            order.push(b);
            let n = rep[&b];
            let mut ch: Vec<usize> = self.edges(n).iter().map(|(_, m)| block[m]).collect();
            ch.reverse();
            stack.extend(ch);
        }
        for &b in &order {
            let n = rep[&b];
            nodes.push(match self.node(n) {
                Node::Var(v) => Node::Var(v.clone()),
                Node::Abs { hint, body } => Node::Abs { hint: hint.clone(), body: num[&block[body]] },
                Node::App(l, r) => Node::App(num[&block[l]], num[&block[r]]),
            });
        }
        Term { nodes, root: 0 }
    }

    /// A string identifying the term up to bisimulation.
    pub fn canonical_key(&self) -> String {
        let c = self.canonical();
        let mut s = String::new();
        for n in &c.nodes {
            match n {
                Node::Var(Var::Bound(i)) => s.push_str(&format!("#{i};")),
                Node::Var(Var::Free(x)) => s.push_str(&format!("${x};")),
                Node::Abs { body, .. } => s.push_str(&format!("L{body};")),
                Node::App(l, r) => s.push_str(&format!("A{l},{r};")),
            }
        }
        s
    }

    /// Bisimilarity of nameless unfoldings.
    pub fn equal(&self, other: &Term) -> bool {
        let mut seen: HashSet<(NodeId, NodeId)> = HashSet::new();
        let mut queue = VecDeque::from([(self.root, other.root)]);
        while let Some((a, b)) = queue.pop_front() {
            if !seen.insert((a, b)) {
                continue;
            }
            match (self.node(a), other.node(b)) {
                (Node::Var(x), Node::Var(y)) => {
                    if x != y {
                        return false;
                    }
                }
                (Node::Abs { body: x, .. }, Node::Abs { body: y, .. }) => queue.push_back((*x, *y)),
                (Node::App(l1, r1), Node::App(l2, r2)) => {
                    queue.push_back((*l1, *l2));
                    queue.push_back((*r1, *r2));
                }
                _ => return false,
            }
        }
        true
    }

    /// Merges `other`'s nodes into a copy of `self`'s arena; returns the new
    /// arena and the id of `other`'s root in it.
    pub(crate) fn merged(&self, other: &Term) -> (Vec<Node>, NodeId) {
        let mut nodes = self.nodes.clone();
        let off = nodes.len() as u32;
        nodes.extend(other.nodes.iter().cloned().map(|n| offset_node(n, off)));
        (nodes, other.root + off)
    }
}

fn max_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn offset_node(n: Node, off: u32) -> Node {
    match n {
        Node::Var(v) => Node::Var(v),
        Node::Abs { hint, body } => Node::Abs { hint, body: body + off },
        Node::App(l, r) => Node::App(l + off, r + off),
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        self.equal(other)
    }
}

impl Eq for Term {}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Term({})", print_term(self))
    }
}

/// `t[u/x]` for a free variable `x`, capture-free.
pub fn substitute(t: &Term, x: &str, u: &Term) -> Result<Term, StepError> {
    subst::try_substitute_free(t, x, u)
}
