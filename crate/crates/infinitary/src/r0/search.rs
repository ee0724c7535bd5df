//! Exhaustive search for small R0 derivations.
//!
//! Every derivation tree shape up to a size bound is enumerated; the typing
//! constraints of each shape are then solved by first-order unification,
//! branching over the bijections between multisets. Type variables left open
//! by a solution are instantiated with `o`.

use std::collections::HashMap;

use super::{R0Derivation, RType};
use crate::pos::Pos;
use crate::term::{Node, NodeId, Term, Var};

#[derive(Clone, Debug)]
enum Shape {
    Ax,
    Abs(Box<Shape>),
    App(Box<Shape>, Vec<Shape>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum U {
    V(u32),
    Arrow(Vec<U>, Box<U>),
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub shapes_examined: usize,
    /// Some derivation, if one exists within the bound.
    pub found: Option<R0Derivation>,
}

/// Searches all derivations of `t` with at most `max_size` judgments.
pub fn exists_derivation_upto(t: &Term, max_size: usize) -> SearchOutcome {
    let mut memo = HashMap::new();
    let shapes = enumerate(t, t.root(), max_size, &mut memo);
    let mut examined = 0;
    for (s, _) in &shapes {
        examined += 1;
        let mut g = Gen { next: 0, lams: Vec::new(), eqs: Vec::new(), vars: Vec::new() };
        g.gen(t, t.root(), s);
        let mut sub = HashMap::new();
        if solve(g.eqs.clone(), &mut sub) {
            let mut k = 0;
            let d = build(t, &Pos::eps(), s, &g.vars, &sub, &mut k);
            return SearchOutcome { shapes_examined: examined, found: d };
        }
    }
    SearchOutcome { shapes_examined: examined, found: None }
}

fn enumerate(t: &Term, n: NodeId, budget: usize, memo: &mut HashMap<(NodeId, usize), Vec<(Shape, usize)>>) -> Vec<(Shape, usize)> {
    if budget == 0 {
        return vec![];
    }
    if let Some(v) = memo.get(&(n, budget)) {
        return v.clone();
    }
    let out = match t.node(n).clone() {
        Node::Var(_) => vec![(Shape::Ax, 1)],
        Node::Abs { body, .. } => {
            enumerate(t, body, budget - 1, memo).into_iter().map(|(s, k)| (Shape::Abs(Box::new(s)), k + 1)).collect()
        }
        Node::App(l, r) => {
            let mut out = Vec::new();
            let funs = enumerate(t, l, budget - 1, memo);
            let args = enumerate(t, r, budget.saturating_sub(2), memo);
            for (f, kf) in funs {
                let rest = budget - 1 - kf;
                let mut lists = Vec::new();
                arg_lists(&args, 0, rest, &mut Vec::new(), 0, &mut lists);
                for (xs, k) in lists {
                    out.push((Shape::App(Box::new(f.clone()), xs), 1 + kf + k));
                }
            }
            out
        }
    };
    memo.insert((n, budget), out.clone());
    out
}

/// Multisets of argument shapes (nondecreasing index) with total size ≤ `rest`.
fn arg_lists(
    pool: &[(Shape, usize)],
    from: usize,
    rest: usize,
    cur: &mut Vec<Shape>,
    used: usize,
    out: &mut Vec<(Vec<Shape>, usize)>,
) {
    out.push((cur.clone(), used));
    for i in from..pool.len() {
        let (s, k) = &pool[i];
        if *k <= rest {
            cur.push(s.clone());
            arg_lists(pool, i, rest - k, cur, used + k, out);
            cur.pop();
        }
    }
}

struct Gen {
    next: u32,
    lams: Vec<Vec<U>>,
    eqs: Vec<(U, U)>,
    /// Type of each judgment in pre-order.
    vars: Vec<U>,
}

impl Gen {
    fn fresh(&mut self) -> U {
        self.next += 1;
        U::V(self.next - 1)
    }

    fn gen(&mut self, t: &Term, n: NodeId, s: &Shape) -> U {
        let slot = self.vars.len();
        self.vars.push(U::V(u32::MAX));
        let ty = match (s, t.node(n).clone()) {
            (Shape::Ax, Node::Var(v)) => {
                let a = self.fresh();
                if let Var::Bound(i) = v {
                    let depth = self.lams.len();
                    if (i as usize) < depth {
                        self.lams[depth - 1 - i as usize].push(a.clone());
                    }
                }
                a
            }
            (Shape::Abs(b), Node::Abs { body, .. }) => {
                self.lams.push(Vec::new());
                let cod = self.gen(t, body, b);
                let dom = self.lams.pop().expect("pushed");
                U::Arrow(dom, Box::new(cod))
            }
            (Shape::App(f, xs), Node::App(l, r)) => {
                let ft = self.gen(t, l, f);
                let dom: Vec<U> = xs.iter().map(|x| self.gen(t, r, x)).collect();
                let cod = self.fresh();
                self.eqs.push((ft, U::Arrow(dom, Box::new(cod.clone()))));
                cod
            }
            _ => unreachable!("shapes follow the term"),
        };
        self.vars[slot] = ty.clone();
        ty
    }
}

fn resolve(u: &U, sub: &HashMap<u32, U>) -> U {
    match u {
        U::V(v) => match sub.get(v) {
            Some(w) => resolve(w, sub),
            None => u.clone(),
        },
        U::Arrow(d, c) => U::Arrow(d.iter().map(|x| resolve(x, sub)).collect(), Box::new(resolve(c, sub))),
    }
}

fn occurs(v: u32, u: &U) -> bool {
    match u {
        U::V(w) => *w == v,
        U::Arrow(d, c) => d.iter().any(|x| occurs(v, x)) || occurs(v, c),
    }
}

/// Solvability of `eqs` under `sub`, extending `sub` on success.
fn solve(mut eqs: Vec<(U, U)>, sub: &mut HashMap<u32, U>) -> bool {
    while let Some((a, b)) = eqs.pop() {
        let (a, b) = (resolve(&a, sub), resolve(&b, sub));
        match (a, b) {
            (U::V(x), U::V(y)) if x == y => {}
            (U::V(x), u) | (u, U::V(x)) => {
                if occurs(x, &u) {
                    return false;
                }
                sub.insert(x, u);
            }
            (U::Arrow(d1, c1), U::Arrow(d2, c2)) => {
                if d1.len() != d2.len() {
                    return false;
                }
                eqs.push((*c1, *c2));
                if d1.is_empty() {
                    continue;
                }
                // Branch over bijections between the two domains.
                let mut perm: Vec<usize> = (0..d2.len()).collect();
                loop {
                    let mut e2 = eqs.clone();
                    for (i, &j) in perm.iter().enumerate() {
                        e2.push((d1[i].clone(), d2[j].clone()));
                    }
                    let mut s2 = sub.clone();
                    if solve(e2, &mut s2) {
                        *sub = s2;
                        return true;
                    }
                    if !next_permutation(&mut perm) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn ground(u: &U) -> RType {
    match u {
        U::V(_) => RType::o(),
        U::Arrow(d, c) => RType::arrow(d.iter().map(ground).collect(), ground(c)),
    }
}

fn build(
    t: &Term,
    at: &Pos,
    s: &Shape,
    vars: &[U],
    sub: &HashMap<u32, U>,
    k: &mut usize,
) -> Option<R0Derivation> {
    let my = ground(&resolve(&vars[*k], sub));
    *k += 1;
    match s {
        Shape::Ax => R0Derivation::ax(t, at.clone(), my).ok(),
        Shape::Abs(b) => {
            let body = build(t, &at.child(0), b, vars, sub, k)?;
            Some(R0Derivation::abs(at.clone(), body))
        }
        Shape::App(f, xs) => {
            let fun = build(t, &at.child(1), f, vars, sub, k)?;
            let args = xs.iter().map(|x| build(t, &at.child(2), x, vars, sub, k)).collect::<Option<Vec<_>>>()?;
            R0Derivation::app(at.clone(), fun, args).ok()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::r0::check_r0;
    use crate::term::parse_term;

    #[test]
    fn omega_has_no_small_derivation() {
        let omega = parse_term("(\\x. x x)(\\x. x x)").unwrap();
        let out = exists_derivation_upto(&omega, 6);
        assert!(out.found.is_none());
        assert!(out.shapes_examined > 0);
    }

    #[test]
    fn finds_derivations_of_typable_terms() {
        for (src, n) in [("\\x. x", 2), ("(\\x. x)(\\y. y)", 5), ("x ((\\x. x x)(\\x. x x))", 2), ("\\x. x x", 4)] {
            let t = parse_term(src).unwrap();
            let out = exists_derivation_upto(&t, n);
            let d = out.found.unwrap_or_else(|| panic!("{src}"));
            assert!(check_r0(&d, &t).is_ok(), "{src}");
            assert!(d.size() <= n);
        }
        let t = parse_term("(\\x. x)(\\y. y)").unwrap();
        assert!(exists_derivation_upto(&t, 4).found.is_none());
    }
}
