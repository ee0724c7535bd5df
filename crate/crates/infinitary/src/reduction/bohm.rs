//! Finite prefixes of Böhm trees by iterated head reduction.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{head_redex, ReductionError};
use crate::pos::Pos;
use crate::term::{Term, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BottomKind {
    /// Head reduction provably cycles.
    Loop,
    /// Head reduction did not finish within the fuel.
    Fuel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BohmNode {
    Abs { hint: String, body: Box<BohmNode> },
    App { fun: Box<BohmNode>, arg: Box<BohmNode> },
    Var { var: Var },
    Bottom { why: BottomKind },
    /// Below the requested depth.
    Unexplored,
}

/// The Böhm tree of `t` down to applicative depth `d`. Each head reduction
/// gets its own budget of `fuel` steps; nodes at depth `d` are `Unexplored`.
pub fn bohm_prefix(t: &Term, d: usize, fuel: usize) -> Result<BohmNode, ReductionError> {
    if !t.is_001() {
        return Err(ReductionError::Non001);
    }
    node(t, 0, d, fuel)
}

fn node(t: &Term, depth: usize, d: usize, fuel: usize) -> Result<BohmNode, ReductionError> {
    if depth >= d {
        return Ok(BohmNode::Unexplored);
    }
    let mut cur = t.clone();
    let mut seen = HashSet::from([cur.canonical_key()]);
    let mut steps = 0;
    let hnf = loop {
        match head_redex(&cur)? {
            Err(h) => break h,
            Ok(b) => {
                if steps == fuel {
                    return Ok(BohmNode::Bottom { why: BottomKind::Fuel });
                }
                steps += 1;
                cur = cur.reduce_at(&b)?;
                if !seen.insert(cur.canonical_key()) {
                    return Ok(BohmNode::Bottom { why: BottomKind::Loop });
                }
            }
        }
    };
    let mut spine = Pos::new(vec![0; hnf.p]);
    let mut args = Vec::with_capacity(hnf.q);
    for _ in 0..hnf.q {
        args.push(cur.subterm(&spine.child(2)).expect("argument in support"));
        spine.push(1);
    }
    args.reverse();
    let mut out = BohmNode::Var { var: hnf.head };
    for a in &args {
        out = BohmNode::App { fun: Box::new(out), arg: Box::new(node(a, depth + 1, d, fuel)?) };
    }
    let hints = cur.binder_hints_above(&spine).expect("spine in support");
    for h in hints.into_iter().rev() {
        out = BohmNode::Abs { hint: h, body: Box::new(out) };
    }
    Ok(out)
}

impl BohmNode {
    /// Number of nodes that are neither bottom nor unexplored.
    pub fn known_size(&self) -> usize {
        match self {
            BohmNode::Abs { body, .. } => 1 + body.known_size(),
            BohmNode::App { fun, arg } => 1 + fun.known_size() + arg.known_size(),
            BohmNode::Var { .. } => 1,
            _ => 0,
        }
    }

    /// `self` refines `other`: equal except where `other` is unexplored or
    /// ran out of fuel.
    pub fn extends(&self, other: &BohmNode) -> bool {
        match (self, other) {
            (_, BohmNode::Unexplored) | (_, BohmNode::Bottom { why: BottomKind::Fuel }) => true,
            (BohmNode::Abs { body: a, .. }, BohmNode::Abs { body: b, .. }) => a.extends(b),
            (BohmNode::App { fun: f, arg: a }, BohmNode::App { fun: g, arg: b }) => f.extends(g) && a.extends(b),
            (a, b) => a == b,
        }
    }

    /// One line per head normal form `λx1…xp. h`, its arguments indented
    /// below it; `⊥ (loop)`, `⊥ (fuel)` and `?` mark the leaves.
    pub fn indented(&self) -> String {
        let mut out = String::new();
        self.indent_into(&mut Vec::new(), 0, &mut out);
        out
    }

    fn indent_into(&self, names: &mut Vec<String>, level: usize, out: &mut String) {
        out.push_str(&"  ".repeat(level));
        let mut cur = self;
        let mut binders = Vec::new();
        while let BohmNode::Abs { hint, body } = cur {
            let mut name = hint.clone();
            while names.contains(&name) || binders.contains(&name) {
                name.push('\'');
            }
            binders.push(name);
            cur = body;
        }
        let mut args = Vec::new();
        while let BohmNode::App { fun, arg } = cur {
            args.push(&**arg);
            cur = fun;
        }
        args.reverse();
        if !binders.is_empty() {
            out.push_str(&format!("\\{}. ", binders.join(" ")));
        }
        let pushed = binders.len();
        names.extend(binders);
        match cur {
            BohmNode::Bottom { why: BottomKind::Loop } => out.push_str("⊥ (loop)"),
            BohmNode::Bottom { why: BottomKind::Fuel } => out.push_str("⊥ (fuel)"),
            other => other.render(names, out, false),
        }
        out.push('\n');
        for a in args {
            a.indent_into(names, level + 1, out);
        }
        names.truncate(names.len() - pushed);
    }

    fn render(&self, names: &mut Vec<String>, out: &mut String, arg_pos: bool) {
        match self {
            BohmNode::Abs { .. } => {
                if arg_pos {
                    out.push('(');
                }
                let mut cur = self;
                let mut pushed = 0;
                out.push('\\');
                while let BohmNode::Abs { hint, body } = cur {
                    let mut name = hint.clone();
                    while names.contains(&name) {
                        name.push('\'');
                    }
                    if pushed > 0 {
                        out.push(' ');
                    }
                    out.push_str(&name);
                    names.push(name);
                    pushed += 1;
                    cur = body;
                }
                out.push_str(". ");
                cur.render(names, out, false);
                names.truncate(names.len() - pushed);
                if arg_pos {
                    out.push(')');
                }
            }
            BohmNode::App { fun, arg } => {
                if arg_pos {
                    out.push('(');
                }
                fun.render(names, out, false);
                out.push(' ');
                arg.render(names, out, true);
                if arg_pos {
                    out.push(')');
                }
            }
            BohmNode::Var { var: Var::Free(x) } => out.push_str(x),
            BohmNode::Var { var: Var::Bound(i) } => match names.len().checked_sub(*i as usize + 1) {
                Some(j) => out.push_str(&names[j]),
                None => out.push_str(&format!("#{}", *i as usize - names.len())),
            },
            BohmNode::Bottom { .. } => out.push('⊥'),
            BohmNode::Unexplored => out.push('?'),
        }
    }
}

impl fmt::Display for BohmNode {
    /// Term syntax with `⊥` for bottoms and `?` for unexplored subtrees.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(&mut Vec::new(), &mut s, false);
        f.write_str(&s)
    }
}
