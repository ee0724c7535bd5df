//! Surface syntax: `t ::= x | \x. t | t t | (t) | fix X. t | X`.
//!
//! `λ` may be used for `\`, and `\x y. t` abbreviates `\x. \y. t`. An
//! identifier bound by an enclosing `fix` denotes a back-reference; any
//! other identifier is a λ-bound or free variable.
//!
//! Because bound variables are nameless internally, a `fix` body that is
//! re-entered under extra abstractions may not mention λ-binders from
//! outside the `fix`: its nameless unfolding would not be regular.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use super::{Node, NodeId, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Lam,
    Dot,
    LParen,
    RParen,
    Fix,
    Ident(String),
}

struct Lexed {
    toks: Vec<(Tok, usize, usize)>,
    end: (usize, usize),
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() && c != 'λ' || c == '_'
}

fn is_ident_char(c: char) -> bool {
    (c.is_alphanumeric() && c != 'λ') || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Lexed, ParseError> {
    let mut toks = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let here = (line, col);
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        let tok = match c {
            '\\' | 'λ' => {
                chars.next();
                col += 1;
                Tok::Lam
            }
            '.' => {
                chars.next();
                col += 1;
                Tok::Dot
            }
            '(' => {
                chars.next();
                col += 1;
                Tok::LParen
            }
            ')' => {
                chars.next();
                col += 1;
                Tok::RParen
            }
            c if is_ident_start(c) => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if is_ident_char(d) {
                        s.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                if s == "fix" {
                    Tok::Fix
                } else {
                    Tok::Ident(s)
                }
            }
            other => {
                return Err(ParseError { line, col, msg: format!("unexpected character `{other}`") });
            }
        };
        toks.push((tok, here.0, here.1));
    }
    Ok(Lexed { toks, end: (line, col) })
}

#[derive(Debug, Clone)]
enum Ast {
    Ident(String),
    Lam(String, Box<Ast>),
    App(Box<Ast>, Box<Ast>),
    Fix(String, Box<Ast>, (usize, usize)),
}

struct Parser {
    lexed: Lexed,
    i: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.lexed.toks.get(self.i).map(|t| &t.0)
    }

    fn here(&self) -> (usize, usize) {
        self.lexed.toks.get(self.i).map(|t| (t.1, t.2)).unwrap_or(self.lexed.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.i += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.i += 1;
                Ok(s)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        match self.peek() {
            Some(Tok::Lam) => {
                self.i += 1;
                let mut names = vec![self.ident()?];
                while let Some(Tok::Ident(_)) = self.peek() {
                    names.push(self.ident()?);
                }
                self.expect(Tok::Dot, "`.` after binder")?;
                let mut body = self.term()?;
                for n in names.into_iter().rev() {
                    body = Ast::Lam(n, Box::new(body));
                }
                Ok(body)
            }
            Some(Tok::Fix) => {
                let at = self.here();
                self.i += 1;
                let name = self.ident()?;
                self.expect(Tok::Dot, "`.` after fix variable")?;
                let body = self.term()?;
                Ok(Ast::Fix(name, Box::new(body), at))
            }
            _ => self.app(),
        }
    }

    fn app(&mut self) -> Result<Ast, ParseError> {
        let mut head: Option<Ast> = None;
        loop {
            let next = match self.peek() {
                Some(Tok::Lam) | Some(Tok::Fix) => {
                    let t = self.term()?;
                    head = Some(match head {
                        None => t,
                        Some(h) => Ast::App(Box::new(h), Box::new(t)),
                    });
                    break;
                }
                Some(Tok::Ident(_)) | Some(Tok::LParen) => self.atom()?,
                _ => break,
            };
            head = Some(match head {
                None => next,
                Some(h) => Ast::App(Box::new(h), Box::new(next)),
            });
        }
        match head {
            Some(h) => Ok(h),
            None => self.err("expected a term"),
        }
    }

    fn atom(&mut self) -> Result<Ast, ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => Ok(Ast::Ident(self.ident()?)),
            Some(Tok::LParen) => {
                self.i += 1;
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => self.err("expected a term"),
        }
    }
}

enum Binder {
    Lam(String),
    Fix { name: String, placeholder: NodeId },
}

struct FixRecord {
    placeholder: NodeId,
    lam_depth: usize,
    ref_depths: Vec<usize>,
    at: (usize, usize),
}

struct Builder {
    nodes: Vec<Option<Node>>,
    env: Vec<Binder>,
    fixes: Vec<FixRecord>,
}

impl Builder {
    fn push(&mut self, n: Node) -> NodeId {
        self.nodes.push(Some(n));
        self.nodes.len() as u32 - 1
    }

    fn lam_depth(&self) -> usize {
        self.env.iter().filter(|b| matches!(b, Binder::Lam(_))).count()
    }

    fn build(&mut self, ast: &Ast) -> Result<NodeId, ParseError> {
        match ast {
            Ast::Ident(x) => {
                let mut lams = 0u32;
                for b in self.env.iter().rev() {
                    match b {
                        Binder::Lam(n) if n == x => return Ok(self.push(Node::Var(Var::Bound(lams)))),
                        Binder::Lam(_) => lams += 1,
                        Binder::Fix { name, placeholder, .. } if name == x => {
                            let p = *placeholder;
                            let depth = self.lam_depth();
                            let rec = self.fixes.iter_mut().find(|r| r.placeholder == p).expect("fix record");
                            rec.ref_depths.push(depth);
                            return Ok(p);
                        }
                        Binder::Fix { .. } => {}
                    }
                }
                Ok(self.push(Node::Var(Var::Free(x.clone()))))
            }
            Ast::Lam(x, body) => {
                self.env.push(Binder::Lam(x.clone()));
                let b = self.build(body)?;
                self.env.pop();
                Ok(self.push(Node::Abs { hint: x.clone(), body: b }))
            }
            Ast::App(f, a) => {
                let f = self.build(f)?;
                let a = self.build(a)?;
                Ok(self.push(Node::App(f, a)))
            }
            Ast::Fix(x, body, at) => {
                self.nodes.push(None);
                let p = self.nodes.len() as u32 - 1;
                let lam_depth = self.lam_depth();
                self.fixes.push(FixRecord { placeholder: p, lam_depth, ref_depths: vec![], at: *at });
                self.env.push(Binder::Fix { name: x.clone(), placeholder: p });
                let r = self.build(body)?;
                self.env.pop();
                match self.nodes[r as usize].clone() {
                    Some(node) if r != p => {
                        self.nodes[p as usize] = Some(node);
                        Ok(p)
                    }
                    _ => Err(ParseError {
                        line: at.0,
                        col: at.1,
                        msg: format!("unguarded recursion: `fix {x}` body is a bare recursion variable"),
                    }),
                }
            }
        }
    }
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let lexed = lex(src)?;
    let mut p = Parser { lexed, i: 0 };
    let ast = p.term()?;
    if p.peek().is_some() {
        return p.err("unexpected trailing input");
    }
    let mut b = Builder { nodes: Vec::new(), env: Vec::new(), fixes: Vec::new() };
    let root = b.build(&ast)?;
    let nodes: Vec<Node> = b.nodes.into_iter().map(|n| n.expect("all placeholders filled")).collect();
    let raw = Term::raw(nodes, root);
    let loose = raw.loose_bounds();
    for rec in &b.fixes {
        let mismatched = rec.ref_depths.iter().any(|&d| d != rec.lam_depth);
        if mismatched && loose[rec.placeholder as usize].is_some() {
            return Err(ParseError {
                line: rec.at.0,
                col: rec.at.1,
                msg: "fix body re-entered under an abstraction refers to a binder outside the fix; \
                      its nameless unfolding is not regular"
                    .into(),
            });
        }
    }
    Ok(raw.gc())
}

// ---------------------------------------------------------------- printing

enum Doc {
    Var(String),
    Lam(String, Box<Doc>),
    App(Box<Doc>, Box<Doc>),
    Fix(String, Box<Doc>),
}

struct Printer<'a> {
    t: &'a Term,
    taken: HashSet<String>,
    fix_avoid: BTreeSet<String>,
    lam_names: Vec<String>,
    /// Nodes on the current path, with the fix name reserved for each.
    stack: Vec<(NodeId, String)>,
    used: Vec<bool>,
    fix_counter: usize,
}

impl Printer<'_> {
    fn fresh_fix(&mut self) -> String {
        const BASE: [&str; 4] = ["X", "Y", "Z", "W"];
        loop {
            let i = self.fix_counter;
            self.fix_counter += 1;
            let name = if i < BASE.len() { BASE[i].to_string() } else { format!("X{}", i - BASE.len() + 1) };
            if !self.taken.contains(&name) && !self.fix_avoid.contains(&name) && !self.lam_names.contains(&name) {
                return name;
            }
        }
    }

    fn binder_name(&self, hint: &str) -> String {
        let mut name = if hint.is_empty() || hint == "fix" { "x".to_string() } else { hint.to_string() };
        while self.taken.contains(&name)
            || self.lam_names.contains(&name)
            || self.stack.iter().any(|(_, f)| f == &name)
        {
            name.push('\'');
        }
        name
    }

    fn doc(&mut self, n: NodeId) -> Doc {
        if let Some(i) = self.stack.iter().position(|(m, _)| *m == n) {
            self.used[i] = true;
            return Doc::Var(self.stack[i].1.clone());
        }
        let fix = self.fresh_fix();
        self.stack.push((n, fix.clone()));
        self.used.push(false);
        let d = match self.t.node(n).clone() {
            Node::Var(Var::Free(x)) => Doc::Var(x),
            Node::Var(Var::Bound(i)) => {
                let len = self.lam_names.len();
                if (i as usize) < len {
                    Doc::Var(self.lam_names[len - 1 - i as usize].clone())
                } else {
                    Doc::Var(format!("#{}", i as usize - len))
                }
            }
            Node::Abs { hint, body } => {
                let name = self.binder_name(&hint);
                self.lam_names.push(name.clone());
                let b = self.doc(body);
                self.lam_names.pop();
                Doc::Lam(name, Box::new(b))
            }
            Node::App(l, r) => {
                let l = self.doc(l);
                let r = self.doc(r);
                Doc::App(Box::new(l), Box::new(r))
            }
        };
        self.stack.pop();
        if self.used.pop().unwrap() {
            Doc::Fix(fix, Box::new(d))
        } else {
            // give the name back so numbering stays compact
            self.fix_counter -= 1;
            d
        }
    }
}

fn render(d: &Doc, out: &mut String) {
    match d {
        Doc::Var(x) => out.push_str(x),
        Doc::Lam(x, b) => {
            out.push('\\');
            out.push_str(x);
            out.push_str(". ");
            render(b, out);
        }
        Doc::Fix(x, b) => {
            out.push_str("fix ");
            out.push_str(x);
            out.push_str(". ");
            render(b, out);
        }
        Doc::App(f, a) => {
            match **f {
                Doc::Lam(..) | Doc::Fix(..) => {
                    out.push('(');
                    render(f, out);
                    out.push(')');
                }
                _ => render(f, out),
            }
            out.push(' ');
            match **a {
                Doc::Var(_) => render(a, out),
                _ => {
                    out.push('(');
                    render(a, out);
                    out.push(')');
                }
            }
        }
    }
}

/// Prints in the grammar accepted by [`parse_term`]. Binder names are taken
/// from the hints, primed when they would clash.
pub fn print_term(t: &Term) -> String {
    let mut taken: HashSet<String> = t.free_vars().into_iter().collect();
    taken.insert("fix".into());
    let fix_avoid = names_in(t);
    let mut p = Printer { t, taken, fix_avoid, lam_names: vec![], stack: vec![], used: vec![], fix_counter: 0 };
    let d = p.doc(t.root());
    let mut out = String::new();
    render(&d, &mut out);
    out
}

/// Free variable names of a term, used by callers that need fresh names.
pub fn names_in(t: &Term) -> BTreeSet<String> {
    let mut out = t.free_vars();
    for n in t.reachable() {
        if let Node::Abs { hint, .. } = t.node(n) {
            out.insert(hint.clone());
        }
    }
    out
}
