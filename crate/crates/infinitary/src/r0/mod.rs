//! The finite multiset system R0.
//!
//! A derivation is a tree of judgments whose subjects are positions into a
//! separately supplied term. Contexts are keyed by [`Var`]: free names, or
//! bound variables as de Bruijn indices relative to the judgment's subject.

mod dynamics;
mod search;
mod syntax;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::pos::Pos;
use crate::term::{Label, Term, Var};

pub use dynamics::{
    build_pi_prime_n, infinitary_expand_r0, subject_expand_r0, subject_reduce_r0, subject_substitute,
    type_by_head_transport, type_hnf, Reduced,
};
pub(crate) use dynamics::{
    settle_index,
};
pub use search::{exists_derivation_upto, SearchOutcome};
pub use syntax::{parse_rtype, RTypeParseError};

/// `o | [σ1,…,σn] → τ`; the multiset is kept sorted, so equality of
/// multisets is equality of vectors.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RType {
    Atom(String),
    Arrow(Vec<RType>, Box<RType>),
}

impl RType {
    pub fn o() -> RType {
        RType::Atom("o".into())
    }

    pub fn atom(name: &str) -> RType {
        RType::Atom(name.into())
    }

    pub fn arrow(mut dom: Vec<RType>, cod: RType) -> RType {
        dom.sort();
        RType::Arrow(dom, Box::new(cod))
    }

    /// `[] → … → [] → cod` with `n` arrows.
    pub fn empty_arrows(n: usize, cod: RType) -> RType {
        (0..n).fold(cod, |acc, _| RType::arrow(vec![], acc))
    }

    /// Whether `[]` occurs with the given polarity; `positive == true`
    /// asks for positive occurrences. The empty domain of `[] → τ` is a
    /// negative occurrence.
    pub fn has_empty(&self, positive: bool) -> bool {
        match self {
            RType::Atom(_) => false,
            RType::Arrow(dom, cod) => {
                (dom.is_empty() && !positive) || dom.iter().any(|s| s.has_empty(!positive)) || cod.has_empty(positive)
            }
        }
    }
}

/// Total map from variables to multisets; absent keys mean `[]`.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct R0Ctx(BTreeMap<Var, Vec<RType>>);

impl R0Ctx {
    pub fn empty() -> R0Ctx {
        R0Ctx::default()
    }

    pub fn single(x: Var, ty: RType) -> R0Ctx {
        R0Ctx(BTreeMap::from([(x, vec![ty])]))
    }

    pub fn get(&self, x: &Var) -> &[RType] {
        self.0.get(x).map_or(&[], |v| v.as_slice())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Var, &Vec<RType>)> {
        self.0.iter()
    }

    pub fn insert(&mut self, x: Var, mut ms: Vec<RType>) {
        ms.sort();
        if ms.is_empty() {
            self.0.remove(&x);
        } else {
            self.0.insert(x, ms);
        }
    }

    pub fn domain(&self) -> BTreeSet<Var> {
        self.0.keys().cloned().collect()
    }

    /// Pointwise multiset sum.
    pub fn plus(&self, other: &R0Ctx) -> R0Ctx {
        let mut out = self.0.clone();
        for (x, ms) in &other.0 {
            let e = out.entry(x.clone()).or_default();
            e.extend(ms.iter().cloned());
            e.sort();
        }
        R0Ctx(out)
    }

    /// Removes the variable bound by an abstraction whose body has this
    /// context, returning its multiset and the context of the abstraction.
    pub fn unbind(&self) -> (Vec<RType>, R0Ctx) {
        let mut out = BTreeMap::new();
        let mut dom = Vec::new();
        for (x, ms) in &self.0 {
            match x {
                Var::Bound(0) => dom = ms.clone(),
                Var::Bound(i) => {
                    out.insert(Var::Bound(i - 1), ms.clone());
                }
                Var::Free(_) => {
                    out.insert(x.clone(), ms.clone());
                }
            }
        }
        (dom, R0Ctx(out))
    }

    /// Adds `d` to every bound index.
    pub fn shifted(&self, d: u32) -> R0Ctx {
        R0Ctx(
            self.0
                .iter()
                .map(|(x, ms)| match x {
                    Var::Bound(i) => (Var::Bound(i + d), ms.clone()),
                    f => (f.clone(), ms.clone()),
                })
                .collect(),
        )
    }

    pub fn types(&self) -> impl Iterator<Item = &RType> {
        self.0.values().flatten()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum R0Rule {
    Ax,
    Abs(Box<R0Derivation>),
    /// Function premise, then argument premises in canonical order.
    App(Box<R0Derivation>, Vec<R0Derivation>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct R0Derivation {
    pub subject: Pos,
    pub ctx: R0Ctx,
    pub ty: RType,
    pub rule: R0Rule,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum R0Error {
    #[error("at {0}: {1}")]
    RuleMismatch(Pos, String),
    #[error("at {0}: context is {1}, expected {2}")]
    ContextMismatch(Pos, String, String),
    #[error("at {0}: relevance violated: {1}")]
    Relevance(Pos, String),
    #[error("at {0}: subject mismatch")]
    SubjectMismatch(Pos),
    #[error("position {0} is not a redex of the subject")]
    InvalidStep(Pos),
    #[error("term is not a head normal form")]
    NotHnf,
    #[error("no recorded step index after which every step is deeper than the typed part")]
    PathTooShort,
    #[error("{0}")]
    Other(String),
}

fn key_at(t: &Term, p: &Pos) -> Option<Var> {
    match t.label_at(p)? {
        Label::Var(v) => Some(v),
        _ => None,
    }
}

impl R0Derivation {
    pub fn ax(t: &Term, subject: Pos, ty: RType) -> Result<R0Derivation, R0Error> {
        let x = key_at(t, &subject)
            .ok_or_else(|| R0Error::RuleMismatch(subject.clone(), "axiom on a non-variable".into()))?;
        Ok(R0Derivation { subject, ctx: R0Ctx::single(x, ty.clone()), ty, rule: R0Rule::Ax })
    }

    pub fn abs(subject: Pos, body: R0Derivation) -> R0Derivation {
        let (dom, ctx) = body.ctx.unbind();
        let ty = RType::Arrow(dom, Box::new(body.ty.clone()));
        R0Derivation { subject, ctx, ty, rule: R0Rule::Abs(Box::new(body)) }
    }

    pub fn app(subject: Pos, fun: R0Derivation, mut args: Vec<R0Derivation>) -> Result<R0Derivation, R0Error> {
        let RType::Arrow(dom, cod) = &fun.ty else {
            return Err(R0Error::RuleMismatch(subject, "function premise has an atomic type".into()));
        };
        sort_args(&mut args);
        let tys: Vec<RType> = args.iter().map(|a| a.ty.clone()).collect();
        if &tys != dom {
            return Err(R0Error::RuleMismatch(
                subject,
                format!("argument types {} do not match domain {}", show_ms(&tys), show_ms(dom)),
            ));
        }
        let ctx = args.iter().fold(fun.ctx.clone(), |c, a| c.plus(&a.ctx));
        Ok(R0Derivation { subject, ctx, ty: (**cod).clone(), rule: R0Rule::App(Box::new(fun), args) })
    }

    /// Recomputes contexts and non-axiom types from the axioms and the term.
    pub fn rebuild(&self, t: &Term) -> Result<R0Derivation, R0Error> {
        match &self.rule {
            R0Rule::Ax => R0Derivation::ax(t, self.subject.clone(), self.ty.clone()),
            R0Rule::Abs(b) => Ok(R0Derivation::abs(self.subject.clone(), b.rebuild(t)?)),
            R0Rule::App(f, args) => R0Derivation::app(
                self.subject.clone(),
                f.rebuild(t)?,
                args.iter().map(|a| a.rebuild(t)).collect::<Result<_, _>>()?,
            ),
        }
    }

    pub fn size(&self) -> usize {
        1 + match &self.rule {
            R0Rule::Ax => 0,
            R0Rule::Abs(b) => b.size(),
            R0Rule::App(f, args) => f.size() + args.iter().map(R0Derivation::size).sum::<usize>(),
        }
    }

    pub fn children(&self) -> Vec<&R0Derivation> {
        match &self.rule {
            R0Rule::Ax => vec![],
            R0Rule::Abs(b) => vec![b],
            R0Rule::App(f, args) => std::iter::once(&**f).chain(args.iter()).collect(),
        }
    }

    /// Pre-order traversal.
    pub fn nodes(&self) -> Vec<&R0Derivation> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let kids = out[i].children();
            out.splice(i + 1..i + 1, kids);
            i += 1;
        }
        out
    }

    /// Subject positions of all judgments.
    pub fn typed_positions(&self) -> BTreeSet<Pos> {
        self.nodes().into_iter().map(|n| n.subject.clone()).collect()
    }

    /// Relabels every subject through `f`.
    pub(crate) fn map_subjects(&self, f: &dyn Fn(&Pos) -> Pos) -> R0Derivation {
        let rule = match &self.rule {
            R0Rule::Ax => R0Rule::Ax,
            R0Rule::Abs(b) => R0Rule::Abs(Box::new(b.map_subjects(f))),
            R0Rule::App(g, args) => R0Rule::App(Box::new(g.map_subjects(f)), args.iter().map(|a| a.map_subjects(f)).collect()),
        };
        R0Derivation { subject: f(&self.subject), ctx: self.ctx.clone(), ty: self.ty.clone(), rule }
    }

    pub fn judgment(&self) -> (R0Ctx, RType) {
        (self.ctx.clone(), self.ty.clone())
    }
}

pub(crate) fn sort_args(args: &mut [R0Derivation]) {
    args.sort_by_cached_key(|a| (a.ty.clone(), format!("{a:?}")));
}

/// Validates every judgment against the rules and the subject term.
pub fn check_r0(d: &R0Derivation, t: &Term) -> Result<(), Vec<R0Error>> {
    let mut errs = Vec::new();
    check_node(d, t, &d.subject, &mut errs);
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn check_node(d: &R0Derivation, t: &Term, expect: &Pos, errs: &mut Vec<R0Error>) {
    let a = &d.subject;
    if a != expect {
        errs.push(R0Error::SubjectMismatch(a.clone()));
        return;
    }
    let Some(label) = t.label_at(a) else {
        errs.push(R0Error::SubjectMismatch(a.clone()));
        return;
    };
    let ctx_err = |got: &R0Ctx, want: &R0Ctx| R0Error::ContextMismatch(a.clone(), show_ctx(got), show_ctx(want));
    match (&d.rule, label) {
        (R0Rule::Ax, Label::Var(x)) => {
            let want = R0Ctx::single(x.clone(), d.ty.clone());
            if d.ctx != want {
                if d.ctx.get(&x) == [d.ty.clone()] {
                    errs.push(R0Error::Relevance(a.clone(), format!("axiom context {} has extra entries", show_ctx(&d.ctx))));
                } else {
                    errs.push(ctx_err(&d.ctx, &want));
                }
            }
        }
        (R0Rule::Abs(body), Label::Abs) => {
            check_node(body, t, &a.child(0), errs);
            let (dom, ctx) = body.ctx.unbind();
            match &d.ty {
                RType::Arrow(got, cod) => {
                    if got != &dom {
                        errs.push(R0Error::Relevance(
                            a.clone(),
                            format!("domain {} but the bound variable has {}", show_ms(got), show_ms(&dom)),
                        ));
                    }
                    if **cod != body.ty {
                        errs.push(R0Error::RuleMismatch(a.clone(), "codomain differs from the body type".into()));
                    }
                }
                RType::Atom(_) => errs.push(R0Error::RuleMismatch(a.clone(), "abstraction typed by an atom".into())),
            }
            if d.ctx != ctx {
                errs.push(ctx_err(&d.ctx, &ctx));
            }
        }
        (R0Rule::App(fun, args), Label::App) => {
            check_node(fun, t, &a.child(1), errs);
            for arg in args {
                check_node(arg, t, &a.child(2), errs);
            }
            let mut tys: Vec<RType> = args.iter().map(|x| x.ty.clone()).collect();
            tys.sort();
            match &fun.ty {
                RType::Arrow(dom, cod) => {
                    if dom != &tys {
                        errs.push(R0Error::RuleMismatch(
                            a.clone(),
                            format!("arguments typed {} against domain {}", show_ms(&tys), show_ms(dom)),
                        ));
                    }
                    if **cod != d.ty {
                        errs.push(R0Error::RuleMismatch(a.clone(), "conclusion differs from the codomain".into()));
                    }
                }
                RType::Atom(_) => errs.push(R0Error::RuleMismatch(a.clone(), "function premise typed by an atom".into())),
            }
            let sum = args.iter().fold(fun.ctx.clone(), |c, x| c.plus(&x.ctx));
            if d.ctx != sum {
                errs.push(ctx_err(&d.ctx, &sum));
            }
        }
        (rule, label) => {
            let r = match rule {
                R0Rule::Ax => "ax",
                R0Rule::Abs(_) => "abs",
                R0Rule::App(..) => "app",
            };
            errs.push(R0Error::RuleMismatch(a.clone(), format!("{r} rule on a {label:?} node")));
        }
    }
}

/// `[]` occurs neither negatively in the context nor positively in the type.
pub fn is_unforgetful_r0(ctx: &R0Ctx, ty: &RType) -> bool {
    !ctx.types().any(|s| s.has_empty(false)) && !ty.has_empty(true)
}

pub fn show_ms(ms: &[RType]) -> String {
    let parts: Vec<String> = ms.iter().map(|s| s.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub fn show_var(x: &Var) -> String {
    match x {
        Var::Free(n) => n.clone(),
        Var::Bound(i) => format!("#{i}"),
    }
}

pub fn show_ctx(c: &R0Ctx) -> String {
    let parts: Vec<String> = c.entries().map(|(x, ms)| format!("{}: {}", show_var(x), show_ms(ms))).collect();
    parts.join(", ")
}

impl fmt::Display for RType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RType::Atom(a) => f.write_str(a),
            RType::Arrow(dom, cod) => write!(f, "{} -> {}", show_ms(dom), cod),
        }
    }
}

impl fmt::Debug for RType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Debug for R0Ctx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", show_ctx(self))
    }
}

impl fmt::Display for R0Ctx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&show_ctx(self))
    }
}

impl fmt::Display for R0Derivation {
    /// One judgment per line, premises indented below their conclusion.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(d: &R0Derivation, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let rule = match d.rule {
                R0Rule::Ax => "ax",
                R0Rule::Abs(_) => "abs",
                R0Rule::App(..) => "app",
            };
            writeln!(f, "{:indent$}{rule} @{}  {} ⊢ {}", "", d.subject, show_ctx(&d.ctx), d.ty, indent = 2 * depth)?;
            for c in d.children() {
                go(c, depth + 1, f)?;
            }
            Ok(())
        }
        go(self, 0, f)
    }
}
