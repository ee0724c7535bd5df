//! Derivations of the rigid system S.
//!
//! A derivation is a finite tree of judgments indexed by derivation
//! positions: letter 0 leads to the body of an abstraction, 1 to the
//! function premise of an application and `k ≥ 2` to the argument premise
//! on track `k`. The subject of the judgment at `a` is the term position
//! `collapse(a)`. Contexts use de Bruijn keys relative to that subject.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::pos::Pos;
use crate::r0::{R0Derivation, R0Error, R0Rule};
use crate::stype::{SCtx, SType, Seq, Sym};
use crate::term::{Label, Term, Var};
use crate::track::{TrackOverflow, TrackPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SRule {
    /// Axiom with its axiom track.
    Ax(u64),
    Abs,
    App,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SJudg {
    pub ctx: SCtx,
    pub ty: SType,
    pub rule: SRule,
}

#[derive(Clone)]
pub struct SDerivation {
    term: Term,
    nodes: BTreeMap<Pos, SJudg>,
}

/// Address of a symbol in a judgment: in its type, or in a context entry
/// (`c` then starts with the track).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bipos {
    Right { at: Pos, c: Pos },
    Left { at: Pos, x: Var, c: Pos },
}

impl Bipos {
    pub fn right(at: Pos, c: Pos) -> Bipos {
        Bipos::Right { at, c }
    }

    pub fn left(at: Pos, x: Var, c: Pos) -> Bipos {
        Bipos::Left { at, x, c }
    }

    pub fn at(&self) -> &Pos {
        match self {
            Bipos::Right { at, .. } | Bipos::Left { at, .. } => at,
        }
    }

    pub fn is_right(&self) -> bool {
        matches!(self, Bipos::Right { .. })
    }
}

impl fmt::Display for Bipos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bipos::Right { at, c } => write!(f, "({at}, {c})"),
            Bipos::Left { at, x, c } => write!(f, "({at}, {}, {c})", crate::r0::show_var(x)),
        }
    }
}

impl std::str::FromStr for Bipos {
    type Err = String;

    /// The display syntax: `(a, c)` or `(a, x, c)`, with `#i` for bound
    /// variables.
    fn from_str(s: &str) -> Result<Bipos, String> {
        let inner = s.trim().strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(|| format!("`{s}` is not parenthesised"))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let p = |x: &str| x.parse::<Pos>().map_err(|e| e.to_string());
        match parts.as_slice() {
            [a, c] => Ok(Bipos::right(p(a)?, p(c)?)),
            [a, x, c] => {
                let var = match x.strip_prefix('#') {
                    Some(i) => Var::Bound(i.parse().map_err(|_| format!("bad variable `{x}`"))?),
                    None => Var::Free(x.to_string()),
                };
                Ok(Bipos::left(p(a)?, var, p(c)?))
            }
            _ => Err(format!("`{s}` is not a biposition")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SError {
    #[error("at {at}: track conflict on {var} track {track}")]
    TrackConflict { at: Pos, var: String, track: u64 },
    #[error("at {0}: {1}")]
    RuleMismatch(Pos, String),
    #[error("at {0}: subject is not in the term's support")]
    SubjectMismatch(Pos),
    #[error("no axiom above {at} types {var} with track {track}")]
    NotAnchored { at: Pos, var: String, track: u64 },
    #[error("position {0} is not a redex of the subject")]
    InvalidRedex(Pos),
    #[error("derivation is infinite where a finite one is needed: {0}")]
    Infinite(String),
    #[error(transparent)]
    Track(#[from] TrackOverflow),
    #[error("{0}")]
    Other(String),
}

fn show(x: &Var) -> String {
    crate::r0::show_var(x)
}

impl SDerivation {
    /// Builds a derivation from its support and its axioms; every other
    /// type and every context is computed bottom-up.
    pub fn from_axioms(term: &Term, support: &BTreeSet<Pos>, axioms: &BTreeMap<Pos, (u64, SType)>) -> Result<SDerivation, SError> {
        if !support.contains(&Pos::eps()) {
            return Err(SError::RuleMismatch(Pos::eps(), "empty support".into()));
        }
        let mut kids: BTreeMap<Pos, Vec<u64>> = BTreeMap::new();
        for a in support {
            if let Some(p) = a.parent() {
                if !support.contains(&p) {
                    return Err(SError::RuleMismatch(a.clone(), "parent is missing".into()));
                }
                kids.entry(p).or_default().push(a.last().expect("non-root"));
            }
        }
        let mut nodes: BTreeMap<Pos, SJudg> = BTreeMap::new();
        for a in support.iter().rev() {
            let label = term.label_at(&a.collapse()).ok_or_else(|| SError::SubjectMismatch(a.clone()))?;
            let ch = kids.get(a).cloned().unwrap_or_default();
            let j = match label {
                Label::Var(x) => {
                    if !ch.is_empty() {
                        return Err(SError::RuleMismatch(a.clone(), "axiom with premises".into()));
                    }
                    let (k, ty) = axioms.get(a).ok_or_else(|| SError::RuleMismatch(a.clone(), "variable without axiom data".into()))?;
                    if *k < 2 {
                        return Err(SError::RuleMismatch(a.clone(), "axiom track below 2".into()));
                    }
                    SJudg { ctx: SCtx::single(x, *k, ty.clone()), ty: ty.clone(), rule: SRule::Ax(*k) }
                }
                Label::Abs => {
                    if ch != [0] {
                        return Err(SError::RuleMismatch(a.clone(), "abstraction needs exactly the premise 0".into()));
                    }
                    let body = &nodes[&a.child(0)];
                    let (dom, ctx) = body.ctx.unbind();
                    SJudg { ctx, ty: SType::arrow(dom, body.ty.clone()), rule: SRule::Abs }
                }
                Label::App => {
                    if !ch.contains(&1) || ch.contains(&0) {
                        return Err(SError::RuleMismatch(a.clone(), "application needs a function premise".into()));
                    }
                    let fun = &nodes[&a.child(1)];
                    let SType::Arrow(dom, cod) = &fun.ty else {
                        return Err(SError::RuleMismatch(a.clone(), "function premise is not an arrow".into()));
                    };
                    let args: Vec<u64> = ch.iter().copied().filter(|&k| k >= 2).collect();
                    check_args(a, dom, &args, &|k| nodes[&a.child(k)].ty.clone())?;
                    let mut ctx = fun.ctx.clone();
                    for &k in &args {
                        ctx = union_at(a, &ctx, &nodes[&a.child(k)].ctx)?;
                    }
                    SJudg { ctx, ty: (**cod).clone(), rule: SRule::App }
                }
            };
            nodes.insert(a.clone(), j);
        }
        Ok(SDerivation { term: term.clone(), nodes })
    }

    /// Assembles a derivation from explicit judgments without validation.
    pub fn from_judgments(term: &Term, nodes: BTreeMap<Pos, SJudg>) -> SDerivation {
        SDerivation { term: term.clone(), nodes }
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn nodes(&self) -> &BTreeMap<Pos, SJudg> {
        &self.nodes
    }

    pub fn get(&self, a: &Pos) -> Option<&SJudg> {
        self.nodes.get(a)
    }

    pub fn support(&self) -> BTreeSet<Pos> {
        self.nodes.keys().cloned().collect()
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> &SJudg {
        &self.nodes[&Pos::eps()]
    }

    /// Conclusion `C ⊢ t : T`.
    pub fn conclusion(&self) -> (&SCtx, &SType) {
        let r = self.root();
        (&r.ctx, &r.ty)
    }

    /// Premise letters of `a`, in increasing order.
    pub fn children(&self, a: &Pos) -> Vec<u64> {
        let mut out = Vec::new();
        for (p, _) in self.nodes.range(a.child(0)..) {
            if !a.is_prefix_of(p) {
                break;
            }
            if p.len() == a.len() + 1 {
                out.push(p.last().expect("child"));
            }
        }
        out
    }

    pub fn axioms(&self) -> BTreeMap<Pos, (u64, SType)> {
        self.nodes
            .iter()
            .filter_map(|(a, j)| match j.rule {
                SRule::Ax(k) => Some((a.clone(), (k, j.ty.clone()))),
                _ => None,
            })
            .collect()
    }

    /// `tr(a)` for axiom positions.
    pub fn track(&self, a: &Pos) -> Option<u64> {
        match self.nodes.get(a)?.rule {
            SRule::Ax(k) => Some(k),
            _ => None,
        }
    }

    /// Replaces the subject by `t2`, which must carry the same constructors
    /// on every typed position.
    pub fn with_term(&self, t2: &Term) -> Result<SDerivation, SError> {
        for a in self.nodes.keys() {
            let b = a.collapse();
            if self.term.label_at(&b) != t2.label_at(&b) {
                return Err(SError::SubjectMismatch(a.clone()));
            }
        }
        Ok(SDerivation { term: t2.clone(), nodes: self.nodes.clone() })
    }

    /// The subderivation rooted at `a`, typing the subterm at `collapse(a)`.
    pub fn subderivation(&self, a: &Pos) -> Option<SDerivation> {
        self.nodes.get(a)?;
        let term = self.term.subterm(&a.collapse())?;
        let nodes = self
            .nodes
            .range(a.clone()..)
            .take_while(|(p, _)| a.is_prefix_of(p))
            .map(|(p, j)| (a.strip_prefix_of(p).expect("prefix"), j.clone()))
            .collect();
        Some(SDerivation { term, nodes })
    }

    pub fn is_finite(&self) -> bool {
        self.nodes.values().all(|j| j.ty.is_finite() && j.ctx.entries().all(|(_, s)| s.is_finite()))
    }

    /// Bipositions whose type part has length at most `max_len`.
    pub fn bisupport_upto(&self, max_len: usize) -> BTreeSet<Bipos> {
        let mut out = BTreeSet::new();
        for (a, j) in &self.nodes {
            for c in j.ty.support_upto(max_len) {
                out.insert(Bipos::right(a.clone(), c));
            }
            for (x, s) in j.ctx.entries() {
                for c in s.support_upto(max_len) {
                    out.insert(Bipos::left(a.clone(), x.clone(), c));
                }
            }
        }
        out
    }

    /// Full bisupport; for regular types it is cut at length 64.
    pub fn bisupport(&self) -> BTreeSet<Bipos> {
        self.bisupport_upto(if self.is_finite() { usize::MAX } else { 64 })
    }

    pub fn right_bisupport(&self) -> BTreeSet<Bipos> {
        self.bisupport().into_iter().filter(Bipos::is_right).collect()
    }

    /// `P(a,c) = T(a)(c)` and `P(a,x,k·c) = C(a)(x)(k·c)`.
    pub fn lookup(&self, p: &Bipos) -> Option<Sym> {
        match p {
            Bipos::Right { at, c } => self.nodes.get(at)?.ty.symbol_at(c),
            Bipos::Left { at, x, c } => self.nodes.get(at)?.ctx.symbol_at(x, c),
        }
    }

    /// Contexts recomputed from the axioms alone; `Err` on a track
    /// conflict.
    pub fn anchored_contexts(&self) -> Result<BTreeMap<Pos, SCtx>, SError> {
        let mut out: BTreeMap<Pos, SCtx> = BTreeMap::new();
        for (a, j) in self.nodes.iter().rev() {
            let c = match j.rule {
                SRule::Ax(k) => match self.term.label_at(&a.collapse()) {
                    Some(Label::Var(x)) => SCtx::single(x, k, j.ty.clone()),
                    _ => return Err(SError::SubjectMismatch(a.clone())),
                },
                SRule::Abs => out.get(&a.child(0)).map(|c| c.unbind().1).unwrap_or_default(),
                SRule::App => {
                    let mut c = SCtx::empty();
                    for k in self.children(a) {
                        c = union_at(a, &c, &out[&a.child(k)])?;
                    }
                    c
                }
            };
            out.insert(a.clone(), c);
        }
        Ok(out)
    }

    /// One judgment per line, premises indented under their conclusion.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (a, j) in &self.nodes {
            let rule = match j.rule {
                SRule::Ax(k) => format!("ax[{k}]"),
                SRule::Abs => "abs".into(),
                SRule::App => "app".into(),
            };
            s.push_str(&format!("{:indent$}{rule} @{a}  {} ⊢ {}\n", "", j.ctx, j.ty, indent = 2 * a.len()));
        }
        s
    }
}

impl fmt::Display for SDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl fmt::Debug for SDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SDerivation {{ term: {}, nodes:\n{}}}", crate::term::print_term(&self.term), self.render())
    }
}

impl PartialEq for SDerivation {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.term.equal(&other.term)
    }
}

impl Eq for SDerivation {}

fn union_at(a: &Pos, c: &SCtx, d: &SCtx) -> Result<SCtx, SError> {
    c.disjoint_union(d).map_err(|(x, k)| SError::TrackConflict { at: a.clone(), var: show(&x), track: k })
}

fn check_args(a: &Pos, dom: &Seq, args: &[u64], ty_of: &dyn Fn(u64) -> SType) -> Result<(), SError> {
    if dom.tail().is_some() {
        return Err(SError::Infinite(format!("application at {a} needs infinitely many arguments")));
    }
    let want: Vec<u64> = dom.tracks().into_iter().collect();
    if want != args {
        return Err(SError::RuleMismatch(a.clone(), format!("argument tracks {args:?} do not match domain {dom}")));
    }
    for (k, s) in dom.entries() {
        if ty_of(k) != *s {
            return Err(SError::RuleMismatch(a.clone(), format!("argument on track {k} has type {}, domain wants {s}", ty_of(k))));
        }
    }
    Ok(())
}

/// Validates every node: its rule against the subject's constructor, its
/// type and its context against its premises (with `⊎` at applications).
pub fn check_s(d: &SDerivation) -> Result<(), Vec<SError>> {
    let mut errs = Vec::new();
    if !d.nodes.contains_key(&Pos::eps()) {
        errs.push(SError::RuleMismatch(Pos::eps(), "no root judgment".into()));
    }
    for (a, j) in &d.nodes {
        if let Some(p) = a.parent() {
            if !d.nodes.contains_key(&p) {
                errs.push(SError::RuleMismatch(a.clone(), "parent is missing".into()));
            }
        }
        if let Err(e) = check_node(d, a, j) {
            errs.push(e);
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// [`check_s`] for a derivation claimed to type `t`.
pub fn check_s_against(d: &SDerivation, t: &Term) -> Result<(), Vec<SError>> {
    if !d.term.equal(t) {
        return Err(vec![SError::SubjectMismatch(Pos::eps())]);
    }
    check_s(d)
}

fn check_node(d: &SDerivation, a: &Pos, j: &SJudg) -> Result<(), SError> {
    let label = d.term.label_at(&a.collapse()).ok_or_else(|| SError::SubjectMismatch(a.clone()))?;
    let ch = d.children(a);
    let mismatch = |m: &str| Err(SError::RuleMismatch(a.clone(), m.to_string()));
    match (label, j.rule) {
        (Label::Var(x), SRule::Ax(k)) => {
            if !ch.is_empty() {
                return mismatch("axiom with premises");
            }
            if k < 2 {
                return mismatch("axiom track below 2");
            }
            if j.ctx != SCtx::single(x, k, j.ty.clone()) {
                return mismatch(&format!("axiom context {} is not x:({k}·{})", j.ctx, j.ty));
            }
            Ok(())
        }
        (Label::Abs, SRule::Abs) => {
            if ch != [0] {
                return mismatch("abstraction needs exactly the premise 0");
            }
            let body = &d.nodes[&a.child(0)];
            let (dom, ctx) = body.ctx.unbind();
            if j.ty != SType::arrow(dom, body.ty.clone()) {
                return mismatch(&format!("type {} does not extract the bound variable from the body", j.ty));
            }
            if j.ctx != ctx {
                return mismatch(&format!("context {} is not the body context minus the bound variable", j.ctx));
            }
            Ok(())
        }
        (Label::App, SRule::App) => {
            if !ch.contains(&1) || ch.contains(&0) {
                return mismatch("application needs a function premise");
            }
            let fun = &d.nodes[&a.child(1)];
            let SType::Arrow(dom, cod) = &fun.ty else {
                return mismatch("function premise is not an arrow");
            };
            if **cod != j.ty {
                return mismatch("type differs from the function's codomain");
            }
            let args: Vec<u64> = ch.iter().copied().filter(|&k| k >= 2).collect();
            check_args(a, dom, &args, &|k| d.nodes[&a.child(k)].ty.clone())?;
            let mut ctx = fun.ctx.clone();
            for &k in &args {
                ctx = union_at(a, &ctx, &d.nodes[&a.child(k)].ctx)?;
            }
            if ctx != j.ctx {
                return mismatch(&format!("context {} is not the disjoint union of the premises' {}", j.ctx, ctx));
            }
            Ok(())
        }
        _ => mismatch("rule does not match the subject's constructor"),
    }
}

/// Every context entry is exactly the disjoint union of the axioms that
/// type the variable above the node (no phantom tracks).
pub fn is_quantitative(d: &SDerivation) -> bool {
    match d.anchored_contexts() {
        Ok(anchored) => d.nodes.iter().all(|(a, j)| anchored.get(a) == Some(&j.ctx)),
        Err(_) => false,
    }
}

/// `pos⟨a, x, k⟩`: the axiom above `a` typing `x` with axiom track `k`.
pub fn axiom_position(d: &SDerivation, a: &Pos, x: &Var, k: u64) -> Result<Pos, SError> {
    let not_anchored = || SError::NotAnchored { at: a.clone(), var: show(x), track: k };
    let mut cur = a.clone();
    let mut x = x.clone();
    loop {
        let j = d.nodes.get(&cur).ok_or_else(not_anchored)?;
        match j.rule {
            SRule::Ax(tr) => {
                return if tr == k && j.ctx.get(&x).is_some() { Ok(cur) } else { Err(not_anchored()) };
            }
            SRule::Abs => {
                if let Var::Bound(i) = x {
                    x = Var::Bound(i + 1);
                }
                cur = cur.child(0);
            }
            SRule::App => {
                let next = d.children(&cur).into_iter().find(|&l| {
                    d.nodes[&cur.child(l)].ctx.get(&x).is_some_and(|s| s.tracks().contains(&k))
                });
                cur = cur.child(next.ok_or_else(not_anchored)?);
            }
        }
    }
}

/// Forgets tracks, giving the R0 derivation the S-derivation collapses on.
pub fn collapse_s_to_multiset(d: &SDerivation) -> Result<R0Derivation, SError> {
    fn go(d: &SDerivation, a: &Pos) -> Result<R0Derivation, SError> {
        let j = &d.nodes[a];
        let inf = || SError::Infinite(format!("type at {a}"));
        let r = |e: R0Error| SError::Other(e.to_string());
        match j.rule {
            SRule::Ax(_) => R0Derivation::ax(&d.term, a.collapse(), j.ty.collapse().ok_or_else(inf)?).map_err(r),
            SRule::Abs => Ok(R0Derivation::abs(a.collapse(), go(d, &a.child(0))?)),
            SRule::App => {
                let fun = go(d, &a.child(1))?;
                let args = d.children(a).into_iter().filter(|&k| k >= 2).map(|k| go(d, &a.child(k))).collect::<Result<_, _>>()?;
                R0Derivation::app(a.collapse(), fun, args).map_err(r)
            }
        }
    }
    go(d, &Pos::eps())
}

/// Lifts a finite R0 derivation of `t`. Every judgment gets the canonical
/// lift of its type: a multiset `[σ1 ≤ … ≤ σn]` becomes the sequence on
/// tracks `2, …, n+1`. Axioms of a bound variable take the track of their
/// type's slot in the binder's domain (equal types in position order);
/// axioms of variables free in `t` take tracks from `policy`.
pub fn lift_r0_to_s(d: &R0Derivation, t: &Term, policy: &mut TrackPolicy) -> Result<SDerivation, SError> {
    let mut support = BTreeSet::new();
    // Axioms grouped by binder position (None: free in the subject).
    let mut groups: BTreeMap<Option<Pos>, Vec<(Pos, crate::r0::RType)>> = BTreeMap::new();
    let mut free_names: BTreeMap<Pos, Var> = BTreeMap::new();
    fn walk(
        n: &R0Derivation,
        at: Pos,
        binders: &mut Vec<Pos>,
        support: &mut BTreeSet<Pos>,
        groups: &mut BTreeMap<Option<Pos>, Vec<(Pos, crate::r0::RType)>>,
        free_names: &mut BTreeMap<Pos, Var>,
    ) {
        support.insert(at.clone());
        match &n.rule {
            R0Rule::Ax => {
                let (x, _) = n.ctx.entries().next().expect("axiom context");
                let binder = match x {
                    Var::Bound(i) if (*i as usize) < binders.len() => Some(binders[binders.len() - 1 - *i as usize].clone()),
                    _ => None,
                };
                if binder.is_none() {
                    let root_key = match x {
                        Var::Bound(i) => Var::Bound(i - binders.len() as u32),
                        _ => x.clone(),
                    };
                    free_names.insert(at.clone(), root_key);
                }
                groups.entry(binder).or_default().push((at, n.ty.clone()));
            }
            R0Rule::Abs(b) => {
                binders.push(at.clone());
                walk(b, at.child(0), binders, support, groups, free_names);
                binders.pop();
            }
            R0Rule::App(f, args) => {
                walk(f, at.child(1), binders, support, groups, free_names);
                for (i, a) in args.iter().enumerate() {
                    walk(a, at.child(i as u64 + 2), binders, support, groups, free_names);
                }
            }
        }
    }
    walk(d, Pos::eps(), &mut Vec::new(), &mut support, &mut groups, &mut free_names);
    let mut axioms = BTreeMap::new();
    for (binder, mut members) in groups {
        match binder {
            Some(_) => {
                members.sort_by(|(p, s), (q, u)| s.cmp(u).then_with(|| p.cmp_length_lex(q)));
                for (i, (p, ty)) in members.into_iter().enumerate() {
                    axioms.insert(p, (i as u64 + 2, SType::canonical_lift(&ty)));
                }
            }
            None => {
                // Each free variable is its own group under the policy.
                let mut by_var: BTreeMap<Var, Vec<(Pos, crate::r0::RType)>> = BTreeMap::new();
                for (p, ty) in members {
                    by_var.entry(free_names[&p].clone()).or_default().push((p, ty));
                }
                for (_, ms) in by_var {
                    let tracks = policy.assign(ms.iter().map(|(p, _)| p.clone()))?;
                    for (p, ty) in ms {
                        axioms.insert(p.clone(), (tracks[&p], SType::canonical_lift(&ty)));
                    }
                }
            }
        }
    }
    SDerivation::from_axioms(t, &support, &axioms)
}

/// Lifts every member of a list with one shared policy.
pub fn lift_family(ds: &[R0Derivation], t: &Term, policy: &mut TrackPolicy) -> Result<Vec<SDerivation>, SError> {
    ds.iter().map(|d| lift_r0_to_s(d, t, policy)).collect()
}
