//! Deterministic subject reduction and uniform subject expansion for S,
//! with residuals of positions and right bipositions.
//!
//! Throughout, `b` is the term position of a redex `(λx.r)s`, and `a`
//! ranges over the representatives of `b` (the derivation positions `a`
//! with `collapse(a) = b`). For each of them, `a·1·0` types `r`, the
//! argument premises `a·k` type `s` and `a·1·0·a_k` is the axiom typing
//! `x` with axiom track `k`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::pos::Pos;
use crate::sderiv::{axiom_position, Bipos, SDerivation, SError, SJudg, SRule};
use crate::stype::{SCtx, SType, Seq};
use crate::term::{Label, Term, Var};
use crate::track::TrackPolicy;

/// Why a position has no residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Undefined {
    /// The application of the contracted redex.
    RedexRoot,
    /// The abstraction of the contracted redex.
    RedexAbstraction,
    /// An axiom typing the substituted variable.
    RedexVariable,
    /// Left bipositions have no residuals.
    LeftBiposition,
    NotInSupport,
}

#[derive(Clone, Debug)]
struct Rep {
    a: Pos,
    /// Argument track `k ↦ a_k`, relative to `a·1·0`.
    ak: BTreeMap<u64, Pos>,
}

fn body(a: &Pos) -> Pos {
    a.child(1).child(0)
}

fn reps(d: &SDerivation, b: &Pos) -> Result<Vec<Rep>, SError> {
    if !d.term().is_redex_at(b) {
        return Err(SError::InvalidRedex(b.clone()));
    }
    let mut out = Vec::new();
    for a in d.nodes().keys().filter(|a| a.collapse() == *b) {
        let r = body(a);
        let j = d.get(&r).ok_or_else(|| SError::RuleMismatch(a.clone(), "redex without a typed body".into()))?;
        let mut ak = BTreeMap::new();
        if let Some(seq) = j.ctx.get(&Var::Bound(0)) {
            for k in seq.tracks() {
                let at = axiom_position(d, &r, &Var::Bound(0), k)?;
                ak.insert(k, r.strip_prefix_of(&at).expect("axiom lies above the body"));
            }
        }
        out.push(Rep { a: a.clone(), ak });
    }
    Ok(out)
}

/// Number of abstractions crossed by a (relative) position.
fn zeros(p: &Pos) -> u32 {
    p.letters().iter().filter(|&&l| l == 0).count() as u32
}

fn rep_below<'r>(reps: &'r [Rep], alpha: &Pos) -> Option<&'r Rep> {
    reps.iter().find(|r| r.a.is_prefix_of(alpha))
}

fn res_with(reps: &[Rep], alpha: &Pos) -> Result<Pos, Undefined> {
    let Some(rep) = rep_below(reps, alpha) else { return Ok(alpha.clone()) };
    let rest = rep.a.strip_prefix_of(alpha).expect("prefix");
    let l = rest.letters();
    match l.first() {
        None => Err(Undefined::RedexRoot),
        Some(1) => {
            if l.len() == 1 {
                return Err(Undefined::RedexAbstraction);
            }
            let a0 = rest.suffix_from(2);
            if rep.ak.values().any(|p| *p == a0) {
                Err(Undefined::RedexVariable)
            } else {
                Ok(rep.a.concat(&a0))
            }
        }
        Some(&k) => match rep.ak.get(&k) {
            Some(ak) => Ok(rep.a.concat(ak).concat(&rest.suffix_from(1))),
            None => Err(Undefined::NotInSupport),
        },
    }
}

/// `Res_b(α)`.
pub fn residual_position(d: &SDerivation, b: &Pos, alpha: &Pos) -> Result<Result<Pos, Undefined>, SError> {
    if d.get(alpha).is_none() {
        return Ok(Err(Undefined::NotInSupport));
    }
    Ok(res_with(&reps(d, b)?, alpha))
}

/// `Res_b(α, γ) = (Res_b(α), γ)` on right bipositions.
pub fn residual_biposition(d: &SDerivation, b: &Pos, p: &Bipos) -> Result<Result<Bipos, Undefined>, SError> {
    match p {
        Bipos::Left { .. } => Ok(Err(Undefined::LeftBiposition)),
        Bipos::Right { at, c } => {
            if d.lookup(p).is_none() {
                return Ok(Err(Undefined::NotInSupport));
            }
            Ok(residual_position(d, b, at)?.map(|a2| Bipos::right(a2, c.clone())))
        }
    }
}

/// Quasi-residual of a right biposition: `Res_b` extended to the redex
/// root, the redex variable and the redex abstraction. An argument entry
/// `(a·1, k·γ0)` of the abstraction's type goes to `(a·a_k, γ0)`.
pub fn quasi_residual(d: &SDerivation, b: &Pos, p: &Bipos) -> Result<Option<Bipos>, SError> {
    let Bipos::Right { at, c } = p else { return Ok(None) };
    if d.lookup(p).is_none() {
        return Ok(None);
    }
    let reps = reps(d, b)?;
    Ok(qres_with(&reps, at, c))
}

fn qres_with(reps: &[Rep], at: &Pos, c: &Pos) -> Option<Bipos> {
    match res_with(reps, at) {
        Ok(a2) => Some(Bipos::right(a2, c.clone())),
        Err(Undefined::RedexRoot) => Some(Bipos::right(at.clone(), c.clone())),
        Err(Undefined::RedexVariable) => {
            let rep = rep_below(reps, at)?;
            let a0 = rep.a.strip_prefix_of(at)?.suffix_from(2);
            Some(Bipos::right(rep.a.concat(&a0), c.clone()))
        }
        Err(Undefined::RedexAbstraction) => {
            let rep = rep_below(reps, at)?;
            match c.letters().first() {
                None => Some(Bipos::right(rep.a.clone(), Pos::eps())),
                Some(1) => Some(Bipos::right(rep.a.clone(), c.suffix_from(1))),
                Some(k) => Some(Bipos::right(rep.a.concat(rep.ak.get(k)?), c.suffix_from(1))),
            }
        }
        Err(_) => None,
    }
}

/// All right bipositions of `d` with their quasi-residuals in the reduct.
pub fn quasi_residual_map(d: &SDerivation, b: &Pos) -> Result<BTreeMap<Bipos, Bipos>, SError> {
    let reps = reps(d, b)?;
    let mut out = BTreeMap::new();
    for p in d.right_bisupport() {
        let Bipos::Right { at, c } = &p else { continue };
        if let Some(q) = qres_with(&reps, at, c) {
            out.insert(p, q);
        }
    }
    Ok(out)
}

/// The derivation reduct `P′` with `P →_b P′`.
///
/// `supp(P′) = Res_b(supp(P))`, `T′(Res_b(α)) = T(α)`; contexts inside the
/// body of a representative are `(C(α) ∖ x) ⊎ ⊎_{k ∈ K(α)} C(a·k)`, and
/// copied elsewhere, so phantom tracks are carried over unchanged.
pub fn reduce_s(d: &SDerivation, b: &Pos) -> Result<SDerivation, SError> {
    let reps = reps(d, b)?;
    let t2 = d.term().reduce_at(b).map_err(|_| SError::InvalidRedex(b.clone()))?;
    let mut nodes = BTreeMap::new();
    for (alpha, j) in d.nodes() {
        let Ok(a2) = res_with(&reps, alpha) else { continue };
        let ctx = match rep_below(&reps, alpha) {
            Some(rep) if body(&rep.a).is_prefix_of(alpha) => {
                let rel = body(&rep.a).strip_prefix_of(alpha).expect("prefix");
                let depth = rel.letters().iter().filter(|&&l| l == 0).count() as u32;
                let (xs, mut ctx) = j.ctx.unbind_at(depth);
                for k in xs.tracks() {
                    let arg = d.get(&rep.a.child(k)).ok_or_else(|| SError::NotAnchored {
                        at: rep.a.clone(),
                        var: "#0".into(),
                        track: k,
                    })?;
                    ctx = ctx.disjoint_union(&arg.ctx.shifted(depth)).map_err(|(x, tr)| SError::TrackConflict {
                        at: alpha.clone(),
                        var: crate::r0::show_var(&x),
                        track: tr,
                    })?;
                }
                ctx
            }
            // A node of an argument subderivation moves under the binders
            // crossed by its substitution site.
            Some(rep) => match rep.a.strip_prefix_of(alpha).and_then(|rel| Some((rel.first()?, rel))) {
                Some((k, rel)) if k >= 2 => {
                    let site = rep.ak.get(&k).map_or(0, zeros);
                    j.ctx.shifted_from(zeros(&rel.suffix_from(1)), i64::from(site))
                }
                _ => j.ctx.clone(),
            },
            None => j.ctx.clone(),
        };
        nodes.insert(a2, SJudg { ctx, ty: j.ty.clone(), rule: j.rule });
    }
    Ok(SDerivation::from_judgments(&t2, nodes))
}

/// How a position of the reduct relates to the contracted redex.
enum Region {
    /// Inside `r`, outside every substituted occurrence.
    Body,
    /// Root of a substituted occurrence of `s`.
    ArgRoot,
    /// Strictly inside a substituted occurrence; the value is the length
    /// of the occurrence's root (relative to the representative).
    ArgInner(usize),
}

/// Classifies `rel` (a derivation position relative to a representative
/// of `b` in the reduct) by walking `r` in the original term.
fn classify(t: &Term, b: &Pos, rel: &Pos) -> Result<Region, SError> {
    let r_root = b.child(1).child(0);
    let mut depth = 0u32;
    let mut cur = r_root.clone();
    let letters = rel.letters();
    for i in 0..=letters.len() {
        match t.label_at(&cur) {
            Some(Label::Var(Var::Bound(j))) if j == depth => {
                return Ok(if i == letters.len() { Region::ArgRoot } else { Region::ArgInner(i) });
            }
            Some(Label::Abs) => depth += 1,
            Some(_) => {}
            None => return Err(SError::SubjectMismatch(rel.clone())),
        }
        if i < letters.len() {
            cur = cur.child(letters[i].min(2));
        }
    }
    Ok(Region::Body)
}

/// `Exp_b(P′, ⟨·⟩, t)`: the unique `P` with `P →_b P′` whose created
/// axioms (typing the redex variable) get the tracks chosen by `policy`
/// for their positions.
pub fn expand_s(d2: &SDerivation, b: &Pos, t: &Term, policy: &mut TrackPolicy) -> Result<SDerivation, SError> {
    if !t.is_redex_at(b) {
        return Err(SError::InvalidRedex(b.clone()));
    }
    let t2 = t.reduce_at(b).map_err(|_| SError::InvalidRedex(b.clone()))?;
    if !t2.equal(d2.term()) {
        return Err(SError::SubjectMismatch(b.clone()));
    }
    let rep_positions: Vec<Pos> = d2.nodes().keys().filter(|a| a.collapse() == *b).cloned().collect();
    // First pass: classify every position above a representative.
    let mut classes: BTreeMap<Pos, (Pos, Pos, Region)> = BTreeMap::new();
    let mut created: Vec<Pos> = Vec::new();
    for alpha in d2.nodes().keys() {
        let Some(a) = rep_positions.iter().find(|a| a.is_prefix_of(alpha)) else { continue };
        let rel = a.strip_prefix_of(alpha).expect("prefix");
        let region = classify(t, b, &rel)?;
        if matches!(region, Region::ArgRoot) {
            created.push(body(a).concat(&rel));
        }
        classes.insert(alpha.clone(), (a.clone(), rel, region));
    }
    let tracks = policy.assign(created)?;

    let mut nodes: BTreeMap<Pos, SJudg> = BTreeMap::new();
    let mut args: BTreeMap<Pos, Vec<u64>> = BTreeMap::new();
    for (alpha, j) in d2.nodes() {
        let Some((a, rel, region)) = classes.get(alpha) else {
            nodes.insert(alpha.clone(), j.clone());
            continue;
        };
        match region {
            Region::Body => {
                nodes.insert(body(a).concat(rel), j.clone());
            }
            Region::ArgRoot => {
                let x_at = body(a).concat(rel);
                let k = tracks[&x_at];
                let depth = zeros(rel);
                let x = Var::Bound(depth);
                nodes.insert(x_at, SJudg { ctx: SCtx::single(x, k, j.ty.clone()), ty: j.ty.clone(), rule: SRule::Ax(k) });
                nodes.insert(a.child(k), SJudg { ctx: j.ctx.shifted_from(0, -i64::from(depth)), ..j.clone() });
                args.entry(a.clone()).or_default().push(k);
            }
            Region::ArgInner(n) => {
                let root = body(a).concat(&rel.prefix(*n));
                let k = tracks[&root];
                let inner = rel.suffix_from(*n);
                let ctx = j.ctx.shifted_from(zeros(&inner), -i64::from(zeros(&rel.prefix(*n))));
                nodes.insert(a.child(k).concat(&inner), SJudg { ctx, ..j.clone() });
            }
        }
    }
    for a in &rep_positions {
        let j = &d2.get(a).expect("representative").clone();
        let dom = Seq::from_pairs(args.get(a).into_iter().flatten().map(|k| (*k, nodes[&a.child(*k)].ty.clone())));
        nodes.insert(a.clone(), SJudg { ctx: j.ctx.clone(), ty: j.ty.clone(), rule: SRule::App });
        nodes.insert(a.child(1), SJudg { ctx: SCtx::empty(), ty: SType::arrow(dom, j.ty.clone()), rule: SRule::Abs });
        recompute_contexts(t, &mut nodes, &a.child(1))?;
    }
    Ok(SDerivation::from_judgments(t, nodes))
}

/// Recomputes contexts bottom-up from the axioms in the subtree at `root`.
fn recompute_contexts(t: &Term, nodes: &mut BTreeMap<Pos, SJudg>, root: &Pos) -> Result<(), SError> {
    let subtree: Vec<Pos> = nodes.range(root.clone()..).take_while(|(p, _)| root.is_prefix_of(p)).map(|(p, _)| p.clone()).collect();
    for a in subtree.iter().rev() {
        let ctx = match nodes[a].rule {
            SRule::Ax(k) => match t.label_at(&a.collapse()) {
                Some(Label::Var(x)) => SCtx::single(x, k, nodes[a].ty.clone()),
                _ => return Err(SError::SubjectMismatch(a.clone())),
            },
            SRule::Abs => nodes.get(&a.child(0)).map(|j| j.ctx.unbind().1).unwrap_or_else(SCtx::empty),
            SRule::App => {
                let mut c = SCtx::empty();
                for (p, j) in nodes.range(a.child(1)..).take_while(|(p, _)| a.is_prefix_of(p)) {
                    if p.len() == a.len() + 1 {
                        c = c.disjoint_union(&j.ctx).map_err(|(x, k)| SError::TrackConflict {
                            at: a.clone(),
                            var: crate::r0::show_var(&x),
                            track: k,
                        })?;
                    }
                }
                c
            }
        };
        nodes.get_mut(a).expect("in subtree").ctx = ctx;
    }
    Ok(())
}

/// Axiom tracks of `d`, for expanding a reduct of `d` back into `d`.
pub fn reference_policy(d: &SDerivation) -> TrackPolicy {
    TrackPolicy::from_reference(d.axioms().into_iter().map(|(p, (k, _))| (p, k)).collect())
}

/// Bipositions related to `p` by one elementary equinecessity step:
/// `asc` and its converse, the axiom link `(a,x,k·c) ↔ (a,c)` and
/// `(a·1,k·c) ↔ (a·k,c)` at applications.
fn neighbours(d: &SDerivation, p: &Bipos) -> Vec<Bipos> {
    let mut out = Vec::new();
    let rule_at = |a: &Pos| d.get(a).map(|j| j.rule);
    match p {
        Bipos::Right { at, c } => {
            match rule_at(at) {
                Some(SRule::Abs) => match c.letters().first() {
                    None => out.push(Bipos::right(at.child(0), Pos::eps())),
                    Some(1) => out.push(Bipos::right(at.child(0), c.suffix_from(1))),
                    Some(_) => out.push(Bipos::left(at.child(0), Var::Bound(0), c.clone())),
                },
                Some(SRule::App) => out.push(Bipos::right(at.child(1), Pos::new(std::iter::once(1).chain(c.letters().iter().copied()).collect()))),
                Some(SRule::Ax(k)) => out.push(Bipos::left(at.clone(), ax_var(d, at), Pos::new(std::iter::once(k).chain(c.letters().iter().copied()).collect()))),
                None => {}
            }
            if let Some((parent, l)) = at.parent().zip(at.last()) {
                match (rule_at(&parent), l) {
                    (Some(SRule::Abs), 0) => out.push(Bipos::right(parent.clone(), Pos::new(std::iter::once(1).chain(c.letters().iter().copied()).collect()))),
                    (Some(SRule::App), 1) => {
                        if let Some((&first, rest)) = c.letters().split_first() {
                            if first == 1 {
                                out.push(Bipos::right(parent.clone(), Pos::new(rest.to_vec())));
                            } else {
                                out.push(Bipos::right(parent.child(first), Pos::new(rest.to_vec())));
                            }
                        }
                    }
                    (Some(SRule::App), k) if k >= 2 => {
                        out.push(Bipos::right(at.parent().expect("parent").child(1), Pos::new(std::iter::once(k).chain(c.letters().iter().copied()).collect())));
                    }
                    _ => {}
                }
            }
        }
        Bipos::Left { at, x, c } => {
            match rule_at(at) {
                Some(SRule::Ax(_)) => out.push(Bipos::right(at.clone(), c.suffix_from(1))),
                Some(SRule::Abs) => {
                    let x2 = match x {
                        Var::Bound(i) => Var::Bound(i + 1),
                        _ => x.clone(),
                    };
                    out.push(Bipos::left(at.child(0), x2, c.clone()));
                }
                Some(SRule::App) => {
                    let k = c.first().expect("left bipositions start with a track");
                    for l in d.children(at) {
                        if d.get(&at.child(l)).and_then(|j| j.ctx.get(x)).is_some_and(|s| s.get(k).is_some()) {
                            out.push(Bipos::left(at.child(l), x.clone(), c.clone()));
                        }
                    }
                }
                None => {}
            }
            if let Some((parent, l)) = at.parent().zip(at.last()) {
                match (rule_at(&parent), x) {
                    (Some(SRule::Abs), Var::Bound(0)) if l == 0 => out.push(Bipos::right(parent, c.clone())),
                    (Some(SRule::Abs), Var::Bound(i)) => out.push(Bipos::left(parent, Var::Bound(i - 1), c.clone())),
                    (Some(SRule::Abs), _) => out.push(Bipos::left(parent, x.clone(), c.clone())),
                    (Some(SRule::App), _) => out.push(Bipos::left(parent, x.clone(), c.clone())),
                    _ => {}
                }
            }
        }
    }
    out.retain(|q| d.lookup(q).is_some());
    out
}

fn ax_var(d: &SDerivation, a: &Pos) -> Var {
    d.get(a).and_then(|j| j.ctx.entries().next().map(|(x, _)| x.clone())).unwrap_or(Var::Bound(u32::MAX))
}

/// Least superset of `bs` closed under elementary equinecessity. Members
/// outside the bisupport are dropped.
pub fn equinecessary_closure(d: &SDerivation, bs: &BTreeSet<Bipos>) -> BTreeSet<Bipos> {
    let mut seen: BTreeSet<Bipos> = bs.iter().filter(|p| d.lookup(p).is_some()).cloned().collect();
    let mut queue: VecDeque<Bipos> = seen.iter().cloned().collect();
    while let Some(p) = queue.pop_front() {
        for q in neighbours(d, &p) {
            if seen.insert(q.clone()) {
                queue.push_back(q);
            }
        }
    }
    seen
}
