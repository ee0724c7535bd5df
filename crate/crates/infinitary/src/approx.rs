//! The approximation order on S-derivations, its lattice operations,
//! finite approximants, and infinitary subject expansion/reduction over
//! rank-indexed families of finite derivations.

use std::collections::{BTreeMap, BTreeSet};

use crate::dynamics::{equinecessary_closure, expand_s, reduce_s};
use crate::nf::{rank_truncate, NfError, NfGenerator};
use crate::pos::Pos;
use crate::r0::settle_index;
use crate::reduction::{Path, PathEnd};
use crate::sderiv::{check_s, Bipos, SDerivation, SError, SJudg};
use crate::stype::{SCtx, SType, Seq, Sym};
use crate::track::TrackPolicy;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApproxError {
    #[error("the derivations type different terms")]
    SubjectMismatch,
    #[error("members {left} and {right} have no common upper bound")]
    NotDirected { left: usize, right: usize },
    #[error("result is not a derivation: {0}")]
    Invalid(String),
    #[error("biposition {0} is outside every generated member")]
    NotContained(Bipos),
    #[error("member {member}: the recorded path never gets deeper than its typed positions")]
    PathTooShort { member: usize },
    #[error("depth {0} does not stabilise on the recorded path")]
    NotStable(usize),
    #[error("an empty family")]
    Empty,
    #[error(transparent)]
    Deriv(#[from] SError),
    #[error(transparent)]
    Nf(#[from] NfError),
}

fn invalid(errs: Vec<SError>) -> ApproxError {
    ApproxError::Invalid(errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
}

/// `d1 ≤ d2`: bisupport inclusion with symbol agreement.
pub fn leq_approx(d1: &SDerivation, d2: &SDerivation) -> Result<bool, ApproxError> {
    if !d1.term().equal(d2.term()) {
        return Err(ApproxError::SubjectMismatch);
    }
    Ok(d1.nodes().iter().all(|(a, j)| {
        d2.get(a).is_some_and(|k| j.rule == k.rule && j.ty.leq(&k.ty) && j.ctx.leq(&k.ctx))
    }))
}

fn join2(d1: &SDerivation, d2: &SDerivation) -> Option<SDerivation> {
    let mut nodes = d1.nodes().clone();
    for (a, j) in d2.nodes() {
        let v = match nodes.get(a) {
            Some(i) if i.rule != j.rule => return None,
            Some(i) => SJudg { ctx: i.ctx.join(&j.ctx)?, ty: i.ty.join(&j.ty)?, rule: i.rule },
            None => j.clone(),
        };
        nodes.insert(a.clone(), v);
    }
    let d = SDerivation::from_judgments(d1.term(), nodes);
    check_s(&d).is_ok().then_some(d)
}

fn meet2(d1: &SDerivation, d2: &SDerivation) -> Option<SDerivation> {
    let mut nodes = BTreeMap::new();
    for (a, i) in d1.nodes() {
        if let Some(j) = d2.get(a) {
            if i.rule != j.rule {
                return None;
            }
            nodes.insert(a.clone(), SJudg { ctx: i.ctx.meet(&j.ctx)?, ty: i.ty.meet(&j.ty)?, rule: i.rule });
        }
    }
    Some(SDerivation::from_judgments(d1.term(), nodes))
}

fn same_subject(ds: &[SDerivation]) -> Result<(), ApproxError> {
    let first = ds.first().ok_or(ApproxError::Empty)?;
    if ds.iter().any(|d| !d.term().equal(first.term())) {
        return Err(ApproxError::SubjectMismatch);
    }
    Ok(())
}

/// Least upper bound of a finite directed set.
pub fn join(ds: &[SDerivation]) -> Result<SDerivation, ApproxError> {
    same_subject(ds)?;
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            if join2(&ds[i], &ds[j]).is_none() {
                return Err(ApproxError::NotDirected { left: i, right: j });
            }
        }
    }
    let mut acc = ds[0].clone();
    for d in &ds[1..] {
        acc = join2(&acc, d).ok_or(ApproxError::NotDirected { left: 0, right: 1 })?;
    }
    check_s(&acc).map_err(invalid)?;
    Ok(acc)
}

/// Greatest lower bound; the result is validated.
pub fn meet(ds: &[SDerivation]) -> Result<SDerivation, ApproxError> {
    same_subject(ds)?;
    let mut acc = ds[0].clone();
    for (i, d) in ds.iter().enumerate().skip(1) {
        acc = meet2(&acc, d).ok_or(ApproxError::NotDirected { left: 0, right: i })?;
    }
    check_s(&acc).map_err(invalid)?;
    Ok(acc)
}

/// Right bipositions present in a finite type, relative to `c0`.
fn type_positions(t: &SType, c0: &Pos, out: &mut Vec<Pos>) {
    out.push(c0.clone());
    if let SType::Arrow(f, cod) = t {
        type_positions(cod, &c0.child(1), out);
        for (k, s) in f.entries() {
            type_positions(s, &c0.child(k), out);
        }
    }
}

fn restrict_type(t: &SType, c0: &Pos, keep: &dyn Fn(&Pos) -> bool) -> SType {
    match t {
        SType::Arrow(f, cod) => SType::arrow(restrict_seq(f, c0, keep), restrict_type(cod, &c0.child(1), keep)),
        _ => t.clone(),
    }
}

fn restrict_seq(s: &Seq, c0: &Pos, keep: &dyn Fn(&Pos) -> bool) -> Seq {
    Seq::from_pairs(s.entries().filter(|(k, _)| keep(&c0.child(*k))).map(|(k, u)| (k, restrict_type(u, &c0.child(k), keep))))
}

/// The least approximation of a finite derivation whose bisupport contains
/// `bs`: close under equinecessity, type prefixes, codomains and
/// derivation prefixes until nothing changes, then restrict.
pub fn least_approximant(d: &SDerivation, bs: &BTreeSet<Bipos>) -> Result<SDerivation, ApproxError> {
    if !d.is_finite() {
        return Err(ApproxError::Deriv(SError::Infinite("least approximant".into())));
    }
    let mut set: BTreeSet<Bipos> = bs.iter().filter(|p| d.lookup(p).is_some()).cloned().collect();
    set.insert(Bipos::right(Pos::eps(), Pos::eps()));
    loop {
        let mut next = equinecessary_closure(d, &set);
        let snapshot: Vec<Bipos> = next.iter().cloned().collect();
        for p in snapshot {
            let (at, c) = match &p {
                Bipos::Right { at, c } => (at.clone(), c.clone()),
                Bipos::Left { at, c, .. } => (at.clone(), c.clone()),
            };
            if let Some(parent) = at.parent() {
                next.insert(Bipos::right(parent, Pos::eps()));
            }
            next.insert(Bipos::right(at.clone(), Pos::eps()));
            let mut pre = c.clone();
            while let Some(q) = pre.parent() {
                let b = match &p {
                    Bipos::Right { .. } => Bipos::right(at.clone(), q.clone()),
                    Bipos::Left { x, .. } if !q.is_empty() => Bipos::left(at.clone(), x.clone(), q.clone()),
                    Bipos::Left { .. } => break,
                };
                next.insert(b);
                pre = q;
            }
            if d.lookup(&p) == Some(Sym::Arrow) {
                let cod = Pos::new(c.letters().iter().copied().chain([1]).collect());
                next.insert(match &p {
                    Bipos::Right { .. } => Bipos::right(at, cod),
                    Bipos::Left { x, .. } => Bipos::left(at, x.clone(), cod),
                });
            }
        }
        if next == set {
            break;
        }
        set = next;
    }
    let mut nodes = BTreeMap::new();
    for (a, j) in d.nodes() {
        if !set.contains(&Bipos::right(a.clone(), Pos::eps())) {
            continue;
        }
        let keep_r = |c: &Pos| set.contains(&Bipos::right(a.clone(), c.clone()));
        let ty = restrict_type(&j.ty, &Pos::eps(), &keep_r);
        let mut ctx = SCtx::empty();
        for (x, s) in j.ctx.entries() {
            let keep_l = |c: &Pos| set.contains(&Bipos::left(a.clone(), x.clone(), c.clone()));
            ctx.insert(x.clone(), restrict_seq(s, &Pos::eps(), &keep_l));
        }
        nodes.insert(a.clone(), SJudg { ctx, ty, rule: j.rule });
    }
    let out = SDerivation::from_judgments(d.term(), nodes);
    check_s(&out).map_err(invalid)?;
    Ok(out)
}

/// All right bipositions of a finite type-carrying judgment set, used to
/// sample bipositions.
pub fn right_bipositions(d: &SDerivation) -> Vec<Bipos> {
    let mut out = Vec::new();
    for (a, j) in d.nodes() {
        let mut cs = Vec::new();
        type_positions(&j.ty, &Pos::eps(), &mut cs);
        out.extend(cs.into_iter().map(|c| Bipos::right(a.clone(), c)));
    }
    out
}

/// Root bipositions where `()` makes a conclusion forgetful: arrows with
/// an empty domain, positive in the type or negative in the context.
pub fn forgetful_occurrences(d: &SDerivation) -> Vec<Bipos> {
    fn occ(t: &SType, positive: bool, c: Pos, out: &mut Vec<Pos>) {
        if let SType::Arrow(f, cod) = t {
            if f.is_empty() && !positive {
                out.push(c.clone());
            }
            for (k, s) in f.entries() {
                occ(s, !positive, c.child(k), out);
            }
            occ(cod, positive, c.child(1), out);
        }
    }
    let (ctx, ty) = d.conclusion();
    let mut cs = Vec::new();
    occ(ty, true, Pos::eps(), &mut cs);
    let mut out: Vec<Bipos> = cs.into_iter().map(|c| Bipos::right(Pos::eps(), c)).collect();
    for (x, s) in ctx.entries() {
        for (k, t) in s.entries() {
            let mut cs = Vec::new();
            occ(t, false, Pos::new(vec![k]), &mut cs);
            out.extend(cs.into_iter().map(|c| Bipos::left(Pos::eps(), x.clone(), c)));
        }
    }
    out
}

fn has_domain_entry(d: &SDerivation, p: &Bipos) -> bool {
    d.bisupport_upto(p_len(p) + 1).iter().any(|q| match (p, q) {
        (Bipos::Right { at, c }, Bipos::Right { at: a2, c: c2 }) => {
            at == a2 && c.is_prefix_of(c2) && c2.len() == c.len() + 1 && c2.last().is_some_and(|k| k >= 2)
        }
        (Bipos::Left { at, x, c }, Bipos::Left { at: a2, x: x2, c: c2 }) => {
            at == a2 && x == x2 && c.is_prefix_of(c2) && c2.len() == c.len() + 1 && c2.last().is_some_and(|k| k >= 2)
        }
        _ => false,
    })
}

fn p_len(p: &Bipos) -> usize {
    match p {
        Bipos::Right { c, .. } | Bipos::Left { c, .. } => c.len(),
    }
}

/// Unforgetfulness of the join of a chain, judged on a finite window:
/// every forgetful `()` in a member's conclusion must be filled in the
/// next member. The last member's own occurrences are beyond the window.
pub fn join_is_unforgetful(chain: &[SDerivation]) -> bool {
    chain.windows(2).all(|w| forgetful_occurrences(&w[0]).iter().all(|p| has_domain_entry(&w[1], p)))
}

/// A rank-indexed generator of finite derivations; `None` past the end.
pub trait Family {
    fn member(&mut self, n: u64) -> Result<Option<SDerivation>, ApproxError>;
}

/// Rank-`n` truncations of a normal-form generator.
pub struct NfFamily {
    pub generator: NfGenerator,
    pub policy: TrackPolicy,
}

impl Family for NfFamily {
    fn member(&mut self, n: u64) -> Result<Option<SDerivation>, ApproxError> {
        Ok(Some(rank_truncate(&self.generator, n, &mut self.policy)?.into_derivation()))
    }
}

/// A recorded family: member `n` is the `n`-th element.
pub struct RecordedFamily(pub Vec<SDerivation>);

impl Family for RecordedFamily {
    fn member(&mut self, n: u64) -> Result<Option<SDerivation>, ApproxError> {
        Ok(usize::try_from(n).ok().and_then(|i| self.0.get(i)).cloned())
    }
}

#[derive(Debug, Clone)]
pub struct Found {
    pub index: u64,
    pub derivation: SDerivation,
}

/// The least member (up to `max_index`) containing `B`; the member being
/// a derivation, it then contains the equinecessary closure of `B` too.
pub fn find_finite_approximant(family: &mut dyn Family, bs: &BTreeSet<Bipos>, max_index: u64) -> Result<Found, ApproxError> {
    let mut last = None;
    for n in 0..=max_index {
        let Some(d) = family.member(n)? else { break };
        let closure = equinecessary_closure(&d, bs);
        if bs.iter().all(|p| d.lookup(p).is_some()) && closure.iter().all(|p| d.lookup(p).is_some()) {
            return Ok(Found { index: n, derivation: d });
        }
        last = Some(d);
    }
    let witness = match last {
        Some(d) => bs.iter().find(|p| d.lookup(p).is_none()).cloned(),
        None => bs.iter().next().cloned(),
    };
    Err(ApproxError::NotContained(witness.unwrap_or_else(|| Bipos::right(Pos::eps(), Pos::eps()))))
}

/// Infinitary subject expansion of each member (typing the limit `t′` of
/// `path`) back to `path.start`: subject substitution by the first term
/// after which the path stays deeper than the member's typed positions,
/// then one uniform expansion per recorded step. `policy` is shared by
/// all members so that the output stays directed.
pub fn expand_infinitary(family: &[SDerivation], path: &Path, policy: &mut TrackPolicy) -> Result<Vec<SDerivation>, ApproxError> {
    let steps = path.sequential().map_err(|e| ApproxError::Deriv(SError::Other(e.to_string())))?;
    let depths: Vec<usize> = steps.iter().map(|(_, b, _)| b.ad()).collect();
    let mut out = Vec::new();
    for (i, d) in family.iter().enumerate() {
        let max_ad = d.nodes().keys().map(Pos::ad).max().unwrap_or(0);
        let n = settle_index(&depths, max_ad);
        if n == steps.len() && !steps.is_empty() && path.end != PathEnd::NormalForm {
            return Err(ApproxError::PathTooShort { member: i });
        }
        let tn = if n == 0 { &path.start } else { &steps[n - 1].2 };
        let mut cur = d.with_term(tn)?;
        for (before, b, _) in steps[..n].iter().rev() {
            cur = expand_s(&cur, b, before, policy)?;
        }
        out.push(cur);
    }
    Ok(out)
}

/// Nodes of applicative depth `≤ ℓ` after reducing `d` along `path` until
/// every later step lies at depth `≥ ℓ + 1`.
#[derive(Debug, Clone)]
pub struct Stabilized {
    pub depth: usize,
    pub steps_used: usize,
    pub nodes: BTreeMap<Pos, SJudg>,
}

pub fn infinitary_reduce_family(d: &SDerivation, path: &Path, depth: usize) -> Result<Stabilized, ApproxError> {
    if !d.term().equal(&path.start) {
        return Err(ApproxError::SubjectMismatch);
    }
    let steps = path.sequential().map_err(|e| ApproxError::Deriv(SError::Other(e.to_string())))?;
    let depths: Vec<usize> = steps.iter().map(|(_, b, _)| b.ad()).collect();
    let n = settle_index(&depths, depth);
    if n == steps.len() && !steps.is_empty() && path.end != PathEnd::NormalForm {
        return Err(ApproxError::NotStable(depth));
    }
    let mut cur = d.clone();
    for (_, b, _) in &steps[..n] {
        cur = reduce_s(&cur, b)?;
    }
    let nodes = cur.nodes().iter().filter(|(a, _)| a.ad() <= depth).map(|(a, j)| (a.clone(), j.clone())).collect();
    Ok(Stabilized { depth, steps_used: n, nodes })
}

/// Appendix-style pitfall: `t Ω` with `t = Δ* Δ*`, `Δ* = λx.λz.y(x x z)`.
/// Finite approximants are obtained by expanding rank truncations of the
/// limit `y^ω`; none of them types anything inside `Ω`, so a derivation
/// typing `Ω` with the same conclusion has the same root bipositions
/// covered but no finite approximant of its `Ω` part.
pub struct RootApproxFixture {
    pub term: crate::term::Term,
    pub path: Path,
    pub members: Vec<SDerivation>,
}

pub fn root_approx_fixture(ranks: u64, fuel: usize) -> Result<RootApproxFixture, ApproxError> {
    use crate::term::parse_term;
    let term = parse_term("(\\x. \\z. y (x x z)) (\\x. \\z. y (x x z)) ((\\w. w w)(\\w. w w))").expect("fixture term");
    let path = crate::reduction::run_path(&term, crate::reduction::Strategy::Hh, fuel)
        .map_err(|e| ApproxError::Deriv(SError::Other(e.to_string())))?;
    let limit = parse_term("fix Y. y Y").expect("fixture limit");
    let generator = crate::nf::unforgetful_nf_typing(&limit)?;
    let mut nf_policy = TrackPolicy::graded();
    let truncs = (1..=ranks)
        .map(|n| rank_truncate(&generator, n, &mut nf_policy).map(|e| e.into_derivation()))
        .collect::<Result<Vec<_>, _>>()?;
    let members = expand_infinitary(&truncs, &path, &mut TrackPolicy::memo())?;
    Ok(RootApproxFixture { term, path, members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::reference_policy;
    use crate::pos::pos;
    use crate::r0::{build_pi_prime_n, show_ctx, RType};
    use crate::reduction::{run_path, Strategy};
    use crate::sderiv::{collapse_s_to_multiset, is_quantitative, lift_family, tests::p_ex};
    use crate::term::parse_term;

    fn pi_lifts(n: usize) -> Vec<SDerivation> {
        let t = parse_term("fix X. f X").unwrap();
        let ds: Vec<_> = (1..=n).map(build_pi_prime_n).collect();
        lift_family(&ds, &t, &mut TrackPolicy::memo()).unwrap()
    }

    #[test]
    fn order_on_lifts() {
        let ls = pi_lifts(4);
        assert!(leq_approx(&ls[0], &ls[0]).unwrap());
        assert!(leq_approx(&ls[2], &ls[3]).unwrap());
        assert!(!leq_approx(&ls[3], &ls[2]).unwrap());
        assert_eq!(join(&ls).unwrap(), ls[3]);
        assert_eq!(meet(&ls[2..4]).unwrap(), ls[2]);
        assert_eq!(join(&ls[1..2]).unwrap(), ls[1]);
        let other = p_ex();
        assert_eq!(leq_approx(&ls[0], &other).unwrap_err(), ApproxError::SubjectMismatch);
    }

    #[test]
    fn least_approximants_of_p_ex() {
        let d = p_ex();
        // Dropping the argument on track 5 cuts the matching entry of the
        // function type.
        let keep: BTreeSet<Bipos> = [Bipos::right(pos("02"), Pos::eps()), Bipos::right(pos("03"), Pos::eps())].into();
        let a = least_approximant(&d, &keep).unwrap();
        assert!(leq_approx(&a, &d).unwrap());
        assert!(a.get(&pos("08")).is_none());
        assert_eq!(a.get(&pos("01")).unwrap().ty.to_string(), "(2:o, 3:o') -> o'");
        assert_eq!(least_approximant(&d, &d.bisupport()).unwrap(), d);
        // The root alone forces the whole spine down to the head axiom.
        let least = least_approximant(&d, &BTreeSet::new()).unwrap();
        assert_eq!(least.support(), [Pos::eps(), pos("0"), pos("01")].into());
        assert_eq!(least.root().ty.to_string(), "(4:() -> o') -> o'");
    }

    #[test]
    fn not_directed() {
        let t = parse_term("x").unwrap();
        let one = |k: u64, ty: &str| {
            SDerivation::from_axioms(&t, &[Pos::eps()].into(), &[(Pos::eps(), (k, crate::stype::parse_stype(ty).unwrap()))].into()).unwrap()
        };
        assert_eq!(join(&[one(2, "o"), one(3, "o")]).unwrap_err(), ApproxError::NotDirected { left: 0, right: 1 });
        assert!(join(&[one(2, "o"), one(2, "o'")]).is_err());
    }

    #[test]
    fn nf_family_search() {
        let t = parse_term("fix X. f X").unwrap();
        let g = crate::nf::unforgetful_nf_typing(&t).unwrap();
        let mut fam = NfFamily { generator: g, policy: TrackPolicy::graded() };
        let root = BTreeSet::from([Bipos::right(Pos::eps(), Pos::eps())]);
        assert_eq!(find_finite_approximant(&mut fam, &root, 6).unwrap().index, 0);
        assert_eq!(find_finite_approximant(&mut fam, &BTreeSet::new(), 6).unwrap().index, 0);
        let deep = BTreeSet::from([Bipos::right(pos("2221"), Pos::eps())]);
        assert_eq!(find_finite_approximant(&mut fam, &deep, 6).unwrap().index, 3);
        let far = BTreeSet::from([Bipos::right(pos("2222222221"), Pos::eps())]);
        assert!(matches!(find_finite_approximant(&mut fam, &far, 4), Err(ApproxError::NotContained(_))));
    }

    #[test]
    fn curry_expansion() {
        let cu = parse_term("(\\x. f (x x))(\\x. f (x x))").unwrap();
        let path = run_path(&cu, Strategy::Hh, 12).unwrap();
        let lifts = pi_lifts(4);
        let mut policy = TrackPolicy::memo();
        let pis = expand_infinitary(&lifts, &path, &mut policy).unwrap();
        for (i, p) in pis.iter().enumerate() {
            assert!(check_s(p).is_ok());
            assert!(is_quantitative(p));
            assert_eq!(p.conclusion(), lifts[i].conclusion());
            let r0 = collapse_s_to_multiset(p).unwrap();
            assert_eq!(show_ctx(&r0.ctx), show_ctx(&build_pi_prime_n(i + 1).ctx));
        }
        for w in pis.windows(2) {
            assert!(leq_approx(&w[0], &w[1]).unwrap());
        }
        // Reducing Π_3 along the path recovers Π′_3 at shallow depth.
        let st = infinitary_reduce_family(&pis[2], &path, 1).unwrap();
        for (a, j) in &st.nodes {
            assert_eq!(lifts[2].get(a), Some(j), "{a}");
        }
        assert_eq!(infinitary_reduce_family(&pis[2], &path, 40).unwrap_err(), ApproxError::NotStable(40));
        let short = run_path(&cu, Strategy::Hh, 1).unwrap();
        assert!(matches!(expand_infinitary(&lifts[2..3], &short, &mut policy), Err(ApproxError::PathTooShort { member: 0 })));
    }

    #[test]
    fn expansion_of_a_normal_form_is_identity() {
        let t = parse_term("\\x. x").unwrap();
        let path = run_path(&t, Strategy::Hh, 5).unwrap();
        let d = crate::nf::rank_truncate(&crate::nf::unforgetful_nf_typing(&t).unwrap(), 2, &mut TrackPolicy::memo())
            .unwrap()
            .into_derivation();
        let out = expand_infinitary(std::slice::from_ref(&d), &path, &mut reference_policy(&d)).unwrap();
        assert_eq!(out, vec![d.clone()]);
        let st = infinitary_reduce_family(&d, &path, 0).unwrap();
        assert_eq!(&st.nodes, d.nodes());
    }

    #[test]
    fn root_approximability_pitfall() {
        let fx = root_approx_fixture(3, 12).unwrap();
        for m in &fx.members {
            assert!(check_s(m).is_ok());
            assert!(m.nodes().keys().all(|a| !pos("2").is_prefix_of(&a.collapse())));
            let r0 = collapse_s_to_multiset(m).unwrap();
            assert_eq!(r0.ty, RType::o());
        }
        for w in fx.members.windows(2) {
            assert!(leq_approx(&w[0], &w[1]).unwrap());
        }
    }
}
