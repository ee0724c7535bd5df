//! Subject reduction, expansion and substitution for R0, and the
//! constructions built from them.

use super::{R0Derivation, R0Error, R0Rule, RType};
use crate::pos::Pos;
use crate::reduction::{head_redex, run_path, Path, PathEnd, Strategy};
use crate::term::{parse_term, Label, Term, Var};

/// Size bookkeeping for one contracted typed redex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contraction {
    /// Size of the derivation of the abstraction body.
    pub body_size: usize,
    pub arg_sizes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Reduced {
    pub deriv: R0Derivation,
    pub term: Term,
    /// One entry per judgment typing the redex; empty if it is untyped.
    pub contractions: Vec<Contraction>,
}

/// Number of abstractions crossed by `g`.
fn binders(g: &Pos) -> u32 {
    g.letters().iter().filter(|&&k| k == 0).count() as u32
}

/// Reduces the subject at `b` and transports the derivation. With `perm`,
/// the `i`-th axiom typing the redex variable (in pre-order) receives the
/// argument derivation `perm[i]`; otherwise each axiom takes the first unused
/// argument derivation of its type.
pub fn subject_reduce_r0(d: &R0Derivation, t: &Term, b: &Pos, perm: Option<&[usize]>) -> Result<Reduced, R0Error> {
    let t2 = t.reduce_at(b).map_err(|_| R0Error::InvalidStep(b.clone()))?;
    let mut contractions = Vec::new();
    let shape = reduce_node(d, b, perm, &mut contractions)?;
    let deriv = shape.rebuild(&t2)?;
    Ok(Reduced { deriv, term: t2, contractions })
}

fn reduce_node(
    n: &R0Derivation,
    b: &Pos,
    perm: Option<&[usize]>,
    stats: &mut Vec<Contraction>,
) -> Result<R0Derivation, R0Error> {
    if &n.subject == b {
        return contract(n, b, perm, stats);
    }
    if !n.subject.is_prefix_of(b) {
        return Ok(n.clone());
    }
    let rule = match &n.rule {
        R0Rule::Ax => R0Rule::Ax,
        R0Rule::Abs(body) => R0Rule::Abs(Box::new(reduce_node(body, b, perm, stats)?)),
        R0Rule::App(f, args) => R0Rule::App(
            Box::new(reduce_node(f, b, perm, stats)?),
            args.iter().map(|a| reduce_node(a, b, perm, stats)).collect::<Result<_, _>>()?,
        ),
    };
    Ok(R0Derivation { rule, ..n.clone() })
}

fn contract(
    n: &R0Derivation,
    b: &Pos,
    perm: Option<&[usize]>,
    stats: &mut Vec<Contraction>,
) -> Result<R0Derivation, R0Error> {
    let invalid = || R0Error::InvalidStep(b.clone());
    let R0Rule::App(fun, args) = &n.rule else { return Err(invalid()) };
    let R0Rule::Abs(body) = &fun.rule else { return Err(invalid()) };
    stats.push(Contraction { body_size: body.size(), arg_sizes: args.iter().map(R0Derivation::size).collect() });
    let body_root = b.concat(&Pos::new(vec![1, 0]));
    let mut used = vec![false; args.len()];
    let mut next = 0usize;
    let out = substitute_axioms(body, &body_root, b, args, perm, &mut used, &mut next)?;
    if used.iter().any(|u| !u) {
        return Err(R0Error::Other(format!("argument derivations at {b} left unmatched")));
    }
    Ok(out)
}

fn substitute_axioms(
    n: &R0Derivation,
    body_root: &Pos,
    b: &Pos,
    args: &[R0Derivation],
    perm: Option<&[usize]>,
    used: &mut [bool],
    next: &mut usize,
) -> Result<R0Derivation, R0Error> {
    let g = body_root.strip_prefix_of(&n.subject).expect("inside the body");
    let new_subject = b.concat(&g);
    if matches!(n.rule, R0Rule::Ax) && n.ctx.get(&Var::Bound(binders(&g))).len() == 1 {
        let i = match perm {
            Some(p) => {
                let i = *p.get(*next).ok_or_else(|| R0Error::Other("permutation too short".into()))?;
                if i >= args.len() || used[i] || args[i].ty != n.ty {
                    return Err(R0Error::Other(format!("permutation entry {i} does not fit axiom at {}", n.subject)));
                }
                i
            }
            None => (0..args.len())
                .find(|&i| !used[i] && args[i].ty == n.ty)
                .ok_or_else(|| R0Error::Other(format!("no argument derivation left for axiom at {}", n.subject)))?,
        };
        *next += 1;
        used[i] = true;
        let arg_root = b.child(2);
        return Ok(args[i].map_subjects(&|p| {
            new_subject.concat(&arg_root.strip_prefix_of(p).expect("inside the argument"))
        }));
    }
    let rule = match &n.rule {
        R0Rule::Ax => R0Rule::Ax,
        R0Rule::Abs(x) => R0Rule::Abs(Box::new(substitute_axioms(x, body_root, b, args, perm, used, next)?)),
        R0Rule::App(f, xs) => R0Rule::App(
            Box::new(substitute_axioms(f, body_root, b, args, perm, used, next)?),
            xs.iter()
                .map(|x| substitute_axioms(x, body_root, b, args, perm, used, next))
                .collect::<Result<_, _>>()?,
        ),
    };
    Ok(R0Derivation { subject: new_subject, ctx: n.ctx.clone(), ty: n.ty.clone(), rule })
}

/// Given `d` typing `t2` and `t →_b t2`, builds a derivation of the same
/// judgment for `t`.
pub fn subject_expand_r0(d: &R0Derivation, t2: &Term, b: &Pos, t: &Term) -> Result<R0Derivation, R0Error> {
    match t.reduce_at(b) {
        Ok(r) if r.equal(t2) => {}
        _ => return Err(R0Error::InvalidStep(b.clone())),
    }
    let body_root = b.concat(&Pos::new(vec![1, 0]));
    let shape = expand_node(d, b, &body_root, t)?;
    shape.rebuild(t)
}

fn expand_node(n: &R0Derivation, b: &Pos, body_root: &Pos, t: &Term) -> Result<R0Derivation, R0Error> {
    if &n.subject == b {
        let mut args = Vec::new();
        let body = split_arguments(n, b, body_root, t, &mut args)?.rebuild(t)?;
        let args = args.iter().map(|a| a.rebuild(t)).collect::<Result<_, _>>()?;
        let fun = R0Derivation::abs(b.child(1), body);
        return R0Derivation::app(b.clone(), fun, args);
    }
    if !n.subject.is_prefix_of(b) {
        return Ok(n.clone());
    }
    let rule = match &n.rule {
        R0Rule::Ax => R0Rule::Ax,
        R0Rule::Abs(x) => R0Rule::Abs(Box::new(expand_node(x, b, body_root, t)?)),
        R0Rule::App(f, xs) => R0Rule::App(
            Box::new(expand_node(f, b, body_root, t)?),
            xs.iter().map(|x| expand_node(x, b, body_root, t)).collect::<Result<_, _>>()?,
        ),
    };
    Ok(R0Derivation { rule, ..n.clone() })
}

/// Cuts the judgments typing occurrences of the argument out of a
/// derivation of the contractum, leaving axioms for the redex variable.
fn split_arguments(
    n: &R0Derivation,
    b: &Pos,
    body_root: &Pos,
    t: &Term,
    args: &mut Vec<R0Derivation>,
) -> Result<R0Derivation, R0Error> {
    let g = b.strip_prefix_of(&n.subject).expect("inside the contractum");
    let in_body = body_root.concat(&g);
    if t.label_at(&in_body) == Some(Label::Var(Var::Bound(binders(&g)))) {
        let at = n.subject.clone();
        let arg_root = b.child(2);
        args.push(n.map_subjects(&|p| arg_root.concat(&at.strip_prefix_of(p).expect("inside the occurrence"))));
        return R0Derivation::ax(t, in_body, n.ty.clone());
    }
    let rule = match &n.rule {
        R0Rule::Ax => R0Rule::Ax,
        R0Rule::Abs(x) => R0Rule::Abs(Box::new(split_arguments(x, b, body_root, t, args)?)),
        R0Rule::App(f, xs) => R0Rule::App(
            Box::new(split_arguments(f, b, body_root, t, args)?),
            xs.iter().map(|x| split_arguments(x, b, body_root, t, args)).collect::<Result<_, _>>()?,
        ),
    };
    Ok(R0Derivation { subject: in_body, ctx: n.ctx.clone(), ty: n.ty.clone(), rule })
}

/// Retargets `d` from `t` to `u`, which must agree with `t` on every typed
/// position.
pub fn subject_substitute(d: &R0Derivation, t: &Term, u: &Term) -> Result<R0Derivation, R0Error> {
    for b in d.typed_positions() {
        let l = t.label_at(&b);
        if l.is_none() || l != u.label_at(&b) {
            return Err(R0Error::SubjectMismatch(b));
        }
    }
    Ok(d.clone())
}

/// Types `λx1…xp. x t1…tq` by giving `x` the type `[] → … → [] → o`.
pub fn type_hnf(t: &Term, o: &RType) -> Result<R0Derivation, R0Error> {
    let hnf = match head_redex(t) {
        Ok(Err(h)) => h,
        _ => return Err(R0Error::NotHnf),
    };
    let mut at = Pos::new(vec![0; hnf.p]);
    for _ in 0..hnf.q {
        at.push(1);
    }
    let mut d = R0Derivation::ax(t, at.clone(), RType::empty_arrows(hnf.q, o.clone()))?;
    for _ in 0..hnf.q {
        at.pop();
        d = R0Derivation::app(at.clone(), d, vec![])?;
    }
    for _ in 0..hnf.p {
        at.pop();
        d = R0Derivation::abs(at.clone(), d);
    }
    Ok(d)
}

/// Head-reduces `t`, types the head normal form and expands the typing
/// back along the path.
pub fn type_by_head_transport(t: &Term, fuel: usize, o: &RType) -> Result<(R0Derivation, Path), R0Error> {
    let path = run_path(t, Strategy::Head, fuel).map_err(|e| R0Error::Other(e.to_string()))?;
    if !matches!(path.end, PathEnd::HeadNormalForm | PathEnd::NormalForm) {
        return Err(R0Error::NotHnf);
    }
    let mut d = type_hnf(path.last_term(), o)?;
    for i in (0..path.steps.len()).rev() {
        let b = &path.steps[i].redexes[0];
        d = subject_expand_r0(&d, path.term_at(i + 1), b, path.term_at(i))?;
    }
    Ok((d, path))
}

/// `Π′_n`: the finite derivation of `f:[[o]→o]_{n−1} + [[]→o] ⊢ f^∞ : o`.
pub fn build_pi_prime_n(n: usize) -> R0Derivation {
    assert!(n >= 1);
    let t = parse_term("fix X. f X").expect("literal");
    let at = |i: usize| Pos::new(vec![2; i]);
    let o = RType::o();
    let leaf_f = R0Derivation::ax(&t, at(n - 1).child(1), RType::arrow(vec![], o.clone())).expect("f");
    let mut d = R0Derivation::app(at(n - 1), leaf_f, vec![]).expect("app");
    for i in (0..n - 1).rev() {
        let f = R0Derivation::ax(&t, at(i).child(1), RType::arrow(vec![o.clone()], o.clone())).expect("f");
        d = R0Derivation::app(at(i), f, vec![d]).expect("app");
    }
    d
}

/// Index `N` of the first recorded step after which every step lies
/// strictly deeper than `max_ad`.
pub(crate) fn settle_index(depths: &[usize], max_ad: usize) -> usize {
    depths.iter().rposition(|&d| d <= max_ad).map_or(0, |i| i + 1)
}

/// Infinitary subject expansion for a finite derivation: `d` types the
/// limit `t2` of `path`; the result types `path.start`.
pub fn infinitary_expand_r0(d: &R0Derivation, t2: &Term, path: &Path) -> Result<R0Derivation, R0Error> {
    let steps = path.sequential().map_err(|e| R0Error::Other(e.to_string()))?;
    let max_ad = d.typed_positions().iter().map(Pos::ad).max().unwrap_or(0);
    let depths: Vec<usize> = steps.iter().map(|(_, b, _)| b.ad()).collect();
    let n = settle_index(&depths, max_ad);
    if n == steps.len() && !steps.is_empty() && path.end != PathEnd::NormalForm {
        return Err(R0Error::PathTooShort);
    }
    let tn = if n == 0 { &path.start } else { &steps[n - 1].2 };
    let mut cur = subject_substitute(d, t2, tn)?;
    for (before, b, after) in steps[..n].iter().rev() {
        cur = subject_expand_r0(&cur, after, b, before)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pos::pos;
    use crate::r0::{check_r0, is_unforgetful_r0, parse_rtype, show_ctx};

    fn p(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn ty(s: &str) -> RType {
        parse_rtype(s).unwrap()
    }

    #[test]
    fn hnf_typings() {
        let t = p("x ((\\x. x x)(\\x. x x))");
        let d = type_hnf(&t, &RType::o()).unwrap();
        assert_eq!(show_ctx(&d.ctx), "x: [[] -> o]");
        assert_eq!(d.ty, RType::o());
        assert!(check_r0(&d, &t).is_ok());
        assert!(!is_unforgetful_r0(&d.ctx, &d.ty));

        let id = p("\\x. x");
        let d = type_hnf(&id, &RType::o()).unwrap();
        assert_eq!(d.ty, ty("[o] -> o"));

        let t = p("\\x1. x1 t1 t2");
        let d = type_hnf(&t, &RType::o()).unwrap();
        assert_eq!(d.ty, ty("[[] -> [] -> o] -> o"));
        assert!(check_r0(&d, &t).is_ok());
        assert_eq!(d.size(), 4);
        assert_eq!(type_hnf(&p("(\\x. x) y"), &RType::o()).unwrap_err(), R0Error::NotHnf);
    }

    #[test]
    fn identity_redex_sizes() {
        let t = p("f ((\\x. x) u)");
        let f = R0Derivation::ax(&t, pos("1"), ty("[o] -> o")).unwrap();
        let xa = R0Derivation::ax(&t, pos("210"), RType::o()).unwrap();
        let lam = R0Derivation::abs(pos("21"), xa);
        let u = R0Derivation::ax(&t, pos("22"), RType::o()).unwrap();
        let redex = R0Derivation::app(pos("2"), lam, vec![u]).unwrap();
        let d = R0Derivation::app(pos(""), f, vec![redex]).unwrap();
        assert!(check_r0(&d, &t).is_ok());
        assert_eq!(d.size(), 6);
        let r = subject_reduce_r0(&d, &t, &pos("2"), None).unwrap();
        assert!(check_r0(&r.deriv, &r.term).is_ok());
        assert_eq!(r.deriv.size(), 3);
        assert_eq!(r.deriv.size(), d.size() - 3);
        let back = subject_expand_r0(&r.deriv, &r.term, &pos("2"), &t).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn untyped_redex() {
        let t = p("x ((\\y. y) z)");
        let d = type_hnf(&t, &RType::o()).unwrap();
        let r = subject_reduce_r0(&d, &t, &pos("2"), None).unwrap();
        assert!(r.contractions.is_empty());
        assert_eq!(r.deriv, d);
        assert!(r.term.equal(&p("x z")));
    }

    #[test]
    fn self_application_expansion() {
        // ⊢ I : A → A with A = [o] → o, expanded to I I.
        let i = p("\\x. x");
        let a = ty("[o] -> o");
        let ax = R0Derivation::ax(&i, pos("0"), a.clone()).unwrap();
        let d = R0Derivation::abs(pos(""), ax);
        assert_eq!(d.ty, RType::arrow(vec![a.clone()], a.clone()));
        let ii = p("(\\x. x)(\\x. x)");
        let e = subject_expand_r0(&d, &i, &pos(""), &ii).unwrap();
        assert!(check_r0(&e, &ii).is_ok());
        assert_eq!(e.ty, d.ty);
        assert_eq!(e.size(), 5);
    }

    #[test]
    fn erasing_expansion() {
        let y = p("y");
        let d = R0Derivation::ax(&y, pos(""), RType::o()).unwrap();
        let t = p("(\\x. y)((\\x. x x)(\\x. x x))");
        let e = subject_expand_r0(&d, &y, &pos(""), &t).unwrap();
        assert!(check_r0(&e, &t).is_ok());
        assert_eq!(e.typed_positions(), [pos(""), pos("1"), pos("10")].into_iter().collect());
        assert_eq!(e.ty, RType::o());
    }

    #[test]
    fn pi_prime_family() {
        let t = p("fix X. f X");
        for n in 1..=6 {
            let d = build_pi_prime_n(n);
            assert_eq!(d.size(), 2 * n);
            assert!(check_r0(&d, &t).is_ok());
            assert!(d.typed_positions().iter().all(|b| b.ad() < d.size()));
        }
        let d = build_pi_prime_n(3);
        assert_eq!(show_ctx(&d.ctx), "f: [[] -> o, [o] -> o, [o] -> o]");
        assert_eq!(d.typed_positions().iter().map(Pos::ad).max(), Some(2));
    }

    #[test]
    fn substitution_into_reducts() {
        let finf = p("fix X. f X");
        let d = build_pi_prime_n(3);
        let mut u = p("(\\x. f (x x))(\\x. f (x x))");
        for k in 0..6 {
            let r = subject_substitute(&d, &finf, &u);
            assert_eq!(r.is_ok(), k >= 3, "k = {k}");
            if let Ok(e) = r {
                assert!(check_r0(&e, &u).is_ok());
            }
            u = Term::app(Term::var("f"), u);
        }
        let xyz = p("x (y z)");
        let d = type_hnf(&xyz, &RType::o()).unwrap();
        let om = p("x ((\\x. x x)(\\x. x x))");
        assert!(check_r0(&subject_substitute(&d, &xyz, &om).unwrap(), &om).is_ok());
    }

    #[test]
    fn infinitary_expansion_along_curry() {
        let cu = p("(\\x. f (x x))(\\x. f (x x))");
        let finf = p("fix X. f X");
        let path = run_path(&cu, Strategy::Hh, 2).unwrap();
        let d = infinitary_expand_r0(&build_pi_prime_n(1), &finf, &path).unwrap();
        assert!(check_r0(&d, &cu).is_ok());
        assert_eq!(show_ctx(&d.ctx), "f: [[] -> o]");
        let path = run_path(&cu, Strategy::Hh, 6).unwrap();
        for n in 1..=4 {
            let d = infinitary_expand_r0(&build_pi_prime_n(n), &finf, &path).unwrap();
            assert!(check_r0(&d, &cu).is_ok());
            assert_eq!(d.judgment(), build_pi_prime_n(n).judgment());
        }
        let short = run_path(&cu, Strategy::Hh, 2).unwrap();
        assert_eq!(infinitary_expand_r0(&build_pi_prime_n(3), &finf, &short).unwrap_err(), R0Error::PathTooShort);
    }
}
