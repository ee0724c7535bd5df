//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_DIVERGENCES` are expected to fail; the reasons
//! are recorded in the README. The run fails when any other criterion
//! fails.

mod common;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rand::Rng;

use common::*;
use infinitary::approx::{expand_infinitary, join, leq_approx, least_approximant, meet};
use infinitary::dynamics::{expand_s, quasi_residual_map, reduce_s, residual_biposition};
use infinitary::fixtures::{curry_f, f_infinity, p_ex, pi_prime_lifts};
use infinitary::nf::{argument_subderivations, rank_truncate, unforgetful_nf_typing};
use infinitary::pos::Pos;
use infinitary::r0::{
    check_r0, exists_derivation_upto, is_unforgetful_r0, parse_rtype, show_ctx, subject_reduce_r0,
    type_by_head_transport, type_hnf, RType,
};
use infinitary::reduction::{adr, bohm_prefix, head_redex, hh_parallel_step, run_path, BohmNode, BottomKind, Strategy};
use infinitary::sderiv::{
    check_s, collapse_s_to_multiset, is_quantitative, lift_r0_to_s, Bipos, SDerivation,
};
use infinitary::stype::{is_unforgetful_s, parse_stype};
use infinitary::term::{parse_term, print_term, Term, Var};
use infinitary::track::TrackPolicy;

/// Criteria whose statement conflicts with the construction it names.
const KNOWN_DIVERGENCES: [u32; 2] = [8, 11];

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn p(s: &str) -> Term {
    parse_term(s).unwrap()
}

fn f_pow(n: usize, t: Term) -> Term {
    (0..n).fold(t, |acc, _| Term::app(Term::var("f"), acc))
}

fn c1_curry_dynamics() -> Check {
    let start = Instant::now();
    let cu = curry_f();
    let mut t = cu.clone();
    for n in 1..=10 {
        t = hh_parallel_step(&t).map_err(|e| e.to_string())?.0;
        ensure(t.equal(&f_pow(n, cu.clone())), || format!("step {n}: {}", print_term(&t)))?;
        ensure(adr(&t) == Some(n), || format!("step {n}: adr {:?}", adr(&t)))?;
    }
    let el = start.elapsed();
    ensure(el.as_secs_f64() < 1.0, || format!("took {el:?}"))?;
    Ok(format!("f^n(cu_f) with adr n for n ≤ 10 in {el:.2?}"))
}

fn c2_bohm() -> Check {
    let mut want = BohmNode::Unexplored;
    for _ in 0..8 {
        want = BohmNode::App { fun: Box::new(BohmNode::Var { var: Var::Free("f".into()) }), arg: Box::new(want) };
    }
    let got = bohm_prefix(&curry_f(), 8, 100).map_err(|e| e.to_string())?;
    ensure(got == want, || format!("cu_f: {got}"))?;
    let om = bohm_prefix(&p("(\\x. x x)(\\x. x x)"), 3, 100).map_err(|e| e.to_string())?;
    ensure(om == BohmNode::Bottom { why: BottomKind::Loop }, || format!("Ω: {om:?}"))?;
    Ok(format!("{got}; Ω ↦ ⊥ (loop)"))
}

fn c3_weighted_reduction() -> Check {
    let mut r = rng(3);
    let (mut derivs, mut typed_steps) = (0, 0);
    while derivs < 120 {
        let (t, d) = r0_instance(&mut r, 3);
        derivs += 1;
        let Ok(Ok(b)) = head_redex(&t) else { continue };
        let red = subject_reduce_r0(&d, &t, &b, None).map_err(|e| format!("{}: {e}", print_term(&t)))?;
        check_r0(&red.deriv, &red.term).map_err(|e| format!("{e:?}"))?;
        if red.contractions.is_empty() {
            ensure(red.deriv.size() <= d.size(), || format!("untyped step grew {}", print_term(&t)))?;
        } else {
            typed_steps += 1;
            ensure(red.deriv.size() < d.size(), || format!("typed head step did not shrink {}", print_term(&t)))?;
        }
    }
    ensure(typed_steps >= 50, || format!("only {typed_steps} typed head steps"))?;
    // Substitution instances: a redex at the root, typed once.
    let mut instances = 0;
    while instances < 40 {
        let (t, d) = r0_instance(&mut r, 2);
        if !t.is_redex_at(&Pos::eps()) {
            continue;
        }
        let red = subject_reduce_r0(&d, &t, &Pos::eps(), None).map_err(|e| e.to_string())?;
        let [c] = red.contractions.as_slice() else { continue };
        let expected = c.body_size + c.arg_sizes.iter().sum::<usize>() - c.arg_sizes.len();
        ensure(red.deriv.size() == expected, || format!("{}: {} ≠ {expected}", print_term(&t), red.deriv.size()))?;
        instances += 1;
    }
    Ok(format!("{derivs} derivations, {typed_steps} typed head steps shrink; size identity on {instances} instances"))
}

fn c4_head_normalisation() -> Check {
    let cu = curry_f();
    let path = run_path(&cu, Strategy::Hh, 4).map_err(|e| e.to_string())?;
    let mut corpus: Vec<Term> =
        ["\\x. x", "\\x. x y", "x ((\\x. x x)(\\x. x x))", "(\\x. y)((\\x. x x)(\\x. x x))"].into_iter().map(p).collect();
    corpus.extend((0..=path.steps.len()).map(|i| path.term_at(i).clone()));
    for t in &corpus {
        let (d, _) = type_by_head_transport(t, 200, &RType::o()).map_err(|e| format!("{}: {e}", print_term(t)))?;
        check_r0(&d, t).map_err(|e| format!("{}: {e:?}", print_term(t)))?;
    }
    let om = p("(\\x. x x)(\\x. x x)");
    ensure(type_by_head_transport(&om, 200, &RType::o()).is_err(), || "Ω was typed".into())?;
    let search = exists_derivation_upto(&om, 6);
    ensure(search.found.is_none(), || "a derivation of Ω with ≤ 6 judgments exists".into())?;
    Ok(format!("{} terms typed; no derivation of Ω within 6 judgments ({} shapes)", corpus.len(), search.shapes_examined))
}

fn hash_of(d: &SDerivation) -> u64 {
    let mut h = DefaultHasher::new();
    d.nodes().hash(&mut h);
    print_term(d.term()).hash(&mut h);
    h.finish()
}

fn id_app() -> SDerivation {
    let t = p("(\\x. x) u");
    let support: BTreeSet<Pos> = ["", "1", "10", "2"].into_iter().map(|s| s.parse().unwrap()).collect();
    let axioms = [("10", 2, "o"), ("2", 3, "o")]
        .into_iter()
        .map(|(a, k, ty)| (a.parse().unwrap(), (k, parse_stype(ty).unwrap())))
        .collect();
    SDerivation::from_axioms(&t, &support, &axioms).unwrap()
}

fn c5_residuals() -> Check {
    let mut r = rng(5);
    let mut checked = 0;
    while checked < 60 {
        let d = s_instance(&mut r, 3);
        let Some(b) = typed_redexes(&d).first().cloned() else { continue };
        let first = reduce_s(&d, &b).map_err(|e| e.to_string())?;
        let h = hash_of(&first);
        for _ in 0..9 {
            ensure(hash_of(&reduce_s(&d, &b).map_err(|e| e.to_string())?) == h, || "reduce_s is not deterministic".into())?;
        }
        let mut image = BTreeSet::new();
        for q in d.right_bisupport() {
            if let Ok(res) = residual_biposition(&d, &b, &q).map_err(|e| e.to_string())? {
                ensure(image.insert(res.clone()), || format!("{}: Res_{b} not injective at {res}", print_term(d.term())))?;
            }
        }
        ensure(image == first.right_bisupport(), || format!("{}: Res_{b} not onto", print_term(d.term())))?;
        checked += 1;
    }
    let d = id_app();
    let m = quasi_residual_map(&d, &Pos::eps()).map_err(|e| e.to_string())?;
    let root = Bipos::right(Pos::eps(), Pos::eps());
    let pre = m.values().filter(|q| **q == root).count();
    ensure(pre == 6, || format!("{pre} antecedents of the reduct root"))?;
    Ok(format!("deterministic and bijective on {checked} derivations; (λx.x)s root has {pre} QRes antecedents"))
}

fn c6_monotonicity() -> Check {
    let mut r = rng(6);
    let mut pairs = 0;
    while pairs < 60 {
        let d = s_instance(&mut r, 3);
        let Some(b) = typed_redexes(&d).first().cloned() else { continue };
        let bs = some_bipositions(&mut r, &d, 3);
        let fd = least_approximant(&d, &bs).map_err(|e| e.to_string())?;
        ensure(leq_approx(&fd, &d).unwrap_or(false), || "least approximant is not below".into())?;
        let (rf, rd) = (reduce_s(&fd, &b).map_err(|e| e.to_string())?, reduce_s(&d, &b).map_err(|e| e.to_string())?);
        ensure(leq_approx(&rf, &rd).unwrap_or(false), || format!("{}: reduction at {b} broke ≤", print_term(d.term())))?;
        let ef = expand_s(&rf, &b, d.term(), &mut TrackPolicy::graded()).map_err(|e| e.to_string())?;
        let ed = expand_s(&rd, &b, d.term(), &mut TrackPolicy::graded()).map_err(|e| e.to_string())?;
        ensure(leq_approx(&ef, &ed).unwrap_or(false), || format!("{}: expansion at {b} broke ≤", print_term(d.term())))?;
        pairs += 1;
    }
    Ok(format!("{pairs} pairs, no violation under reduction or expansion"))
}

fn c7_lattice() -> Check {
    let mut r = rng(7);
    let mut triples = 0;
    let j = |xs: &[&SDerivation]| join(&xs.iter().map(|d| (*d).clone()).collect::<Vec<_>>()).map_err(|e| e.to_string());
    let m = |xs: &[&SDerivation]| meet(&xs.iter().map(|d| (*d).clone()).collect::<Vec<_>>()).map_err(|e| e.to_string());
    while triples < 220 {
        let d = s_instance(&mut r, 2);
        for _ in 0..5 {
            let [a, b, c] = [0, 1, 2].map(|_| least_approximant(&d, &some_bipositions(&mut r, &d, 3)).unwrap());
            ensure(j(&[&a, &a])? == a && m(&[&a, &a])? == a, || "idempotence".into())?;
            ensure(j(&[&a, &b])? == j(&[&b, &a])? && m(&[&a, &b])? == m(&[&b, &a])?, || "commutativity".into())?;
            ensure(j(&[&j(&[&a, &b])?, &c])? == j(&[&a, &j(&[&b, &c])?])?, || "join associativity".into())?;
            ensure(m(&[&m(&[&a, &b])?, &c])? == m(&[&a, &m(&[&b, &c])?])?, || "meet associativity".into())?;
            ensure(j(&[&a, &m(&[&a, &b])?])? == a && m(&[&a, &j(&[&a, &b])?])? == a, || "absorption".into())?;
            triples += 1;
        }
    }
    let lifts = pi_prime_lifts(4);
    ensure(join(&lifts).map_err(|e| e.to_string())? == lifts[3], || "join of the Π′ chain".into())?;
    Ok(format!("{triples} triples; ⋁ Π′_1..4 = Π′_4"))
}

fn gamma(n: usize) -> String {
    let mut parts = vec!["[] -> o".to_string()];
    parts.extend(std::iter::repeat_n("[o] -> o".to_string(), n - 1));
    format!("f: [{}]", parts.join(", "))
}

fn c8_truncations() -> Check {
    let g = unforgetful_nf_typing(&f_infinity()).map_err(|e| e.to_string())?;
    let mut policy = TrackPolicy::graded();
    let ps: Vec<SDerivation> = (1..=7).map(|n| rank_truncate(&g, n, &mut policy).unwrap().into_derivation()).collect();
    for (i, d) in ps.iter().enumerate() {
        ensure(d.is_finite() && check_s(d).is_ok() && is_quantitative(d), || format!("P_{} is not a finite quantitative derivation", i + 1))?;
    }
    for (i, w) in ps.windows(2).enumerate() {
        ensure(leq_approx(&w[0], &w[1]).unwrap_or(false), || format!("P_{} ≰ P_{}", i + 1, i + 2))?;
    }
    let mut r = rng(8);
    let big = rank_truncate(&g, 7, &mut policy).map_err(|e| e.to_string())?;
    let all: Vec<Bipos> = big.derivation().bisupport().into_iter().collect();
    for _ in 0..20 {
        let bs: Vec<&Bipos> = (0..r.gen_range(1..4)).map(|_| &all[r.gen_range(0..all.len())]).collect();
        let n = bs.iter().map(|b| big.called_rank(b).unwrap()).max().unwrap();
        let pn = rank_truncate(&g, n, &mut policy).map_err(|e| e.to_string())?;
        ensure(bs.iter().all(|b| pn.derivation().lookup(b).is_some()), || format!("B ⊄ bisupp(P_{n})"))?;
    }
    // Stated conclusion: Γ_n = f:[[o]→o]_{n−1} + [[]→o].
    let mut wrong = Vec::new();
    for (i, d) in ps.iter().take(6).enumerate() {
        let got = show_ctx(&d.root().ctx.collapse().unwrap());
        if got != gamma(i + 1) {
            wrong.push(format!("P_{} ⊢ {got}", i + 1));
        }
    }
    ensure(wrong.is_empty(), || format!("finite, valid, quantitative, directed, 20 samples ok; but collapse ≠ Γ_n: {}", wrong.join("; ")))?;
    Ok("P_n finite, valid, quantitative, directed; collapses to Γ_n; 20 samples ok".into())
}

fn rho(n: usize) -> RType {
    RType::arrow((1..n).map(rho).collect(), RType::o())
}

fn c9_infinitary_expansion() -> Check {
    let start = Instant::now();
    let cu = curry_f();
    let path = run_path(&cu, Strategy::Hh, 14).map_err(|e| e.to_string())?;
    let lifts = pi_prime_lifts(5);
    let pis = expand_infinitary(&lifts, &path, &mut TrackPolicy::memo()).map_err(|e| e.to_string())?;
    for (i, d) in pis.iter().enumerate() {
        let n = i + 1;
        ensure(d.term().equal(&cu) && check_s(d).is_ok(), || format!("Π_{n} is not a derivation of cu_f"))?;
        let r0 = collapse_s_to_multiset(d).map_err(|e| e.to_string())?;
        ensure(show_ctx(&r0.ctx) == gamma(n) && r0.ty == RType::o(), || format!("Π_{n} concludes {}", show_ctx(&r0.ctx)))?;
        let fun = d.get(&"1".parse().unwrap()).ok_or("no judgment at 1")?;
        ensure(fun.ty.collapse() == Some(rho(n)), || format!("Π_{n}: T(1) = {}", fun.ty))?;
        let mut args: Vec<RType> =
            d.children(&Pos::eps()).into_iter().filter(|&k| k >= 2).map(|k| d.get(&Pos::new(vec![k])).unwrap().ty.collapse().unwrap()).collect();
        args.sort();
        let mut want: Vec<RType> = (1..n).map(rho).collect();
        want.sort();
        ensure(args == want, || format!("Π_{n}: arguments {args:?}"))?;
    }
    for w in pis.windows(2) {
        ensure(leq_approx(&w[0], &w[1]).unwrap_or(false), || "family is not directed".into())?;
    }
    let el = start.elapsed();
    ensure(el.as_secs_f64() < 5.0, || format!("took {el:?}"))?;
    Ok(format!("Π_1..5 directed, conclusions Γ_n, Δ_f typed by ρ_n, in {el:.2?}"))
}

fn c10_collapse() -> Check {
    let mut r = rng(10);
    for i in 0..120 {
        let (t, d) = r0_instance(&mut r, 2);
        let s = lift_r0_to_s(&d, &t, &mut TrackPolicy::memo()).map_err(|e| e.to_string())?;
        ensure(collapse_s_to_multiset(&s).map_err(|e| e.to_string())? == d, || format!("#{i}: {}", print_term(&t)))?;
    }
    let pex = collapse_s_to_multiset(&p_ex()).map_err(|e| e.to_string())?;
    check_r0(&pex, p_ex().term()).map_err(|e| format!("{e:?}"))?;
    let sigma = pex.nodes().into_iter().find(|n| n.subject == "01".parse().unwrap()).map(|n| n.ty.clone());
    ensure(sigma == Some(parse_rtype("[o, o', o] -> o'").unwrap()), || format!("σ_ex = {sigma:?}"))?;
    Ok("120 round trips; P_ex collapses with σ_ex = [o, o', o] -> o'".into())
}

fn c11_unforgetfulness() -> Check {
    let xo = p("x ((\\x. x x)(\\x. x x))");
    let d = type_hnf(&xo, &RType::o()).map_err(|e| e.to_string())?;
    ensure(show_ctx(&d.ctx) == "x: [[] -> o]", || show_ctx(&d.ctx))?;
    ensure(!is_unforgetful_r0(&d.ctx, &d.ty), || "x:[[]→o] ⊢ xΩ:o judged unforgetful".into())?;
    let hnfs = [
        "x y", "\\x. x (\\y. y) z", "f (g a) (h b c)", "x (\\y. y y)", "\\x. \\y. x y y", "f (\\x. x) (\\x. f x)",
        "\\x. x (x y)", "y (\\z. z z z)", "\\f. f (f (f a))", "g (\\x. \\y. y x) b",
    ];
    for src in hnfs {
        let t = p(src);
        let g = unforgetful_nf_typing(&t).map_err(|e| e.to_string())?;
        let d = rank_truncate(&g, 8, &mut TrackPolicy::memo()).map_err(|e| e.to_string())?.into_derivation();
        let (c, ty) = d.conclusion();
        ensure(is_unforgetful_s(c, ty), || format!("{src}: typing is forgetful"))?;
        for sub in argument_subderivations(&d) {
            let (c, ty) = sub.conclusion();
            ensure(check_s(&sub).is_ok() && is_unforgetful_s(c, ty), || format!("{src}: forgetful argument"))?;
        }
    }
    let g = unforgetful_nf_typing(&f_infinity()).map_err(|e| e.to_string())?;
    let members: Vec<_> = (1..=7).map(|n| rank_truncate(&g, n, &mut TrackPolicy::graded()).unwrap().into_derivation()).collect();
    // Every empty domain of member n is filled in member n+1, so the join
    // of the family is unforgetful.
    for w in members.windows(2) {
        for (a, j) in w[0].nodes() {
            if j.ty.to_string() == "() -> o" {
                let next = w[1].get(a).ok_or_else(|| format!("{a} dropped by the next member"))?;
                ensure(next.ty.to_string() != "() -> o", || format!("{a} stays forgetful in the next member"))?;
            }
        }
    }
    let forgetful: Vec<u64> = (1..=6)
        .filter(|&n| {
            let (c, ty) = members[n as usize - 1].conclusion();
            !is_unforgetful_s(c, ty)
        })
        .collect();
    ensure(
        forgetful.is_empty(),
        || format!("xΩ forgetful, 10 hereditary HNF checks and the join ok; but f^∞ members P_{forgetful:?} are forgetful (the last f gets () -> o)"),
    )?;
    Ok("f^∞ members unforgetful; xΩ forgetful; 10 hereditary HNF checks".into())
}

type Criterion = (u32, &'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "cu_f dynamics", c1_curry_dynamics),
        (2, "Böhm trees", c2_bohm),
        (3, "weighted subject reduction", c3_weighted_reduction),
        (4, "head normalisation corpus", c4_head_normalisation),
        (5, "S determinism and residuals", c5_residuals),
        (6, "monotonicity", c6_monotonicity),
        (7, "lattice laws", c7_lattice),
        (8, "normal-form truncations", c8_truncations),
        (9, "infinitary expansion", c9_infinitary_expansion),
        (10, "collapse round trips", c10_collapse),
        (11, "unforgetfulness", c11_unforgetfulness),
    ];
    let mut unexpected = Vec::new();
    for (n, name, f) in criteria {
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let known = KNOWN_DIVERGENCES.contains(&n);
        match res {
            Ok(msg) => println!("PASS {n:>2} {name}: {msg}"),
            Err(msg) if known => println!("FAIL {n:>2} {name} (known divergence): {msg}"),
            Err(msg) => {
                println!("FAIL {n:>2} {name}: {msg}");
                unexpected.push(n);
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
