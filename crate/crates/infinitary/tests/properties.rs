//! Property tests over seeded random terms and derivations.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;
use infinitary::approx::{join, leq_approx, least_approximant, meet};
use infinitary::dynamics::{expand_s, quasi_residual_map, reduce_s, residual_position};
use infinitary::nf::{natural_extension, rank_truncate, unforgetful_nf_typing, SupportCandidate};
use infinitary::pos::Pos;
use infinitary::r0::{check_r0, subject_reduce_r0, subject_substitute};
use infinitary::reduction::{bohm_prefix, BohmNode, BottomKind};
use infinitary::sderiv::{check_s, collapse_s_to_multiset, is_quantitative, lift_r0_to_s};
use infinitary::stype::{SType, Seq};
use infinitary::term::{parse_term, print_term, Label, Term};
use infinitary::track::TrackPolicy;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn pos_strategy() -> impl Strategy<Value = Pos> {
    prop::collection::vec(0u64..5, 0..7).prop_map(Pos::new)
}

/// `fix X. t X`: a regular term whose only infinite branch runs through
/// argument edges.
fn regular(t: &Term) -> Term {
    parse_term(&format!("fix X. ({}) X", print_term(t))).unwrap()
}

fn random_term(seed: u64) -> Term {
    let mut r = rng(seed);
    let (t, _) = r0_instance(&mut r, 2);
    if r.gen_bool(0.5) {
        regular(&t)
    } else {
        t
    }
}

fn random_type(r: &mut impl Rng, depth: u32) -> SType {
    if depth == 0 || r.gen_bool(0.4) {
        return SType::atom(["o", "o'"].choose(r).unwrap());
    }
    let n = r.gen_range(0..3);
    let pairs: Vec<(u64, SType)> = (0..n).map(|_| (r.gen_range(2..7), random_type(r, depth - 1))).collect();
    SType::arrow(Seq::from_pairs(pairs), random_type(r, depth - 1))
}

fn random_seq(r: &mut impl Rng) -> Seq {
    let n = r.gen_range(0..3);
    Seq::from_pairs((0..n).map(|_| (r.gen_range(2..8), random_type(r, 1))).collect::<Vec<_>>())
}

/// All normal forms reachable by some maximal reduction sequence.
fn normal_forms(t: &Term, seen: &mut HashSet<String>, out: &mut BTreeSet<String>) {
    if !seen.insert(t.canonical_key()) || seen.len() > 4000 {
        return;
    }
    let rs = redexes(t);
    if rs.is_empty() {
        out.insert(t.canonical_key());
    }
    for b in rs {
        normal_forms(&t.reduce_at(&b).unwrap(), seen, out);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn support_grows_with_depth(seed in any::<u64>(), d in 0usize..6) {
        let t = random_term(seed);
        let a = t.support_to_depth(d).unwrap();
        let b = t.support_to_depth(d + 1).unwrap();
        prop_assert!(a.is_subset(&b));
        prop_assert!(a.iter().all(|p| p.ad() <= d));
    }

    #[test]
    fn collapse_is_idempotent_and_monotone(a in pos_strategy(), c in pos_strategy()) {
        prop_assert_eq!(a.collapse().collapse(), a.collapse());
        let ac = a.concat(&c);
        prop_assert!(a.collapse().is_prefix_of(&ac.collapse()));
    }

    #[test]
    fn term_equality_is_an_equivalence(s1 in any::<u64>(), s2 in any::<u64>()) {
        let t = random_term(s1);
        let u = random_term(s2);
        let canon = t.canonical();
        prop_assert!(t.equal(&t));
        prop_assert!(t.equal(&canon) && canon.equal(&t));
        prop_assert_eq!(t.equal(&u), u.equal(&t));
        if t.equal(&u) {
            prop_assert!(canon.equal(&u));
        }
        let reparsed = parse_term(&print_term(&t)).unwrap();
        prop_assert!(reparsed.equal(&t));
    }

    #[test]
    fn reduction_preserves_001(seed in any::<u64>()) {
        let t = random_term(seed);
        for b in t.support_to_depth(3).unwrap().into_iter().filter(|b| t.is_redex_at(b)) {
            prop_assert!(t.reduce_at(&b).unwrap().is_001());
        }
    }

    #[test]
    fn bohm_prefixes_refine(seed in any::<u64>()) {
        let t = random_term(seed);
        let mut prev = bohm_prefix(&t, 0, 1).unwrap();
        for (d, fuel) in [(1, 1), (1, 4), (2, 4), (2, 16), (3, 16), (4, 64)] {
            let next = bohm_prefix(&t, d, fuel).unwrap();
            prop_assert!(next.extends(&prev), "{} does not extend {}", next, prev);
            if prev == (BohmNode::Bottom { why: BottomKind::Loop }) {
                prop_assert_eq!(&next, &prev);
            }
            prev = next;
        }
    }

    #[test]
    fn any_typed_step_never_grows(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (t, d) = r0_instance(&mut r, 3);
        prop_assert!(d.typed_positions().iter().all(|b| b.ad() < d.size()));
        for b in redexes(&t) {
            let red = subject_reduce_r0(&d, &t, &b, None).unwrap();
            prop_assert!(check_r0(&red.deriv, &red.term).is_ok());
            prop_assert!(red.deriv.size() <= d.size());
            if !red.contractions.is_empty() {
                prop_assert!(red.deriv.size() < d.size());
            }
        }
    }

    #[test]
    fn subject_substitution_keeps_the_derivation(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (t, d) = r0_instance(&mut r, 3);
        let typed = d.typed_positions();
        let untyped: Vec<Pos> = t.support_to_depth(64).unwrap().into_iter().filter(|b| !typed.contains(b)).collect();
        if let Some(b) = untyped.choose(&mut r) {
            let u = t.replace_at(b, &Term::var("w")).unwrap();
            let e = subject_substitute(&d, &t, &u).unwrap();
            prop_assert!(check_r0(&e, &u).is_ok());
            prop_assert_eq!(e.size(), d.size());
            prop_assert_eq!(e.judgment(), d.judgment());
            prop_assert_eq!(e.typed_positions(), typed);
        }
    }

    #[test]
    fn disjoint_union_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_seq(&mut r), random_seq(&mut r), random_seq(&mut r));
        let clash = !a.tracks().is_disjoint(&b.tracks());
        prop_assert_eq!(a.disjoint_union(&b).is_err(), clash);
        prop_assert_eq!(a.disjoint_union(&b).ok(), b.disjoint_union(&a).ok());
        let left = a.disjoint_union(&b).ok().and_then(|ab| ab.disjoint_union(&c).ok());
        let right = b.disjoint_union(&c).ok().and_then(|bc| a.disjoint_union(&bc).ok());
        prop_assert_eq!(left, right);
    }

    #[test]
    fn arrow_support_decomposes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dom = random_seq(&mut r);
        let cod = random_type(&mut r, 2);
        let t = SType::arrow(dom.clone(), cod.clone());
        let mut want: BTreeSet<Pos> = BTreeSet::from([Pos::eps()]);
        want.extend(cod.support().into_iter().map(|c| Pos::new(vec![1]).concat(&c)));
        for (k, s) in dom.entries() {
            want.extend(s.support().into_iter().map(|c| Pos::new(vec![k]).concat(&c)));
        }
        prop_assert_eq!(t.support(), want);
    }

    #[test]
    fn lifts_are_quantitative_and_collapse_back(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (t, d) = r0_instance(&mut r, 3);
        let s = lift_r0_to_s(&d, &t, &mut TrackPolicy::memo()).unwrap();
        prop_assert!(check_s(&s).is_ok());
        prop_assert!(is_quantitative(&s));
        prop_assert_eq!(collapse_s_to_multiset(&s).unwrap(), d.clone());
        // lift ∘ collapse agrees up to the choice of tracks.
        let again = lift_r0_to_s(&collapse_s_to_multiset(&s).unwrap(), &t, &mut TrackPolicy::graded()).unwrap();
        prop_assert_eq!(again.size(), s.size());
        prop_assert_eq!(collapse_s_to_multiset(&again).unwrap(), d);
    }

    #[test]
    fn s_dynamics_invariants(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = s_instance(&mut r, 3);
        for b in typed_redexes(&d) {
            let red = reduce_s(&d, &b).unwrap();
            prop_assert_eq!(&red, &reduce_s(&d, &b).unwrap());
            prop_assert!(check_s(&red).is_ok());
            prop_assert!(is_quantitative(&red));
            let back = expand_s(&red, &b, d.term(), &mut TrackPolicy::memo()).unwrap();
            prop_assert!(check_s(&back).is_ok());
            prop_assert!(is_quantitative(&back));
            // Constructors are preserved along residuals.
            let (t, t2) = (d.term(), red.term());
            for a in d.support() {
                if let Ok(res) = residual_position(&d, &b, &a).unwrap() {
                    let (l, l2) = (t.label_at(&a.collapse()).unwrap(), t2.label_at(&res.collapse()).unwrap());
                    let same = match (&l, &l2) {
                        (Label::Var(_), Label::Var(_)) => true,
                        _ => l == l2,
                    };
                    prop_assert!(same, "{} ↦ {}", a, res);
                }
            }
            // QRes is total with at most six antecedents per target.
            let m = quasi_residual_map(&d, &b).unwrap();
            prop_assert_eq!(m.len(), d.right_bisupport().len());
            let mut count: BTreeMap<_, usize> = BTreeMap::new();
            for q in m.values() {
                *count.entry(q.clone()).or_default() += 1;
            }
            prop_assert!(count.values().all(|&c| c <= 6));
        }
    }

    #[test]
    fn approximation_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = s_instance(&mut r, 2);
        let xs: Vec<_> = (0..3).map(|_| least_approximant(&d, &some_bipositions(&mut r, &d, 3)).unwrap()).collect();
        for a in &xs {
            prop_assert!(leq_approx(a, a).unwrap());
            prop_assert!(leq_approx(a, &d).unwrap());
            for b in &xs {
                if leq_approx(a, b).unwrap() && leq_approx(b, a).unwrap() {
                    prop_assert_eq!(a, b);
                }
                let j = join(&[a.clone(), b.clone()]).unwrap();
                let m = meet(&[a.clone(), b.clone()]).unwrap();
                prop_assert!(leq_approx(a, &j).unwrap() && leq_approx(b, &j).unwrap());
                prop_assert!(leq_approx(&m, a).unwrap() && leq_approx(&m, b).unwrap());
                prop_assert!(leq_approx(&j, &d).unwrap());
                for c in &xs {
                    if leq_approx(a, b).unwrap() && leq_approx(b, c).unwrap() {
                        prop_assert!(leq_approx(a, c).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn normal_form_typings(seed in any::<u64>(), n in 0u64..6) {
        let mut r = rng(seed);
        let t = normal_form(&mut r, 8, 0);
        let g = unforgetful_nf_typing(&t).unwrap();
        let e = rank_truncate(&g, n, &mut TrackPolicy::graded()).unwrap();
        prop_assert!(check_s(e.derivation()).is_ok());
        prop_assert!(is_quantitative(e.derivation()));
        let e2 = rank_truncate(&g, n, &mut TrackPolicy::graded()).unwrap();
        prop_assert_eq!(e.derivation(), e2.derivation());
        // A deep enough member types every position.
        let full = rank_truncate(&g, 12, &mut TrackPolicy::graded()).unwrap();
        let typed: BTreeSet<Pos> = full.derivation().support().iter().map(Pos::collapse).collect();
        prop_assert_eq!(typed, t.support_to_depth(64).unwrap());
        // The same candidate with an explicit assignment gives the same derivation.
        let cand = SupportCandidate::upto_rank(&t, &[2], n);
        let assign = cand.unconstrained().into_iter().map(|a| (a, SType::o())).collect();
        let e3 = natural_extension(&cand, &assign, &mut TrackPolicy::graded()).unwrap();
        prop_assert_eq!(e3.derivation(), e.derivation());
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn strongly_normalising_terms_are_confluent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (t, _) = r0_instance(&mut r, 2);
        prop_assume!(t.node_count() <= 12);
        let mut nfs = BTreeSet::new();
        normal_forms(&t, &mut HashSet::new(), &mut nfs);
        prop_assert_eq!(nfs.len(), 1, "{}", print_term(&t));
    }
}
