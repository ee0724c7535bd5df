//! Seeded generators shared by the acceptance and property tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use infinitary::nf::{rank_truncate, unforgetful_nf_typing};
use infinitary::pos::Pos;
use infinitary::r0::{check_r0, subject_expand_r0, R0Derivation};
use infinitary::sderiv::{collapse_s_to_multiset, lift_r0_to_s, Bipos, SDerivation};
use infinitary::term::{substitute, Label, Term};
use infinitary::track::TrackPolicy;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const FREE: [&str; 3] = ["f", "g", "y"];

/// A finite normal form `λx1…xp. h nf1 … nfq` of bounded size.
pub fn normal_form(r: &mut ChaCha8Rng, budget: usize, binders: u32) -> Term {
    let lams = if budget > 1 && r.gen_bool(0.35) { 1 } else { 0 };
    let inner = binders + lams;
    let head = if inner > 0 && r.gen_bool(0.6) {
        Term::bvar(r.gen_range(0..inner))
    } else {
        Term::var(FREE.choose(r).unwrap())
    };
    let mut left = budget.saturating_sub(1 + lams as usize);
    let mut t = head;
    let q = if left == 0 { 0 } else { r.gen_range(0..=left.min(3)) };
    for _ in 0..q {
        if left == 0 {
            break;
        }
        let share = r.gen_range(1..=left);
        left -= share;
        t = Term::app(t, normal_form(r, share, inner));
    }
    (0..lams).fold(t, |acc, _| Term::lam("x", acc))
}

/// The full unforgetful typing of a finite normal form, collapsed to R0.
pub fn nf_r0(t: &Term) -> R0Derivation {
    let g = unforgetful_nf_typing(t).unwrap();
    let depth = t.support_to_depth(64).unwrap().iter().map(Pos::len).max().unwrap_or(0) as u64;
    let d = rank_truncate(&g, depth + 2, &mut TrackPolicy::memo()).unwrap().into_derivation();
    collapse_s_to_multiset(&d).unwrap()
}

fn positions(t: &Term) -> Vec<Pos> {
    t.support_to_depth(64).unwrap().into_iter().collect()
}

/// One β-expansion at a random position: `u ⇐ (λz.z) u`, `u ⇐ (λz.u) w`
/// or `u ⇐ (λy.u) y` for a free `y` of `u`.
pub fn beta_expand(r: &mut ChaCha8Rng, t2: &Term) -> Option<(Term, Pos)> {
    let ps = positions(t2);
    let p = ps.choose(r)?.clone();
    let u = t2.subterm(&p)?;
    let redex = match r.gen_range(0..3) {
        0 => Term::app(Term::lam("z", Term::bvar(0)), u.clone()),
        1 => Term::app(Term::lam("z", u.shifted(1)), Term::var("w")),
        _ => {
            let y = *FREE.iter().find(|x| u.free_vars().contains(**x))?;
            let body = substitute(&u.shifted(1), y, &Term::bvar(0)).ok()?;
            Term::app(Term::lam(y, body), Term::var(y))
        }
    };
    let t = t2.replace_at(&p, &redex).ok()?;
    (t.reduce_at(&p).ok()?.equal(t2)).then_some((t, p))
}

/// A term with redexes and an R0 derivation of it, obtained by expanding
/// the typing of a random normal form `steps` times.
pub fn r0_instance(r: &mut ChaCha8Rng, steps: usize) -> (Term, R0Derivation) {
    loop {
        let budget = r.gen_range(2..9);
        let mut t = normal_form(r, budget, 0);
        let mut d = nf_r0(&t);
        for _ in 0..steps {
            if let Some((t1, p)) = beta_expand(r, &t) {
                if let Ok(d1) = subject_expand_r0(&d, &t, &p, &t1) {
                    t = t1;
                    d = d1;
                }
            }
        }
        if check_r0(&d, &t).is_ok() {
            return (t, d);
        }
    }
}

pub fn s_instance(r: &mut ChaCha8Rng, steps: usize) -> SDerivation {
    let (t, d) = r0_instance(r, steps);
    lift_r0_to_s(&d, &t, &mut TrackPolicy::memo()).unwrap()
}

/// Redex positions of a finite term typed by `d`.
pub fn typed_redexes(d: &SDerivation) -> Vec<Pos> {
    let t = d.term();
    let typed: BTreeSet<Pos> = d.support().iter().map(Pos::collapse).collect();
    positions(t).into_iter().filter(|b| t.is_redex_at(b) && typed.contains(b)).collect()
}

pub fn redexes(t: &Term) -> Vec<Pos> {
    positions(t).into_iter().filter(|b| t.is_redex_at(b)).collect()
}

/// A random subset of the right bisupport.
pub fn some_bipositions(r: &mut ChaCha8Rng, d: &SDerivation, max: usize) -> BTreeSet<Bipos> {
    let all: Vec<Bipos> = d.right_bisupport().into_iter().collect();
    let k = r.gen_range(0..=max.min(all.len()));
    all.choose_multiple(r, k).cloned().collect()
}

pub fn is_var(t: &Term, p: &Pos) -> bool {
    matches!(t.label_at(p), Some(Label::Var(_)))
}
