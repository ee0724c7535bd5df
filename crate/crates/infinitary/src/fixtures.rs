//! The golden fixture corpus.
//!
//! Every fixture is rebuilt from scratch by [`corpus`]; the committed copies
//! under `fixtures/` must match byte for byte. `MANIFEST.txt` records the
//! documented conclusion of each derivation.

use std::collections::{BTreeMap, BTreeSet};

use crate::approx::expand_infinitary;
use crate::json::{r0_to_json, s_to_json};
use crate::nf::{rank_truncate, unforgetful_nf_typing};
use crate::pos::Pos;
use crate::r0::{build_pi_prime_n, infinitary_expand_r0, show_ctx, R0Derivation};
use crate::reduction::{run_path, Strategy};
use crate::sderiv::{lift_family, SDerivation, SJudg, SRule};
use crate::stype::{parse_stype, SCtx, SType, Seq};
use crate::term::{parse_term, Term, Var};
use crate::track::TrackPolicy;

/// Largest index of the indexed families in the corpus.
pub const FAMILY_SIZE: usize = 4;

pub fn f_infinity() -> Term {
    parse_term("fix X. f X").expect("literal")
}

pub fn curry_f() -> Term {
    parse_term("(\\x. f (x x))(\\x. f (x x))").expect("literal")
}

fn st(s: &str) -> SType {
    parse_stype(s).expect("literal")
}

/// `⊢ λx.xx : (2·o′, 4·(8·o, 3·o′, 2·o)→o′, 5·o, 9·o)→o′`.
pub fn p_ex() -> SDerivation {
    let t = parse_term("\\x. x x").expect("literal");
    let support: BTreeSet<Pos> = ["", "0", "01", "02", "03", "08"].into_iter().map(|s| s.parse().expect("literal")).collect();
    let axioms = BTreeMap::from([
        (Pos::new(vec![0, 1]), (4, st("(8:o, 3:o', 2:o) -> o'"))),
        (Pos::new(vec![0, 2]), (9, st("o"))),
        (Pos::new(vec![0, 3]), (2, st("o'"))),
        (Pos::new(vec![0, 8]), (5, st("o"))),
    ]);
    SDerivation::from_axioms(&t, &support, &axioms).expect("P_ex is well formed")
}

/// S-lifts of `Π′_1 … Π′_n` with one shared memo policy.
pub fn pi_prime_lifts(n: usize) -> Vec<SDerivation> {
    let ds: Vec<R0Derivation> = (1..=n).map(build_pi_prime_n).collect();
    lift_family(&ds, &f_infinity(), &mut TrackPolicy::memo()).expect("lifts of Π′_n")
}

/// `Π_n`: `Π′_n` transported back to `cu_f` along its hh path.
pub fn pi_n_r0(n: usize) -> R0Derivation {
    let path = run_path(&curry_f(), Strategy::Hh, 2 * n + 4).expect("cu_f path");
    infinitary_expand_r0(&build_pi_prime_n(n), &f_infinity(), &path).expect("Π_n")
}

/// S counterparts of `Π_1 … Π_n`, expanded from [`pi_prime_lifts`].
pub fn pi_n_lifts(n: usize) -> Vec<SDerivation> {
    let path = run_path(&curry_f(), Strategy::Hh, 2 * n + 4).expect("cu_f path");
    expand_infinitary(&pi_prime_lifts(n), &path, &mut TrackPolicy::memo()).expect("Π_n lifts")
}

/// `P_n`: the rank-`n` truncation of the all-`o` typing of `f^∞`.
pub fn p_n_f_infinity(n: u64) -> SDerivation {
    let g = unforgetful_nf_typing(&f_infinity()).expect("f^∞ is normal");
    rank_truncate(&g, n, &mut TrackPolicy::graded()).expect("P_n").into_derivation()
}

/// Prefix of the representative of `Π′` whose argument chain skips track 3
/// at the second level and never types it. Tracks above 5 are cut, while
/// the unanchored track 3 is kept at the frontier `222`, so the derivation
/// is not quantitative and the frontier has no premises.
pub fn p_tilde_prime_prefix() -> SDerivation {
    let fty = st("(2:o) -> o");
    let f = Var::Free("f".into());
    let ctx = |ks: &[u64]| {
        let mut c = SCtx::empty();
        c.insert(f.clone(), Seq::from_pairs(ks.iter().map(|&k| (k, fty.clone()))));
        c
    };
    let app = |ks: &[u64]| SJudg { ctx: ctx(ks), ty: SType::o(), rule: SRule::App };
    let ax = |k: u64| SJudg { ctx: ctx(&[k]), ty: fty.clone(), rule: SRule::Ax(k) };
    let p = |s: &str| -> Pos { s.parse().expect("literal") };
    let nodes = BTreeMap::from([
        (p(""), app(&[2, 3, 4, 5])),
        (p("1"), ax(2)),
        (p("2"), app(&[3, 4, 5])),
        (p("21"), ax(4)),
        (p("22"), app(&[3, 5])),
        (p("221"), ax(5)),
        (p("222"), app(&[3])),
    ]);
    SDerivation::from_judgments(&f_infinity(), nodes)
}

fn s_conclusion(d: &SDerivation) -> String {
    let (c, t) = d.conclusion();
    format!("{c} |- {t}")
}

fn r0_conclusion(d: &R0Derivation) -> String {
    format!("{} |- {}", show_ctx(&d.ctx), d.ty)
}

/// File name and contents of every fixture, `MANIFEST.txt` last.
pub fn corpus() -> Vec<(String, String)> {
    let finf = f_infinity();
    let cu = curry_f();
    let mut files = Vec::new();
    let mut manifest = String::from("# file\tsize\tconclusion\n");
    let mut add = |files: &mut Vec<(String, String)>, name: String, body: String, size: usize, concl: String| {
        manifest.push_str(&format!("{name}\t{size}\t{concl}\n"));
        files.push((name, body));
    };
    add(&mut files, "p_ex.s.json".into(), s_to_json(&p_ex()), p_ex().size(), s_conclusion(&p_ex()));
    for n in 1..=FAMILY_SIZE {
        let d = build_pi_prime_n(n);
        add(&mut files, format!("pi_prime_{n}.r0.json"), r0_to_json(&d, &finf), d.size(), r0_conclusion(&d));
    }
    for (i, d) in pi_prime_lifts(FAMILY_SIZE).iter().enumerate() {
        add(&mut files, format!("pi_prime_{}.s.json", i + 1), s_to_json(d), d.size(), s_conclusion(d));
    }
    for n in 1..=FAMILY_SIZE {
        let d = pi_n_r0(n);
        add(&mut files, format!("pi_{n}.r0.json"), r0_to_json(&d, &cu), d.size(), r0_conclusion(&d));
    }
    for (i, d) in pi_n_lifts(FAMILY_SIZE).iter().enumerate() {
        add(&mut files, format!("pi_{}.s.json", i + 1), s_to_json(d), d.size(), s_conclusion(d));
    }
    for n in 1..=FAMILY_SIZE as u64 {
        let d = p_n_f_infinity(n);
        add(&mut files, format!("p_{n}_f_infinity.s.json"), s_to_json(&d), d.size(), s_conclusion(&d));
    }
    let pt = p_tilde_prime_prefix();
    add(&mut files, "p_tilde_prime_rank5.s.json".into(), s_to_json(&pt), pt.size(), s_conclusion(&pt));
    files.push(("MANIFEST.txt".into(), manifest));
    files
}
