//! Typing 001-normal forms: support candidates, constrain levels,
//! natural extensions, called ranks and rank-`n` truncations.

use std::collections::{BTreeMap, BTreeSet};

use crate::pos::Pos;
use crate::sderiv::{axiom_position, Bipos, SDerivation, SError};
use crate::stype::{SType, Seq};
use crate::term::{Label, Term, Var};
use crate::track::TrackPolicy;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NfError {
    #[error("the term is not a normal form")]
    NotNormalForm,
    #[error("invalid support candidate: {0}")]
    InvalidCandidate(String),
    #[error("no type assigned to unconstrained position {0}")]
    MissingAssignment(Pos),
    #[error(transparent)]
    Deriv(#[from] SError),
}

/// `rk(a) = max(ad(a), max(a))`.
pub fn rank(a: &Pos) -> u64 {
    a.rank()
}

/// A nonempty set of derivation positions over `supp(t)`, downward closed
/// for `≺`.
#[derive(Debug, Clone)]
pub struct SupportCandidate {
    term: Term,
    positions: BTreeSet<Pos>,
}

impl SupportCandidate {
    pub fn new(term: &Term, positions: BTreeSet<Pos>) -> Result<SupportCandidate, NfError> {
        if !positions.contains(&Pos::eps()) {
            return Err(NfError::InvalidCandidate("ε is missing".into()));
        }
        for a in &positions {
            let Some(label) = term.label_at(&a.collapse()) else {
                return Err(NfError::InvalidCandidate(format!("{a} is not over the term's support")));
            };
            if let Some(p) = a.parent() {
                if !positions.contains(&p) {
                    return Err(NfError::InvalidCandidate(format!("{a} lacks its prefix {p}")));
                }
            }
            let needed = match label {
                Label::Abs => Some(0),
                Label::App => Some(1),
                Label::Var(_) => None,
            };
            if let Some(l) = needed {
                if !positions.contains(&a.child(l)) {
                    return Err(NfError::InvalidCandidate(format!("{a} lacks {}", a.child(l))));
                }
            }
        }
        Ok(SupportCandidate { term: term.clone(), positions })
    }

    /// `{a | rk(a) ≤ n}` over `supp(t)` with argument tracks drawn from
    /// `tracks`, closed under the `0`/`1` letters (which only matters for
    /// `n = 0`).
    pub fn upto_rank(term: &Term, tracks: &[u64], n: u64) -> SupportCandidate {
        let mut positions = BTreeSet::new();
        let mut stack = vec![Pos::eps()];
        while let Some(a) = stack.pop() {
            let label = term.label_at(&a.collapse()).expect("walks the term");
            positions.insert(a.clone());
            match label {
                Label::Abs => stack.push(a.child(0)),
                Label::App => {
                    stack.push(a.child(1));
                    stack.extend(tracks.iter().map(|&k| a.child(k)).filter(|c| c.rank() <= n));
                }
                Label::Var(_) => {}
            }
        }
        SupportCandidate { term: term.clone(), positions }
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn positions(&self) -> &BTreeSet<Pos> {
        &self.positions
    }

    fn label(&self, a: &Pos) -> Label {
        self.term.label_at(&a.collapse()).expect("candidate positions are in the support")
    }

    /// The unconstrained positions `Å`.
    pub fn unconstrained(&self) -> BTreeSet<Pos> {
        self.positions.iter().filter(|a| clev(self, a).kind == ClevKind::Unconstrained).cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClevKind {
    Unconstrained,
    Partial,
    Nonzero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clev {
    pub kind: ClevKind,
    pub level: usize,
    pub anchor: Pos,
}

/// Constrain level of `a ∈ A` with its unconstrained anchor `å`.
pub fn clev(cand: &SupportCandidate, a: &Pos) -> Clev {
    if cand.label(a) == Label::Abs {
        let mut anchor = a.clone();
        while cand.label(&anchor) == Label::Abs {
            anchor = anchor.child(0);
        }
        return Clev { kind: ClevKind::Nonzero, level: anchor.len() - a.len(), anchor };
    }
    let mut anchor = a.clone();
    while anchor.last() == Some(1) {
        anchor = anchor.parent().expect("nonempty");
    }
    let level = a.len() - anchor.len();
    let kind = if level == 0 { ClevKind::Unconstrained } else { ClevKind::Partial };
    Clev { kind, level, anchor }
}

/// Restriction of a type to its positions of rank `≤ n`. Codomains are
/// always kept.
pub fn truncate_type(t: &SType, n: u64) -> SType {
    fn go<'a>(cur: &'a SType, stack: &mut Vec<&'a SType>, n: u64, ad: u64) -> SType {
        let mut cur = cur;
        let depth = stack.len();
        while let SType::Back(j) = cur {
            cur = stack[stack.len() - 1 - *j as usize];
        }
        let out = match cur {
            SType::Atom(a) => SType::Atom(a.clone()),
            SType::Arrow(f, t) => {
                stack.push(cur);
                let dom = if ad < n {
                    Seq::from_pairs((2..=n).filter_map(|k| f.get(k).map(|s| (k, go(s, stack, n, ad + 1)))))
                } else {
                    Seq::empty()
                };
                let cod = go(t, stack, n, ad);
                stack.pop();
                SType::arrow(dom, cod)
            }
            SType::Back(_) => unreachable!(),
        };
        stack.truncate(depth);
        out
    }
    go(t, &mut Vec::new(), n, 0)
}

/// A natural extension together with the data needed for called ranks.
#[derive(Debug, Clone)]
pub struct NaturalExtension {
    cand: SupportCandidate,
    deriv: SDerivation,
}

impl NaturalExtension {
    pub fn derivation(&self) -> &SDerivation {
        &self.deriv
    }

    pub fn into_derivation(self) -> SDerivation {
        self.deriv
    }

    pub fn candidate(&self) -> &SupportCandidate {
        &self.cand
    }

    /// `cr(p) = max(cr_out(p), cr_in(p))`; `None` outside the bisupport.
    pub fn called_rank(&self, p: &Bipos) -> Option<u64> {
        self.deriv.lookup(p)?;
        match p {
            Bipos::Right { at, c } => self.cr_right(at, c),
            Bipos::Left { at, x, c } => {
                let k = c.first()?;
                let a0 = axiom_position(&self.deriv, at, x, k).ok()?;
                self.cr_right(&a0, &c.suffix_from(1))
            }
        }
    }

    fn cr_right(&self, a: &Pos, c: &Pos) -> Option<u64> {
        let cl = clev(&self.cand, a);
        let here = Some(a.rank().max(c.rank()));
        let ones = c.letters().iter().take_while(|&&l| l == 1).count();
        let (i, rest) = (ones, c.suffix_from(ones));
        let Some(k) = rest.first().filter(|_| i < cl.level) else { return here };
        let tail = rest.suffix_from(1);
        match cl.kind {
            ClevKind::Unconstrained => here,
            ClevKind::Nonzero => {
                // Entry k of E(a·0^{i+1})(x_{i+1}).
                let binder_body = (0..=i).fold(a.clone(), |p, _| p.child(0));
                let a0 = axiom_position(&self.deriv, &binder_body, &Var::Bound(0), k).ok()?;
                self.cr_right(&a0, &tail)
            }
            ClevKind::Partial => {
                let mut callee = cl.anchor.clone();
                for _ in 0..cl.level - 1 - i {
                    callee = callee.child(1);
                }
                self.cr_right(&callee.child(k), &tail)
            }
        }
    }
}

/// The natural extension of `(A, T̊)`; axiom tracks are `⟨a⟩` under
/// `policy`, requested for all axiom positions at once.
pub fn natural_extension(
    cand: &SupportCandidate,
    assign: &BTreeMap<Pos, SType>,
    policy: &mut TrackPolicy,
) -> Result<NaturalExtension, NfError> {
    let t = cand.term();
    if !t.is_normal() {
        return Err(NfError::NotNormalForm);
    }
    let unc = cand.unconstrained();
    for a in &unc {
        if !assign.contains_key(a) {
            return Err(NfError::MissingAssignment(a.clone()));
        }
    }
    let vars: Vec<Pos> = cand.positions.iter().filter(|a| matches!(cand.label(a), Label::Var(_))).cloned().collect();
    let tracks = policy.assign(vars.iter().cloned()).map_err(SError::from)?;
    let mut memo: BTreeMap<Pos, SType> = BTreeMap::new();
    let mut axioms = BTreeMap::new();
    for a in &vars {
        let ty = type_at(cand, assign, &tracks, a, &mut memo);
        axioms.insert(a.clone(), (tracks[a], ty));
    }
    let deriv = SDerivation::from_axioms(t, &cand.positions, &axioms)?;
    Ok(NaturalExtension { cand: cand.clone(), deriv })
}

/// `T(a) = Call(a)[T(a′)/X_{a′}]`, computed by memoised recursion (the
/// calls are well founded on a finite candidate).
fn type_at(
    cand: &SupportCandidate,
    assign: &BTreeMap<Pos, SType>,
    tracks: &BTreeMap<Pos, u64>,
    a: &Pos,
    memo: &mut BTreeMap<Pos, SType>,
) -> SType {
    if let Some(t) = memo.get(a) {
        return t.clone();
    }
    let cl = clev(cand, a);
    let ty = match cl.kind {
        ClevKind::Unconstrained => assign[a].clone(),
        ClevKind::Nonzero => {
            let mut ty = assign[&cl.anchor].clone();
            for i in (1..=cl.level).rev() {
                let body = (0..i).fold(a.clone(), |p, _| p.child(0));
                let entries: Vec<(u64, SType)> = binder_axioms(cand, &body)
                    .into_iter()
                    .map(|a0| (tracks[&a0], type_at(cand, assign, tracks, &a0, memo)))
                    .collect();
                ty = SType::arrow(Seq::from_pairs(entries), ty);
            }
            ty
        }
        ClevKind::Partial => {
            let mut ty = assign[&cl.anchor].clone();
            for i in (1..=cl.level).rev() {
                let app = (0..cl.level - i).fold(cl.anchor.clone(), |p, _| p.child(1));
                let entries: Vec<(u64, SType)> = cand
                    .positions
                    .range(app.child(2)..)
                    .take_while(|p| app.is_prefix_of(p))
                    .filter(|p| p.len() == app.len() + 1)
                    .map(|p| (p.last().expect("child"), type_at(cand, assign, tracks, p, memo)))
                    .collect();
                ty = SType::arrow(Seq::from_pairs(entries), ty);
            }
            ty
        }
    };
    memo.insert(a.clone(), ty.clone());
    ty
}

/// `A_a(x)` for the variable bound just below `body`: its axioms in `A`.
fn binder_axioms(cand: &SupportCandidate, body: &Pos) -> Vec<Pos> {
    cand.positions
        .range(body.clone()..)
        .take_while(|p| body.is_prefix_of(p))
        .filter(|p| {
            let rel = body.strip_prefix_of(p).expect("prefix");
            let depth = rel.letters().iter().filter(|&&l| l == 0).count() as u32;
            cand.label(p) == Label::Var(Var::Bound(depth))
        })
        .cloned()
        .collect()
}

/// Rank-indexed generator of a natural extension over `supp(t)` with the
/// same type at every unconstrained position.
#[derive(Debug, Clone)]
pub struct NfGenerator {
    term: Term,
    tracks: Vec<u64>,
    assign: SType,
}

impl NfGenerator {
    pub fn new(term: &Term, tracks: Vec<u64>, assign: SType) -> Result<NfGenerator, NfError> {
        if !term.is_normal() {
            return Err(NfError::NotNormalForm);
        }
        if tracks.is_empty() || tracks.iter().any(|&k| k < 2) {
            return Err(NfError::InvalidCandidate("argument tracks must be ≥ 2".into()));
        }
        Ok(NfGenerator { term: term.clone(), tracks, assign })
    }

    pub fn term(&self) -> &Term {
        &self.term
    }
}

/// `A = supp(t)` (one argument track, 2) with `T̊ ≡ o`.
pub fn unforgetful_nf_typing(t: &Term) -> Result<NfGenerator, NfError> {
    NfGenerator::new(t, vec![2], SType::o())
}

/// `P_n`: the natural extension of `(A_n, T̊_n)`.
pub fn rank_truncate(g: &NfGenerator, n: u64, policy: &mut TrackPolicy) -> Result<NaturalExtension, NfError> {
    let cand = SupportCandidate::upto_rank(&g.term, &g.tracks, n);
    let ty = truncate_type(&g.assign, n);
    let assign = cand.unconstrained().into_iter().map(|a| (a, ty.clone())).collect();
    natural_extension(&cand, &assign, policy)
}

/// Subderivations typing the arguments of a head normal form
/// `λx1…xp. y t1…tq`, in argument order then by track.
pub fn argument_subderivations(d: &SDerivation) -> Vec<SDerivation> {
    let t = d.term();
    let mut spine = Pos::eps();
    while t.label_at(&spine) == Some(Label::Abs) {
        spine = spine.child(0);
    }
    let mut apps = Vec::new();
    while t.label_at(&spine) == Some(Label::App) {
        apps.push(spine.clone());
        spine = spine.child(1);
    }
    let mut out = Vec::new();
    for app in apps.iter().rev() {
        for k in d.children(app).into_iter().filter(|&k| k >= 2) {
            out.extend(d.subderivation(&app.child(k)));
        }
    }
    out
}
