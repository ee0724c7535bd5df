//! Versioned JSON for R0 and S derivations.
//!
//! Both formats are a tree of judgments. A node has a rule (`ax`, `abs` or
//! `app`), a subject position, a type and a context. The context maps a
//! variable (a free name, or `#i` for the de Bruijn index `i`) to a multiset
//! of types in R0 and to a sequence type in S. S nodes also carry their
//! derivation position, and axioms carry their track. The subject term is
//! stored in surface syntax at the top level.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::pos::Pos;
use crate::r0::{parse_rtype, R0Ctx, R0Derivation, R0Rule};
use crate::sderiv::{SDerivation, SJudg, SRule};
use crate::stype::{parse_seq, parse_stype, SCtx};
use crate::term::{parse_term, print_term, Term, Var};

pub const R0_SCHEMA: &str = "infinitary/r0-derivation";
pub const S_SCHEMA: &str = "infinitary/s-derivation";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("empty document")]
    Empty,
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown schema `{0}`")]
    UnknownSchema(String),
    #[error("unsupported version {0}")]
    Version(u32),
    #[error("at {at}: {msg}")]
    Node { at: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RuleName {
    Ax,
    Abs,
    App,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct R0Node {
    rule: RuleName,
    subject: Pos,
    #[serde(rename = "type")]
    ty: String,
    context: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    premises: Vec<R0Node>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SNode {
    position: Pos,
    rule: RuleName,
    subject: Pos,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    track: Option<u64>,
    #[serde(rename = "type")]
    ty: String,
    context: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    premises: Vec<SNode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<N> {
    schema: String,
    version: u32,
    term: String,
    root: N,
}

#[derive(Deserialize)]
struct Header {
    schema: String,
    version: u32,
}

/// A parsed document of either kind, with the term it types.
#[derive(Debug, Clone)]
pub enum Parsed {
    R0(Term, R0Derivation),
    S(SDerivation),
}

fn var_key(x: &Var) -> String {
    crate::r0::show_var(x)
}

fn parse_var(s: &str) -> Result<Var, String> {
    match s.strip_prefix('#') {
        Some(i) => i.parse().map(Var::Bound).map_err(|_| format!("bad bound variable `{s}`")),
        None if !s.is_empty() => Ok(Var::Free(s.to_string())),
        None => Err("empty variable name".into()),
    }
}

fn node_err(at: &Pos, msg: impl ToString) -> SchemaError {
    SchemaError::Node { at: at.to_string(), msg: msg.to_string() }
}

fn r0_node(d: &R0Derivation) -> R0Node {
    let (rule, premises) = match &d.rule {
        R0Rule::Ax => (RuleName::Ax, vec![]),
        R0Rule::Abs(b) => (RuleName::Abs, vec![r0_node(b)]),
        R0Rule::App(f, args) => (RuleName::App, std::iter::once(&**f).chain(args).map(r0_node).collect()),
    };
    R0Node {
        rule,
        subject: d.subject.clone(),
        ty: d.ty.to_string(),
        context: d.ctx.entries().map(|(x, ms)| (var_key(x), ms.iter().map(|t| t.to_string()).collect())).collect(),
        premises,
    }
}

fn r0_from_node(n: R0Node) -> Result<R0Derivation, SchemaError> {
    let at = n.subject.clone();
    let ty = parse_rtype(&n.ty).map_err(|e| node_err(&at, e))?;
    let mut ctx = R0Ctx::empty();
    for (x, tys) in n.context {
        let x = parse_var(&x).map_err(|e| node_err(&at, e))?;
        let ms = tys.iter().map(|s| parse_rtype(s)).collect::<Result<Vec<_>, _>>().map_err(|e| node_err(&at, e))?;
        if ms.is_empty() {
            return Err(node_err(&at, "context entry with an empty multiset"));
        }
        ctx.insert(x, ms);
    }
    let mut premises = n.premises.into_iter().map(r0_from_node).collect::<Result<Vec<_>, _>>()?;
    let rule = match (n.rule, premises.len()) {
        (RuleName::Ax, 0) => R0Rule::Ax,
        (RuleName::Abs, 1) => R0Rule::Abs(Box::new(premises.remove(0))),
        (RuleName::App, k) if k >= 1 => {
            let f = premises.remove(0);
            R0Rule::App(Box::new(f), premises)
        }
        (r, k) => return Err(node_err(&at, format!("rule {r:?} with {k} premises"))),
    };
    Ok(R0Derivation { subject: n.subject, ctx, ty, rule })
}

fn s_node(d: &SDerivation, a: &Pos) -> SNode {
    let j = &d.nodes()[a];
    let (rule, track) = match j.rule {
        SRule::Ax(k) => (RuleName::Ax, Some(k)),
        SRule::Abs => (RuleName::Abs, None),
        SRule::App => (RuleName::App, None),
    };
    SNode {
        position: a.clone(),
        rule,
        subject: a.collapse(),
        track,
        ty: j.ty.to_string(),
        context: j.ctx.entries().map(|(x, s)| (var_key(x), s.to_string())).collect(),
        premises: d.children(a).into_iter().map(|k| s_node(d, &a.child(k))).collect(),
    }
}

fn s_collect(n: SNode, parent: Option<&Pos>, out: &mut BTreeMap<Pos, SJudg>) -> Result<(), SchemaError> {
    let at = n.position.clone();
    if at.parent().as_ref() != parent {
        return Err(node_err(&at, "position is not a child of its parent's position"));
    }
    if n.subject != at.collapse() {
        return Err(node_err(&at, format!("subject {} is not the collapse of the position", n.subject)));
    }
    let rule = match (n.rule, n.track) {
        (RuleName::Ax, Some(k)) => SRule::Ax(k),
        (RuleName::Abs, None) => SRule::Abs,
        (RuleName::App, None) => SRule::App,
        (RuleName::Ax, None) => return Err(node_err(&at, "axiom without a track")),
        (_, Some(_)) => return Err(node_err(&at, "track on a non-axiom")),
    };
    let ty = parse_stype(&n.ty).map_err(|e| node_err(&at, e))?;
    let mut ctx = SCtx::empty();
    for (x, s) in n.context {
        let x = parse_var(&x).map_err(|e| node_err(&at, e))?;
        let s = parse_seq(&s).map_err(|e| node_err(&at, e))?;
        if s.is_empty() {
            return Err(node_err(&at, "context entry with an empty sequence"));
        }
        ctx.insert(x, s);
    }
    if out.insert(at.clone(), SJudg { ctx, ty, rule }).is_some() {
        return Err(node_err(&at, "duplicate position"));
    }
    for p in n.premises {
        s_collect(p, Some(&at), out)?;
    }
    Ok(())
}

fn render<N: Serialize>(schema: &str, term: &Term, root: N) -> String {
    let doc = Document { schema: schema.to_string(), version: VERSION, term: print_term(term), root };
    let mut s = serde_json::to_string_pretty(&doc).expect("derivation documents always serialize");
    s.push('\n');
    s
}

pub fn r0_to_json(d: &R0Derivation, t: &Term) -> String {
    render(R0_SCHEMA, t, r0_node(d))
}

pub fn s_to_json(d: &SDerivation) -> String {
    render(S_SCHEMA, d.term(), s_node(d, &Pos::eps()))
}

fn header(src: &str) -> Result<Header, SchemaError> {
    if src.trim().is_empty() {
        return Err(SchemaError::Empty);
    }
    let h: Header = serde_json::from_str(src)?;
    if h.version != VERSION {
        return Err(SchemaError::Version(h.version));
    }
    Ok(h)
}

fn parse_doc_term(s: &str) -> Result<Term, SchemaError> {
    parse_term(s).map_err(|e| SchemaError::Node { at: "term".into(), msg: e.to_string() })
}

/// Parses either schema. Judgments are taken as written: run the checkers
/// to validate them.
pub fn parse_derivation(src: &str) -> Result<Parsed, SchemaError> {
    let h = header(src)?;
    match h.schema.as_str() {
        R0_SCHEMA => {
            let doc: Document<R0Node> = serde_json::from_str(src)?;
            Ok(Parsed::R0(parse_doc_term(&doc.term)?, r0_from_node(doc.root)?))
        }
        S_SCHEMA => {
            let doc: Document<SNode> = serde_json::from_str(src)?;
            let term = parse_doc_term(&doc.term)?;
            if doc.root.position != Pos::eps() {
                return Err(node_err(&doc.root.position, "root position must be empty"));
            }
            let mut nodes = BTreeMap::new();
            s_collect(doc.root, None, &mut nodes)?;
            Ok(Parsed::S(SDerivation::from_judgments(&term, nodes)))
        }
        other => Err(SchemaError::UnknownSchema(other.to_string())),
    }
}

pub fn parse_r0(src: &str) -> Result<(Term, R0Derivation), SchemaError> {
    match parse_derivation(src)? {
        Parsed::R0(t, d) => Ok((t, d)),
        Parsed::S(_) => Err(SchemaError::UnknownSchema(format!("{S_SCHEMA} where {R0_SCHEMA} was expected"))),
    }
}

pub fn parse_s(src: &str) -> Result<SDerivation, SchemaError> {
    match parse_derivation(src)? {
        Parsed::S(d) => Ok(d),
        Parsed::R0(..) => Err(SchemaError::UnknownSchema(format!("{R0_SCHEMA} where {S_SCHEMA} was expected"))),
    }
}
