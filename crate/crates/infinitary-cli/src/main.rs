//! `infinitary`: command-line front end.
//!
//! Exit status is 0 on success, 1 when the input is rejected by the theory
//! (ill-typed derivation, untyped redex, schema violation, …) and 2 on a
//! usage error.

mod input;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use infinitary::approx::{self, expand_infinitary, find_finite_approximant, Family, NfFamily, RecordedFamily};
use infinitary::dynamics::{expand_s, reduce_s, residual_position};
use infinitary::fixtures;
use infinitary::json::{r0_to_json, s_to_json};
use infinitary::nf::{natural_extension, rank_truncate, unforgetful_nf_typing, SupportCandidate};
use infinitary::pos::Pos;
use infinitary::r0::{
    check_r0, infinitary_expand_r0, show_ctx, subject_expand_r0, subject_reduce_r0, type_by_head_transport, R0Derivation,
    RType,
};
use infinitary::reduction::{bohm_prefix, run_path, Strategy};
use infinitary::sderiv::{check_s, collapse_s_to_multiset, is_quantitative, lift_r0_to_s, Bipos, SDerivation};
use infinitary::term::{print_term, Term};
use infinitary::track::TrackPolicy;

use input::{load_r0, load_s, read_path, read_term, read_text};

#[derive(Parser)]
#[command(name = "infinitary", version, about = "Infinitary λ-terms and their intersection type systems")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a reduction strategy.
    Reduce {
        /// Term text, or a file containing it.
        term: String,
        /// Reduction strategy: head, lo or hh.
        #[arg(long, default_value = "hh")]
        strategy: Strategy,
        /// Step budget.
        #[arg(long, default_value_t = 20)]
        fuel: usize,
        /// Print every step.
        #[arg(long)]
        trace: bool,
    },
    /// Böhm-tree prefix.
    Bohm {
        /// Term text, or a file containing it.
        term: String,
        /// Depth of the prefix.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Step budget.
        #[arg(long, default_value_t = 100)]
        fuel: usize,
    },
    /// The multiset system R0.
    #[command(subcommand)]
    R0(R0Cmd),
    /// The track-based system S.
    #[command(subcommand)]
    S(SCmd),
    /// The approximation order on S derivations.
    #[command(subcommand)]
    Approx(ApproxCmd),
    /// Typing normal forms.
    #[command(subcommand)]
    Nf(NfCmd),
    /// The golden fixture corpus.
    Fixtures {
        /// Rewrite the fixture files.
        #[arg(long, conflicts_with = "check")]
        regen: bool,
        /// Compare the fixture files with a fresh build.
        #[arg(long)]
        check: bool,
        /// Fixture directory (defaults to the library crate's `fixtures/`).
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DerivArg {
    /// Derivation file (JSON).
    #[arg(long)]
    deriv: PathBuf,
}

#[derive(Subcommand)]
enum R0Cmd {
    /// Validate a derivation.
    Check {
        #[command(flatten)]
        d: DerivArg,
        /// Term the derivation must type (defaults to the one it records).
        #[arg(long)]
        term: Option<String>,
    },
    /// Type a head-normalising term by typing its head normal form.
    HnfType {
        /// Term text, or a file containing it.
        term: String,
        /// Step budget.
        #[arg(long, default_value_t = 100)]
        fuel: usize,
        /// Atom for the head-normal-form typing.
        #[arg(long, default_value = "o")]
        atom: String,
    },
    /// Reduce the subject at a redex and transport the derivation.
    Reduce {
        #[command(flatten)]
        d: DerivArg,
        /// Redex position.
        #[arg(long)]
        at: Pos,
    },
    /// Expand a derivation of the reduct of `--target-term` at `--at`.
    Expand {
        #[command(flatten)]
        d: DerivArg,
        /// Redex position.
        #[arg(long)]
        at: Pos,
        /// The term before the step (text or file).
        #[arg(long)]
        target_term: String,
    },
    /// Expand a derivation of a path's limit back to its start.
    ExpandInfty {
        #[command(flatten)]
        d: DerivArg,
        /// Path file: `{"term": …, "strategy": …, "fuel": …}` or `{"term": …, "redexes": […]}`.
        #[arg(long)]
        path: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyName {
    Memo,
    Graded,
}

impl PolicyName {
    fn build(self) -> TrackPolicy {
        match self {
            PolicyName::Memo => TrackPolicy::memo(),
            PolicyName::Graded => TrackPolicy::graded(),
        }
    }
}

#[derive(Subcommand)]
enum SCmd {
    /// Validate a derivation and report quantitativity.
    Check {
        #[command(flatten)]
        d: DerivArg,
    },
    /// Deterministic reduction at a redex.
    Reduce {
        #[command(flatten)]
        d: DerivArg,
        /// Redex position.
        #[arg(long)]
        at: Pos,
    },
    /// Uniform expansion of a derivation of the reduct.
    Expand {
        #[command(flatten)]
        d: DerivArg,
        /// Redex position.
        #[arg(long)]
        at: Pos,
        /// The term before the step (text or file).
        #[arg(long)]
        target_term: String,
        /// Track policy for created axioms.
        #[arg(long, value_enum, default_value = "memo")]
        policy: PolicyName,
    },
    /// Residuals of positions under reduction at `--at`.
    Residual {
        #[command(flatten)]
        d: DerivArg,
        /// Redex position.
        #[arg(long)]
        at: Pos,
        /// One position; all of the support when omitted.
        #[arg(long)]
        pos: Option<Pos>,
    },
    /// Collapse to an R0 derivation.
    Collapse {
        #[command(flatten)]
        d: DerivArg,
    },
    /// Lift an R0 derivation.
    Lift {
        #[command(flatten)]
        d: DerivArg,
        /// Track policy for created axioms.
        #[arg(long, value_enum, default_value = "memo")]
        policy: PolicyName,
    },
}

#[derive(Subcommand)]
enum ApproxCmd {
    /// Whether `A ≤ B`.
    Leq { a: PathBuf, b: PathBuf },
    /// Join of pairwise compatible derivations.
    Join {
        /// Derivation files (JSON).
        #[arg(required = true)]
        ds: Vec<PathBuf>,
    },
    /// Meet of derivations typing the same term.
    Meet {
        /// Derivation files (JSON).
        #[arg(required = true)]
        ds: Vec<PathBuf>,
    },
    /// Least family member containing some bipositions.
    Find {
        /// One biposition per line, `(a, c)` or `(a, x, c)`.
        #[arg(long)]
        bipositions: PathBuf,
        /// `nf:TERM` for the rank truncations of a normal form, or
        /// `files:A,B,…` for a recorded family.
        #[arg(long)]
        family: String,
        /// Largest member index tried.
        #[arg(long, default_value_t = 16)]
        max: u64,
    },
    /// Infinitary expansion of a recorded family along a path.
    ExpandInfty {
        /// `files:A,B,…`
        #[arg(long)]
        family: String,
        #[arg(long)]
        path: PathBuf,
    },
}

#[derive(Subcommand)]
enum NfCmd {
    /// Natural extension of a rank-bounded support candidate.
    Type {
        /// Normal form, as text or a file.
        #[arg(long)]
        term: String,
        /// Rank bound of the truncation.
        #[arg(long)]
        rank: u64,
        /// JSON object from unconstrained positions to S-types; the key
        /// `*` gives a default. Every unconstrained position gets `o`
        /// when omitted.
        #[arg(long)]
        assign: Option<PathBuf>,
    },
}

/// A rejected input: reported on stderr, exit status 1.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

type Out = Result<(String, Value), Failure>;

fn fail<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok((text, value)) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&value).expect("JSON values serialize"));
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Cmd) -> Out {
    match cmd {
        Cmd::Reduce { term, strategy, fuel, trace } => reduce(&read_term(&term)?, strategy, fuel, trace),
        Cmd::Bohm { term, depth, fuel } => {
            let b = bohm_prefix(&read_term(&term)?, depth, fuel)?;
            Ok((format!("{b}\n{}", b.indented()), json!({ "text": b.to_string(), "tree": b })))
        }
        Cmd::R0(c) => r0(c),
        Cmd::S(c) => s(c),
        Cmd::Approx(c) => approx_cmd(c),
        Cmd::Nf(NfCmd::Type { term, rank, assign }) => nf_type(&read_term(&term)?, rank, assign),
        Cmd::Fixtures { regen, check, dir } => fixtures_cmd(regen, check, dir),
    }
}

fn reduce(t: &Term, strategy: Strategy, fuel: usize, trace: bool) -> Out {
    let path = run_path(t, strategy, fuel)?;
    let mut text = String::new();
    let mut steps = Vec::new();
    for (i, st) in path.steps.iter().enumerate() {
        let redexes: Vec<String> = st.redexes.iter().map(ToString::to_string).collect();
        if trace {
            text.push_str(&format!("{:>3}  depth {}  at {}  {}\n", i + 1, st.depth, redexes.join(" "), print_term(&st.result)));
        }
        steps.push(json!({ "redexes": redexes, "depth": st.depth, "term": print_term(&st.result) }));
    }
    let last = print_term(path.last_term());
    let end = serde_json::to_value(path.end)?;
    text.push_str(&format!("{last}\n{} steps, {}\n", path.steps.len(), end.as_str().unwrap_or_default()));
    let mut v = json!({ "start": print_term(t), "strategy": path.strategy, "steps": path.steps.len(), "end": end, "result": last });
    if trace {
        v["trace"] = Value::Array(steps);
    }
    Ok((text, v))
}

fn r0_conclusion(d: &R0Derivation) -> String {
    format!("{} ⊢ {}", show_ctx(&d.ctx), d.ty)
}

fn r0_out(d: &R0Derivation, t: &Term) -> Out {
    let js: Value = serde_json::from_str(&r0_to_json(d, t))?;
    Ok((format!("{}\nsize {}\n", r0_conclusion(d), d.size()), js))
}

fn s_conclusion(d: &SDerivation) -> String {
    let (c, t) = d.conclusion();
    format!("{c} ⊢ {t}")
}

fn s_out(d: &SDerivation) -> Out {
    let js: Value = serde_json::from_str(&s_to_json(d))?;
    Ok((format!("{}\n{}", s_conclusion(d), d.render()), js))
}

fn r0(c: R0Cmd) -> Out {
    match c {
        R0Cmd::Check { d, term } => {
            let (recorded, deriv) = load_r0(&d.deriv)?;
            let t = match term {
                Some(s) => read_term(&s)?,
                None => recorded,
            };
            match check_r0(&deriv, &t) {
                Ok(()) => Ok((
                    format!("ok: {}\n", r0_conclusion(&deriv)),
                    json!({ "valid": true, "conclusion": r0_conclusion(&deriv), "size": deriv.size() }),
                )),
                Err(es) => fail(es.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")),
            }
        }
        R0Cmd::HnfType { term, fuel, atom } => {
            let t = read_term(&term)?;
            let (d, _) = type_by_head_transport(&t, fuel, &RType::atom(&atom))?;
            r0_out(&d, &t)
        }
        R0Cmd::Reduce { d, at } => {
            let (t, deriv) = load_r0(&d.deriv)?;
            let r = subject_reduce_r0(&deriv, &t, &at, None)?;
            let (text, mut v) = r0_out(&r.deriv, &r.term)?;
            let typed = r.contractions.len();
            v["contractions"] = json!(typed);
            Ok((format!("{text}size {} -> {}, {typed} typed contraction(s)\n", deriv.size(), r.deriv.size()), v))
        }
        R0Cmd::Expand { d, at, target_term } => {
            let (t2, deriv) = load_r0(&d.deriv)?;
            let t = read_term(&target_term)?;
            r0_out(&subject_expand_r0(&deriv, &t2, &at, &t)?, &t)
        }
        R0Cmd::ExpandInfty { d, path } => {
            let (t2, deriv) = load_r0(&d.deriv)?;
            let p = read_path(&path)?;
            let out = infinitary_expand_r0(&deriv, &t2, &p)?;
            r0_out(&out, &p.start)
        }
    }
}

fn s(c: SCmd) -> Out {
    match c {
        SCmd::Check { d } => {
            let deriv = load_s(&d.deriv)?;
            match check_s(&deriv) {
                Ok(()) => {
                    let q = is_quantitative(&deriv);
                    Ok((
                        format!("ok: {}\nquantitative: {q}\n", s_conclusion(&deriv)),
                        json!({ "valid": true, "quantitative": q, "conclusion": s_conclusion(&deriv), "size": deriv.size() }),
                    ))
                }
                Err(es) => fail(es.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")),
            }
        }
        SCmd::Reduce { d, at } => s_out(&reduce_s(&load_s(&d.deriv)?, &at)?),
        SCmd::Expand { d, at, target_term, policy } => {
            let deriv = load_s(&d.deriv)?;
            s_out(&expand_s(&deriv, &at, &read_term(&target_term)?, &mut policy.build())?)
        }
        SCmd::Residual { d, at, pos } => {
            let deriv = load_s(&d.deriv)?;
            let alphas: Vec<Pos> = match pos {
                Some(p) => vec![p],
                None => deriv.support().into_iter().collect(),
            };
            let mut text = String::new();
            let mut rows = Vec::new();
            for a in alphas {
                let (shown, v) = match residual_position(&deriv, &at, &a)? {
                    Ok(r) => (r.to_string(), json!({ "position": a.to_string(), "residual": r.to_string() })),
                    Err(u) => (format!("undefined ({u:?})"), json!({ "position": a.to_string(), "undefined": format!("{u:?}") })),
                };
                text.push_str(&format!("{a} ↦ {shown}\n"));
                rows.push(v);
            }
            Ok((text, Value::Array(rows)))
        }
        SCmd::Collapse { d } => {
            let deriv = load_s(&d.deriv)?;
            r0_out(&collapse_s_to_multiset(&deriv)?, deriv.term())
        }
        SCmd::Lift { d, policy } => {
            let (t, deriv) = load_r0(&d.deriv)?;
            s_out(&lift_r0_to_s(&deriv, &t, &mut policy.build())?)
        }
    }
}

fn recorded_family(arg: &str) -> Result<Vec<SDerivation>, Failure> {
    let Some(files) = arg.strip_prefix("files:") else {
        return fail(format!("family `{arg}` is not of the form files:A,B,…"));
    };
    files.split(',').map(|f| load_s(&PathBuf::from(f.trim()))).collect()
}

fn approx_cmd(c: ApproxCmd) -> Out {
    match c {
        ApproxCmd::Leq { a, b } => {
            let r = approx::leq_approx(&load_s(&a)?, &load_s(&b)?)?;
            Ok((format!("{r}\n"), json!({ "leq": r })))
        }
        ApproxCmd::Join { ds } => s_out(&approx::join(&ds.iter().map(|p| load_s(p)).collect::<Result<Vec<_>, _>>()?)?),
        ApproxCmd::Meet { ds } => s_out(&approx::meet(&ds.iter().map(|p| load_s(p)).collect::<Result<Vec<_>, _>>()?)?),
        ApproxCmd::Find { bipositions, family, max } => {
            let bs = read_text(&bipositions)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| l.parse::<Bipos>())
                .collect::<Result<BTreeSet<_>, _>>()?;
            let mut fam: Box<dyn Family> = match family.strip_prefix("nf:") {
                Some(term) => {
                    Box::new(NfFamily { generator: unforgetful_nf_typing(&read_term(term)?)?, policy: TrackPolicy::graded() })
                }
                None => Box::new(RecordedFamily(recorded_family(&family)?)),
            };
            let found = find_finite_approximant(fam.as_mut(), &bs, max)?;
            let (text, js) = s_out(&found.derivation)?;
            Ok((format!("member {}\n{text}", found.index), json!({ "index": found.index, "derivation": js })))
        }
        ApproxCmd::ExpandInfty { family, path } => {
            let fam = recorded_family(&family)?;
            let p = read_path(&path)?;
            let out = expand_infinitary(&fam, &p, &mut TrackPolicy::memo())?;
            let mut text = String::new();
            let mut docs = Vec::new();
            for (i, d) in out.iter().enumerate() {
                let (t, js) = s_out(d)?;
                text.push_str(&format!("member {i}\n{t}"));
                docs.push(js);
            }
            Ok((text, Value::Array(docs)))
        }
    }
}

fn nf_type(t: &Term, rank: u64, assign: Option<PathBuf>) -> Out {
    let ext = match assign {
        None => rank_truncate(&unforgetful_nf_typing(t)?, rank, &mut TrackPolicy::graded())?,
        Some(file) => {
            let cand = SupportCandidate::upto_rank(t, &[2], rank);
            let table = input::read_assignment(&file)?;
            let mut map = std::collections::BTreeMap::new();
            for a in cand.unconstrained() {
                let ty = table.get(&Some(a.clone())).or_else(|| table.get(&None)).cloned();
                if let Some(ty) = ty {
                    map.insert(a, ty);
                }
            }
            natural_extension(&cand, &map, &mut TrackPolicy::graded())?
        }
    };
    s_out(ext.derivation())
}

fn default_fixture_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../infinitary/fixtures"))
}

fn fixtures_cmd(regen: bool, check: bool, dir: Option<PathBuf>) -> Out {
    let dir = dir.unwrap_or_else(default_fixture_dir);
    let corpus = fixtures::corpus();
    let names: Vec<&str> = corpus.iter().map(|(n, _)| n.as_str()).collect();
    if regen {
        std::fs::create_dir_all(&dir)?;
        for (name, body) in &corpus {
            std::fs::write(dir.join(name), body)?;
        }
        return Ok((format!("wrote {} files to {}\n", corpus.len(), dir.display()), json!({ "written": names })));
    }
    if check {
        let stale: Vec<&str> = corpus
            .iter()
            .filter(|(name, body)| std::fs::read_to_string(dir.join(name)).ok().as_deref() != Some(body.as_str()))
            .map(|(n, _)| n.as_str())
            .collect();
        if !stale.is_empty() {
            return fail(format!("fixtures differ from a fresh build: {}", stale.join(", ")));
        }
        return Ok((format!("{} fixtures up to date\n", corpus.len()), json!({ "up_to_date": names })));
    }
    Ok((names.iter().map(|n| format!("{n}\n")).collect(), json!({ "fixtures": names })))
}
