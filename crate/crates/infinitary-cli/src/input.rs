//! Reading terms, derivations, paths and assignments from the command line.

use std::collections::BTreeMap;
use std::path::{Path as FsPath, PathBuf};

use serde::Deserialize;

use infinitary::json::{parse_r0, parse_s};
use infinitary::pos::Pos;
use infinitary::r0::R0Derivation;
use infinitary::reduction::{run_path, Path, Strategy};
use infinitary::sderiv::SDerivation;
use infinitary::stype::{parse_stype, SType};
use infinitary::term::{parse_term, Term};

use crate::Failure;

pub fn read_text(p: &FsPath) -> Result<String, Failure> {
    std::fs::read_to_string(p).map_err(|e| Failure(format!("{}: {e}", p.display())))
}

/// `arg` names a file holding the term, or is the term itself.
pub fn read_term(arg: &str) -> Result<Term, Failure> {
    let p = PathBuf::from(arg);
    let src = if p.is_file() { read_text(&p)? } else { arg.to_string() };
    parse_term(src.trim()).map_err(|e| Failure(format!("term: {e}")))
}

pub fn load_r0(p: &FsPath) -> Result<(Term, R0Derivation), Failure> {
    parse_r0(&read_text(p)?).map_err(|e| Failure(format!("{}: {e}", p.display())))
}

pub fn load_s(p: &FsPath) -> Result<SDerivation, Failure> {
    parse_s(&read_text(p)?).map_err(|e| Failure(format!("{}: {e}", p.display())))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathFile {
    term: String,
    #[serde(default)]
    strategy: Option<String>,
    #[serde(default)]
    fuel: Option<usize>,
    #[serde(default)]
    redexes: Option<Vec<Pos>>,
}

/// A recorded path: either a strategy run or an explicit redex sequence.
pub fn read_path(p: &FsPath) -> Result<Path, Failure> {
    let f: PathFile = serde_json::from_str(&read_text(p)?)?;
    let t = read_term(&f.term)?;
    match (f.redexes, f.strategy) {
        (Some(rs), None) => Ok(Path::from_positions(t, &rs)?),
        (None, s) => {
            let strategy: Strategy = s.as_deref().unwrap_or("hh").parse().map_err(Failure)?;
            Ok(run_path(&t, strategy, f.fuel.unwrap_or(20))?)
        }
        (Some(_), Some(_)) => Err(Failure("path file gives both redexes and a strategy".into())),
    }
}

/// Position → type table; the key `*` maps to `None`, the default.
pub fn read_assignment(p: &FsPath) -> Result<BTreeMap<Option<Pos>, SType>, Failure> {
    let raw: BTreeMap<String, String> = serde_json::from_str(&read_text(p)?)?;
    raw.into_iter()
        .map(|(k, v)| {
            let key = if k == "*" { None } else { Some(k.parse::<Pos>()?) };
            Ok((key, parse_stype(&v)?))
        })
        .collect()
}
