use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_infinitary"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../infinitary/fixtures").join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, body: &str) -> String {
    let dir = std::env::temp_dir().join(format!("infinitary-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let o = run(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["reduce", "--strategy", "sideways", "x"]).status.code(), Some(2));
    assert_eq!(run(&["r0", "check"]).status.code(), Some(2));
}

#[test]
fn bohm_of_the_curry_fixpoint() {
    let o = run(&["bohm", "--depth", "3", "--fuel", "50", "fix X.(\\x. f (x x))(\\x. f (x x))"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "f (f (f ?))\nf\n  f\n    f\n      ?\n");
    let o = run(&["--json", "bohm", "--depth", "2", "(\\x. x x)(\\x. x x)"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tree"]["kind"], "bottom");
    assert_eq!(v["tree"]["why"], "loop");
}

#[test]
fn reduce_reports_steps() {
    let o = run(&["--json", "reduce", "--strategy", "head", "--fuel", "10", "(\\x. x) y"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"], "y");
    assert_eq!(v["steps"], 1);
    assert_eq!(v["end"], "normal-form");
}

#[test]
fn r0_check_against_a_term_file() {
    let term = scratch("fw.lam", "fix X. f X\n");
    let o = run(&["r0", "check", "--deriv", &fixture("pi_prime_1.r0.json"), "--term", &term]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // Π_1 types cu_f, not f^∞.
    assert_eq!(run(&["r0", "check", "--deriv", &fixture("pi_1.r0.json"), "--term", &term]).status.code(), Some(1));
}

#[test]
fn schema_violations_are_domain_errors() {
    let empty = scratch("empty.json", "");
    assert_eq!(run(&["s", "check", "--deriv", &empty]).status.code(), Some(1));
    assert_eq!(run(&["s", "check", "--deriv", &fixture("pi_1.r0.json")]).status.code(), Some(1));
    assert_eq!(run(&["s", "check", "--deriv", &fixture("p_tilde_prime_rank5.s.json")]).status.code(), Some(1));
}

#[test]
fn s_check_reports_quantitativity() {
    let o = run(&["--json", "s", "check", "--deriv", &fixture("p_ex.s.json")]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["quantitative"], true);
    assert_eq!(v["size"], 6);
}

#[test]
fn s_reduce_then_expand_round_trips() {
    let pi2 = fixture("pi_2.s.json");
    let o = run(&["--json", "s", "reduce", "--deriv", &pi2, "--at", ""]);
    assert_eq!(o.status.code(), Some(0));
    let reduct = scratch("reduct.s.json", &stdout(&o));
    let o = run(&["s", "residual", "--deriv", &pi2, "--at", "", "--pos", "10"]);
    assert_eq!(stdout(&o), "10 ↦ ε\n");
    let o = run(&["--json", "s", "expand", "--deriv", &reduct, "--at", "", "--target-term", "(\\x. f (x x))(\\x. f (x x))"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let back = scratch("back.s.json", &stdout(&o));
    let o = run(&["--json", "s", "check", "--deriv", &back]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["size"], 9);
    assert_eq!(v["conclusion"], "f: (2:(2:o) -> o, 3:() -> o) ⊢ o");
}

#[test]
fn approx_commands() {
    let (p1, p2, p3) = (fixture("pi_prime_1.s.json"), fixture("pi_prime_2.s.json"), fixture("pi_prime_3.s.json"));
    assert_eq!(stdout(&run(&["approx", "leq", &p1, &p2])), "true\n");
    assert_eq!(stdout(&run(&["approx", "leq", &p3, &p2])), "false\n");
    let o = run(&["--json", "approx", "join", &p1, &p2, &p3]);
    let joined = scratch("join.s.json", &stdout(&o));
    assert_eq!(std::fs::read_to_string(&joined).unwrap().trim(), std::fs::read_to_string(&p3).unwrap().trim());
    let bs = scratch("b.txt", "# the frontier of P_2\n(22, ε)\n(1, 1)\n");
    let o = run(&["--json", "approx", "find", "--bipositions", &bs, "--family", "nf:fix X. f X"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["index"], 2);
    let path = scratch("path.json", r#"{"term": "(\\x. f (x x))(\\x. f (x x))", "strategy": "hh", "fuel": 12}"#);
    let o = run(&["--json", "approx", "expand-infty", "--family", &format!("files:{p1},{p2}"), "--path", &path]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn r0_expansion_commands() {
    let path = scratch("path0.json", r#"{"term": "(\\x. f (x x))(\\x. f (x x))", "fuel": 12}"#);
    let o = run(&["r0", "expand-infty", "--deriv", &fixture("pi_prime_2.r0.json"), "--path", &path]);
    assert_eq!(stdout(&o), "f: [[] -> o, [o] -> o] ⊢ o\nsize 9\n");
    let o = run(&["--json", "r0", "hnf-type", "\\x. x ((\\y. y) z)"]);
    assert_eq!(o.status.code(), Some(0));
    let d = scratch("hnf.r0.json", &stdout(&o));
    assert_eq!(run(&["r0", "check", "--deriv", &d]).status.code(), Some(0));
    assert_eq!(run(&["r0", "hnf-type", "(\\x. x x)(\\x. x x)", "--fuel", "5"]).status.code(), Some(1));
}

#[test]
fn nf_type_with_an_assignment() {
    let o = run(&["nf", "type", "--term", "\\x. x (\\y. y)", "--rank", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let assign = scratch("assign.json", r#"{"*": "o'"}"#);
    let o = run(&["--json", "nf", "type", "--term", "\\x. x (\\y. y)", "--rank", "1", "--assign", &assign]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let missing = scratch("none.json", "{}");
    let o = run(&["nf", "type", "--term", "\\x. x (\\y. y)", "--rank", "1", "--assign", &missing]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn fixtures_are_up_to_date() {
    let o = run(&["fixtures", "--check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = std::env::temp_dir().join(format!("infinitary-regen-{}", std::process::id()));
    let d = dir.to_string_lossy().into_owned();
    assert_eq!(run(&["fixtures", "--regen", "--dir", &d]).status.code(), Some(0));
    let first: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    assert_eq!(run(&["fixtures", "--regen", "--dir", &d]).status.code(), Some(0));
    for (name, body) in first {
        assert_eq!(std::fs::read(dir.join(&name)).unwrap(), body, "{name}");
        assert_eq!(std::fs::read(fixture(&name)).unwrap(), body, "{name}");
    }
}
