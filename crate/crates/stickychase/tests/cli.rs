#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::PathBuf;

use common::*;
use proptest::prelude::*;
use stickychase::cli::{run, EXIT_IO, EXIT_NO, EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION};
use stickychase::*;
use stickychase_core::rules_equal_modulo_renaming;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("stickychase").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn chase_golden() {
    let (code, out, _) = cli(&["chase", &fixture("example1.dlp"), "--max-atoms", "6"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        out,
        "r(a,b).\nr(b,ζ1).\nr(ζ1,ζ2).\ns(a,b,ζ1).\nr(ζ2,ζ3).\ns(b,ζ1,ζ2).\n% status: budget_exhausted\n"
    );
}

#[test]
fn chase_json_is_stable() {
    let args = [
        "chase",
        &fixture("example1.dlp"),
        "--max-atoms",
        "3",
        "--format",
        "json",
    ];
    let (_, a, _) = cli(&args);
    let (_, b, _) = cli(&args);
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["status"], "budget_exhausted");
    assert_eq!(
        v["atoms"],
        serde_json::json!(["r(a,b)", "r(b,ζ1)", "r(ζ1,ζ2)"])
    );
}

#[test]
fn classify_golden() {
    let (code, out, _) = cli(&["classify", &fixture("example8.dlp")]);
    assert_eq!(code, EXIT_OK);
    let head: Vec<&str> = out.lines().take(6).collect();
    assert_eq!(
        head,
        [
            "sticky: no",
            "weakly_acyclic: no",
            "weakly_sticky: no",
            "jws: yes",
            "finite_rank_positions: u[1]",
            "finite_existential_positions: p[1] p[2] r[1] r[2] u[1]",
        ]
    );
    assert!(out.contains("not weakly_sticky (rule 2): Y1"));
}

#[test]
fn classify_json_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let (code, out, _) = cli(&[
        "classify",
        &fixture("example5.dlp"),
        "--format",
        "json",
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["sticky"], false);
    assert_eq!(v["weakly_sticky"], true);
    let g = fs::read_to_string(dot).unwrap();
    assert!(g.starts_with("digraph"));
}

#[test]
fn rewrite_golden() {
    let (code, out, _) = cli(&[
        "rewrite",
        &fixture("example10.dlp"),
        "--query-file",
        &fixture("example10.query"),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        out,
        "% query: ?() <- p__bf(a,Y).
u(a).
r(a,b).
mg_p__bf(a).

mg_p__bf(X), r__bf(X,Y), r__bf(Y,Z) -> p__bf(X,Z).
mg_r__bf(Y), u(Y), r__fb(X,Y) -> exists Z. r__bf(Y,Z).
mg_p__bf(X) -> mg_r__bf(X).
mg_p__bf(X), r__bf(X,Y) -> mg_r__bf(Y).
mg_r__bf(Y), u(Y) -> mg_r__fb(Y).
mg_r__bf(X1), r(X1,X2) -> r__bf(X1,X2).
mg_r__fb(X2), r(X1,X2) -> r__fb(X1,X2).
"
    );
}

#[test]
fn rewritten_program_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.dlp");
    let (code, _, _) = cli(&[
        "rewrite",
        &fixture("example13.dlp"),
        "--query-file",
        &fixture("example13.query"),
        "--merge-magic",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let p = parse_program(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(p.rules.len(), 7);
    let (code, out, _) = cli(&["classify", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("weakly_sticky: no\njws: yes"));
}

#[test]
fn query_exit_codes() {
    let (code, out, _) = cli(&[
        "query",
        &fixture("example9.dlp"),
        "--query-file",
        &fixture("example9.query"),
        "--selection",
        "rank",
    ]);
    assert_eq!((code, out.as_str()), (EXIT_OK, "yes\n"));
    let (code, out, _) = cli(&[
        "query",
        &fixture("example10.dlp"),
        "--query-file",
        &fixture("example10.query"),
    ]);
    assert_eq!((code, out.as_str()), (EXIT_NO, "no\n"));
    let (code, _, err) = cli(&[
        "query",
        &fixture("example8.dlp"),
        "--query",
        "?() <- p(a,Y).",
        "--selection",
        "rank",
    ]);
    assert_eq!(code, EXIT_PRECONDITION);
    assert!(err.contains("--force"));
    let (code, _, _) = cli(&[
        "query",
        &fixture("example8.dlp"),
        "--query",
        "?() <- p(a,Y).",
        "--selection",
        "rank",
        "--force",
    ]);
    assert_eq!(code, EXIT_NO);
}

#[test]
fn query_tuples_and_rewrite_first_agree() {
    let base = [
        "query",
        &fixture("example4_p2.dlp"),
        "--query",
        "?(X,Y) <- p(X,Y).",
    ];
    let (code, plain, _) = cli(&base);
    assert_eq!(code, EXIT_OK);
    assert_eq!(plain, "b,c\n");
    let mut args = base.to_vec();
    args.push("--rewrite-first");
    let (_, rewritten, _) = cli(&args);
    assert_eq!(plain, rewritten);
}

#[test]
fn query_trace_is_json_lines() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("log.jsonl");
    let (code, _, _) = cli(&[
        "query",
        &fixture("example9.dlp"),
        "--query-file",
        &fixture("example9.query"),
        "--selection",
        "rank",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(trace).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let _: serde_json::Value = serde_json::from_str(line).unwrap();
    }
}

#[test]
fn check_verdicts() {
    let (_, out, _) = cli(&["check", &fixture("example4_p1.dlp")]);
    assert_eq!(
        out,
        "violation at step 1: rule 1, variable Y, value b is missing from u(c)\n"
    );
    let (_, out, _) = cli(&["check", &fixture("example4_p2.dlp"), "--steps", "10"]);
    assert_eq!(out, "no_violation_up_to 10\n");
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.dlp");
    fs::write(&bad, "p(a).\nq(X) -> r(X\n").unwrap();
    let (code, _, err) = cli(&["classify", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("bad.dlp:3:1:"), "{}", err);
    let (code, _, _) = cli(&["classify", dir.path().join("missing.dlp").to_str().unwrap()]);
    assert_eq!(code, EXIT_IO);
    let (code, _, _) = cli(&["bogus"]);
    assert_eq!(code, EXIT_PARSE);
    let (code, _, _) = cli(&["chase", &fixture("example1.dlp"), "--max-atoms", "0"]);
    assert_eq!(code, EXIT_PARSE);
}

#[test]
fn facts_files() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("p.dlp");
    fs::write(&prog, "q(X) -> r(X).\n").unwrap();
    let good = dir.path().join("q.tsv");
    fs::write(&good, "a\n\"b c\"\n").unwrap();
    let spec = format!("q/1={}", good.display());
    let (code, out, _) = cli(&["chase", prog.to_str().unwrap(), "--facts", &spec]);
    assert_eq!(code, EXIT_OK);
    assert!(
        out.contains("r(a).") && out.contains("r(\"b c\")."),
        "{}",
        out
    );
    let wide = dir.path().join("w.csv");
    fs::write(&wide, "a,b\n").unwrap();
    let (code, _, err) = cli(&[
        "chase",
        prog.to_str().unwrap(),
        "--facts",
        &format!("q/1={}", wide.display()),
    ]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("line 1"));
    let (code, _, _) = cli(&["chase", prog.to_str().unwrap(), "--facts", "q/1"]);
    assert_eq!(code, EXIT_PARSE);
    let (code, _, _) = cli(&[
        "chase",
        prog.to_str().unwrap(),
        "--facts",
        "q/1=/nonexistent/q.csv",
    ]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn facts_loader_delimiters() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("e.tsv");
    fs::write(&f, "a\tb\nc\td\n").unwrap();
    let got = load_facts_delimited(&f, "e", 2, b'\t').unwrap();
    assert_eq!(got, atoms("e(a,b), e(c,d)"));
    match load_facts_delimited(&f, "e", 3, b'\t') {
        Err(FactsError::RowArityMismatch {
            line,
            expected,
            found,
        }) => assert_eq!((line, expected, found), (1, 3, 2)),
        other => panic!("{:?}", other),
    }
}

#[test]
fn diagnostics_carry_spans() {
    let err = parse_program("p(a).\np(a,b).\n").unwrap_err();
    assert_eq!(err.0[0].kind, DiagnosticKind::ArityConflict);
    assert_eq!((err.0[0].span.line, err.0[0].span.column), (2, 1));
    let err = parse_program("p(X).\n").unwrap_err();
    assert_eq!(err.0[0].kind, DiagnosticKind::NonGroundFact);
    let err = parse_program("p(X) -> q(Y).\n").unwrap_err();
    assert_eq!(err.0[0].kind, DiagnosticKind::UnsafeHeadVariable);
    let err = parse_query("?(W) <- p(X).").unwrap_err();
    assert_eq!(err.0[0].kind, DiagnosticKind::AnswerVarNotInBody);
    let err = parse_program("p(a) q(b).").unwrap_err();
    assert_eq!(err.0[0].kind, DiagnosticKind::Syntax);
    assert_eq!(err.0[0].span.line, 1);
}

#[test]
fn fixtures_parse_to_the_worked_programs() {
    let p = parse_program(&fs::read_to_string(fixture("example8.dlp")).unwrap()).unwrap();
    assert_eq!(p.rules.len(), 2);
    assert!(rules_equal_modulo_renaming(&p.rules, &rules(&EXAMPLE8)));
    assert!(p.facts.is_empty());
    let q = parse_query(&fs::read_to_string(fixture("example13.query")).unwrap()).unwrap();
    assert_eq!(q.body, atoms("r(Y,a)"));
    assert!(q.answer_vars.is_empty());
}

proptest! {
    #![proptest_config(cases(500))]

    #[test]
    fn render_parse_round_trip(seed in any::<u64>()) {
        let p = gen_program(&mut rng(seed), &GenConfig::default());
        let text = render_program(&p);
        let back = parse_program(&text).unwrap();
        prop_assert!(rules_equal_modulo_renaming(&p.rules, &back.rules), "{}", text);
        prop_assert_eq!(&p.facts, &back.facts);
        prop_assert_eq!(render_program(&back), text);
    }
}
