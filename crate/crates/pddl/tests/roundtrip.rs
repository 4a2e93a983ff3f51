mod common;

use induct_pddl::*;

fn head_kind(text: &str) -> (&'static str, Option<String>) {
    let lower = text.to_lowercase();
    if lower.contains("(domain ") && !lower.contains("(problem ") {
        return ("domain", None);
    }
    let start = lower.find("(:domain").expect("problem names its domain") + "(:domain".len();
    let rest = &lower[start..];
    let name = rest.trim_start().split(|c: char| c == ')' || c.is_whitespace()).next().unwrap();
    ("problem", Some(name.to_string()))
}

#[test]
fn corpus_is_large_and_covers_connectors() {
    let corpus = common::corpus();
    assert!(corpus.len() >= 20, "corpus has {} files", corpus.len());
    let all: String = corpus.values().map(|t| t.to_lowercase()).collect();
    for construct in ["(or ", "(when ", "(exists "] {
        assert!(all.contains(construct), "corpus lacks {construct}");
    }
}

#[test]
fn parse_print_parse_is_identity_on_corpus() {
    let mut failures = Vec::new();
    for (file, text) in common::corpus() {
        let result = match head_kind(&text) {
            ("domain", _) => parse_domain(&text).and_then(|d| {
                let printed = print_domain(&d);
                let again = parse_domain(&printed)?;
                Ok((d == again, print_domain(&again) == printed))
            }),
            (_, Some(dname)) => {
                let d = common::domain(&dname);
                parse_problem(&text, &d).and_then(|p| {
                    let printed = print_problem(&p);
                    let again = parse_problem(&printed, &d)?;
                    Ok((p == again, print_problem(&again) == printed))
                })
            }
            _ => unreachable!(),
        };
        match result {
            Ok((true, true)) => {}
            Ok(eq) => failures.push(format!("{file}: structural/text equality {eq:?}")),
            Err(e) => failures.push(format!("{file}: {e}")),
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn blocksworld_has_four_actions() {
    let d = common::blocksworld();
    let names: Vec<_> = d.actions.iter().map(|a| a.name.to_string()).collect();
    assert_eq!(names, ["pickup", "putdown", "stack", "unstack"]);
}

#[test]
fn domain_without_actions() {
    let d = parse_domain("(define (domain d) (:predicates (p ?x)) )").unwrap();
    assert!(d.actions.is_empty());
    assert_eq!(d.predicates.len(), 1);
}

#[test]
fn identifiers_are_case_insensitive() {
    let d = common::domain("comments-case");
    assert_eq!(d.name.as_str(), "comments-case");
    assert!(d.action("FIRE").is_some());
    assert!(print_domain(&d).contains("(:action fire"));
}

#[test]
fn printing_is_deterministic_and_sorted() {
    let d = common::blocksworld();
    let p = common::problem(&d, "bw-task1");
    let text = print_problem(&p);
    assert_eq!(text, print_problem(&p));
    let init: Vec<&str> = text.lines().filter(|l| l.trim_start().starts_with("(on") || l.contains("(clear") || l.contains("(arm")).collect();
    let mut sorted = init.clone();
    sorted.sort();
    assert_eq!(init, sorted);
}

#[test]
fn parse_errors() {
    assert!(matches!(
        parse_domain("(define (domain d) (:predicates (p ?x - ghost)))"),
        Err(PddlError::UnknownType(_))
    ));
    assert!(matches!(
        parse_domain("(define (domain d) (:predicates (p ?x)) (:action a :effect (p)))"),
        Err(PddlError::PredicateArity { .. })
    ));
    assert!(matches!(
        parse_domain("(define (domain d) (:predicates (p)) (:action a :effect (p)) (:action A :effect (p)))"),
        Err(PddlError::DuplicateAction(_))
    ));
}
