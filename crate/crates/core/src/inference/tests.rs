use super::*;
use crate::check::check;
use crate::lang::parse_kb;

fn kb(src: &str) -> (TypedKB, PartialStructure) {
    let tkb = check(&parse_kb(src).unwrap()).unwrap();
    let voc = tkb.kb.vocabularies[0].name.clone();
    let s = PartialStructure::initial(&tkb, &voc).unwrap();
    (tkb, s)
}

fn with(s: &PartialStructure, facts: &[(&str, &str)]) -> PartialStructure {
    let mut s = s.clone();
    for (t, v) in facts {
        let term = s.parse_term(t).unwrap();
        let value = s.parse_value(&term, v).unwrap();
        s = s.assert_fact(term, value).unwrap();
    }
    s
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn status_of(gt: &GroundTheory, c: &Consequences, text: &str) -> Option<bool> {
    let i = gt.atoms.iter().position(|a| a.text == text).unwrap_or_else(|| panic!("no atom {text}"));
    c.atoms[i]
}

const VOTING: &str = "vocabulary V { type Age := {0..120} age: () -> Age vote: () -> Bool }
                      theory T:V { vote() <=> 18 =< age(). }";

#[test]
fn model_check_examples() {
    let (tkb, s) = kb(VOTING);
    assert!(model_check(&tkb, &s, &cfg()).unwrap());
    let bad = with(&s, &[("vote()", "true"), ("age()", "17")]);
    assert!(!model_check(&tkb, &bad, &cfg()).unwrap());
    let (tkb, s) = kb("vocabulary V { p: () -> Bool }");
    assert!(model_check(&tkb, &s, &cfg()).unwrap());
}

#[test]
fn voting_propagation() {
    let (tkb, s) = kb(VOTING);
    let (gt, c) = propagate(&tkb, &with(&s, &[("vote()", "true")]), &cfg()).unwrap();
    assert_eq!(status_of(&gt, &c, "18 =< age()"), Some(true));
    assert_eq!(status_of(&gt, &c, "age() = 3"), Some(false));
    assert_eq!(status_of(&gt, &c, "age() = 30"), None);
    let (gt, c) = propagate(&tkb, &with(&s, &[("age()", "17")]), &cfg()).unwrap();
    assert_eq!(status_of(&gt, &c, "vote()"), Some(false));
    assert!(!c.given[gt.atoms.iter().position(|a| a.text == "vote()").unwrap()]);
    assert_eq!(c.values[gt.term_ids[&Term::new("vote", vec![])]], Some(Value::Bool(false)));
}

#[test]
fn propagation_with_only_a_fact() {
    let (tkb, s) = kb("vocabulary V { p, q: () -> Bool }");
    let (gt, c) = propagate(&tkb, &with(&s, &[("p()", "true")]), &cfg()).unwrap();
    assert_eq!(status_of(&gt, &c, "p()"), Some(true));
    assert!(c.given[0]);
    assert_eq!(status_of(&gt, &c, "q()"), None);
}

#[test]
fn unbounded_terms_get_determined_values() {
    let (tkb, s) = kb("vocabulary V { x, y: () -> Int } theory T:V { x() = 2 * y() + 1. }");
    let (gt, c) = propagate(&tkb, &with(&s, &[("y()", "4")]), &cfg()).unwrap();
    assert_eq!(c.values[gt.term_ids[&Term::new("x", vec![])]], Some(Value::int(9)));
    let (_, c) = propagate(&tkb, &s, &cfg()).unwrap();
    assert!(c.values.iter().all(|v| v.is_none()));
}

#[test]
fn inconsistent_propagation_is_an_error() {
    let (tkb, s) = kb(VOTING);
    let bad = with(&s, &[("vote()", "true"), ("age()", "17")]);
    assert_eq!(propagate(&tkb, &bad, &cfg()).unwrap_err(), InferenceError::Inconsistent);
}

#[test]
fn explanation_examples() {
    let (tkb, s) = kb(VOTING);
    let s20 = with(&s, &[("age()", "20")]);
    let e = explain(&tkb, &s20, "vote()", &cfg()).unwrap();
    let mut labels = e.labels();
    labels.sort();
    assert_eq!(labels, vec!["A1", "F:age()", "L"]);
    let e = explain(&tkb, &s20, "age() = 20", &cfg()).unwrap();
    let mut labels = e.labels();
    labels.sort();
    assert_eq!(labels, vec!["F:age()", "L"]);
    assert!(matches!(
        explain(&tkb, &s, "vote()", &cfg()),
        Err(InferenceError::NotAConsequence(_))
    ));

    let (tkb, s) = kb(
        "vocabulary V { age: () -> Int has_license, tested, can_drive: () -> Bool }
         theory T:V { { can_drive() <- has_license() & age() =< 85.
                        can_drive() <- has_license() & tested(). } }",
    );
    let s = with(&s, &[("has_license()", "true"), ("tested()", "true")]);
    let e = explain(&tkb, &s, "can_drive()", &cfg()).unwrap();
    let mut labels = e.labels();
    labels.sort();
    assert_eq!(labels, vec!["D1.R2", "F:has_license()", "F:tested()", "L"]);
}

#[test]
fn optimization_examples() {
    let (tkb, s) = kb(VOTING);
    let sv = with(&s, &[("vote()", "true")]);
    let (v, m) = optimize(&tkb, &sv, "age()", Direction::Minimize, &cfg()).unwrap();
    assert_eq!(v, Value::int(18));
    assert!(m.contains(&(Term::new("age", vec![]), Value::int(18))));
    let (v, _) = optimize(&tkb, &s, "age()", Direction::Maximize, &cfg()).unwrap();
    assert_eq!(v, Value::int(120));
    let (v, _) = optimize(&tkb, &s, "5", Direction::Minimize, &cfg()).unwrap();
    assert_eq!(v, Value::int(5));

    let (tkb, s) = kb("vocabulary V { type Person := {Bob, Alice} p: Person -> Bool }");
    let (v, _) = optimize(&tkb, &s, "#{x in Person: p(x)}", Direction::Maximize, &cfg()).unwrap();
    assert_eq!(v, Value::int(2));

    let (tkb, s) = kb("vocabulary V { x: () -> Int }");
    assert!(matches!(
        optimize(&tkb, &s, "x()", Direction::Minimize, &cfg()),
        Err(InferenceError::Unbounded(_))
    ));
}

#[test]
fn real_optimization_within_tolerance() {
    let (tkb, s) = kb("vocabulary V { w: () -> Real } theory T:V { w() > 2.5. w() =< 10. }");
    let (v, _) = optimize(&tkb, &s, "w()", Direction::Minimize, &cfg()).unwrap();
    let n = v.as_num().unwrap().clone();
    let lo: BigRational = crate::value::parse_number("2.5").unwrap();
    let eps = BigRational::new(BigInt::from(EPSILON.0), BigInt::from(EPSILON.1));
    assert!(n > lo && n - lo <= eps);
    let (v, _) = optimize(&tkb, &s, "w()", Direction::Maximize, &cfg()).unwrap();
    assert_eq!(v, Value::int(10));
}

#[test]
fn model_expansion_examples() {
    let (tkb, s) = kb(VOTING);
    let ms = model_expand(&tkb, &with(&s, &[("age()", "20")]), 1, &cfg()).unwrap();
    assert_eq!(ms.len(), 1);
    assert!(ms[0].contains(&(Term::new("vote", vec![]), Value::Bool(true))));
    let bad = with(&s, &[("vote()", "true"), ("age()", "17")]);
    assert!(model_expand(&tkb, &bad, 5, &cfg()).unwrap().is_empty());
    let all = model_expand(&tkb, &s, 1000, &cfg()).unwrap();
    assert_eq!(all.len(), 121);
}

#[test]
fn expansion_with_fixed_closure() {
    let (tkb, s) = kb(
        "vocabulary V { type N := {1..3} edge, tc: N * N -> Bool }
         theory T:V { { tc(x, y) <- edge(x, y). tc(x, y) <- ?z in N: tc(x, z) & tc(z, y). } }
         structure S:V { tc := {(1, 2), (2, 3), (1, 3)} }",
    );
    let ms = model_expand(&tkb, &s, 100, &cfg()).unwrap();
    let oracle = oracle_enumerate(&tkb, &s).unwrap();
    assert_eq!(ms.len(), oracle.len());
    assert_eq!(ms.len(), 2);
    for m in &ms {
        let edges: Vec<String> = m
            .iter()
            .filter(|(t, v)| t.symbol == "edge" && *v == Value::Bool(true))
            .map(|(t, _)| t.to_string())
            .collect();
        assert!(edges.contains(&"edge(1, 2)".to_string()));
        assert!(edges.contains(&"edge(2, 3)".to_string()));
    }
}

#[test]
fn unfounded_loops_are_excluded() {
    let (tkb, s) = kb(
        "vocabulary V { type N := {1, 2} edge, tc: N * N -> Bool }
         theory T:V { { tc(x, y) <- edge(x, y). tc(x, y) <- ?z in N: tc(x, z) & tc(z, y). } }
         structure S:V { tc := {(1, 1), (1, 2), (2, 1), (2, 2)} }",
    );
    let ms = model_expand(&tkb, &s, 100, &cfg()).unwrap();
    assert_eq!(ms.len(), oracle_enumerate(&tkb, &s).unwrap().len());
    for m in &ms {
        assert!(m.iter().any(|(t, v)| t.symbol == "edge" && *v == Value::Bool(true)));
    }
}

#[test]
fn relevance_examples() {
    let (tkb, s) = kb("vocabulary V { a, b: () -> Bool } theory T:V { a() => b(). }");
    let (gt, c, rel) = relevance(&tkb, &with(&s, &[("b()", "true")]), &cfg()).unwrap();
    let a = gt.atoms.iter().position(|x| x.text == "a()").unwrap();
    assert!(!rel[a]);
    assert_eq!(c.atoms[a], None);
    let (gt, c, rel) = relevance(&tkb, &with(&s, &[("a()", "true")]), &cfg()).unwrap();
    assert_eq!(status_of(&gt, &c, "b()"), Some(true));
    assert!(rel.iter().all(|r| *r));
    let (_, _, rel) = relevance(&tkb, &s, &cfg()).unwrap();
    assert!(rel.iter().all(|r| *r));
}

#[test]
fn oracle_examples() {
    let (tkb, s) = kb(
        "vocabulary V { type Age := {16..18} age: () -> Age vote: () -> Bool }
         theory T:V { vote() <=> 18 =< age(). }",
    );
    let ms = oracle_enumerate(&tkb, &s).unwrap();
    assert_eq!(ms.len(), 3);
    let (tkb, s) = kb("vocabulary V { p: () -> Bool }");
    assert_eq!(oracle_enumerate(&tkb, &s).unwrap().len(), 2);
    let (tkb, s) = kb(
        "vocabulary V { type A := {80, 90} age: () -> A has_license, tested, can_drive: () -> Bool }
         theory T:V { { can_drive() <- has_license() & age() =< 85.
                        can_drive() <- has_license() & tested(). } }",
    );
    let ms = oracle_enumerate(&tkb, &s).unwrap();
    assert_eq!(ms.len(), 8);
    for m in &ms {
        let get = |n: &str| m[&Term::new(n, vec![])].clone();
        let young = get("age") == Value::int(80);
        let expected = get("has_license") == Value::Bool(true) && (young || get("tested") == Value::Bool(true));
        assert_eq!(get("can_drive"), Value::Bool(expected));
    }
    let (tkb, s) = kb("vocabulary V { x: () -> Int }");
    assert!(matches!(oracle_enumerate(&tkb, &s), Err(InferenceError::TooLarge(_))));
}
