use std::sync::Arc;

use fodot_core::consult::{AtomStatus, ConsultError, ConsultSession, TermStatus};
use fodot_core::inference::{Direction, Reasoner};
use fodot_core::interp::Term;
use fodot_core::smt::SolverConfig;
use fodot_core::{compile, Value};

const VOTING: &str = "vocabulary V { type Age := {0..120} age: () -> Age vote: () -> Bool }
                      theory T:V { vote() <=> 18 =< age(). }";

fn session(src: &str) -> ConsultSession {
    let tkb = Arc::new(compile(src).unwrap());
    let voc = tkb.kb.vocabularies[0].name.clone();
    ConsultSession::new(tkb, &voc, &SolverConfig::default()).unwrap()
}

fn term(name: &str) -> Term {
    Term::new(name, vec![])
}

/// Consequences recomputed from zero for the session's current facts.
fn fresh(st: &ConsultSession) -> fodot_core::inference::Consequences {
    let mut r = Reasoner::from_kb(&st.tkb, st.structure(), &SolverConfig::default()).unwrap();
    r.propagate().unwrap()
}

#[test]
fn fresh_session_has_nothing_decided() {
    let st = session(VOTING);
    let table = st.state();
    assert!(table.atoms.iter().all(|a| a.status == AtomStatus::Unknown));
    assert_eq!(table.term("vote()").unwrap().status, TermStatus::Unknown);
}

#[test]
fn unit_axiom_propagates_at_creation() {
    let st = session("vocabulary V { p, q: () -> Bool } theory T:V { p(). }");
    assert_eq!(st.state().atom("p()").unwrap().status, AtomStatus::PropagatedTrue);
}

#[test]
fn inconsistent_kb_is_rejected() {
    let tkb = Arc::new(compile("vocabulary V { p: () -> Bool } theory T:V { p() & ~p(). }").unwrap());
    let r = ConsultSession::new(tkb, "V", &SolverConfig::default());
    assert!(matches!(r, Err(ConsultError::InconsistentKB)));
}

#[test]
fn assert_then_retract_vote() {
    let mut st = session(VOTING);
    let before = st.state();
    st.assert(term("vote"), Value::Bool(true)).unwrap();
    let table = st.state();
    assert_eq!(table.atom("18 =< age()").unwrap().status, AtomStatus::PropagatedTrue);
    assert_eq!(table.atom("vote()").unwrap().status, AtomStatus::User);
    assert_eq!(table.atom("age() = 17").unwrap().status, AtomStatus::PropagatedFalse);
    assert_eq!(st.consequences(), &fresh(&st));

    st.retract(&term("vote")).unwrap();
    assert_eq!(st.state().atom("18 =< age()").unwrap().status, AtomStatus::Unknown);
    assert_eq!(st.consequences(), &fresh(&st));
    assert_eq!(st.state(), before);
}

#[test]
fn conflicting_assert_is_explained() {
    let mut st = session(VOTING);
    st.assert(term("vote"), Value::Bool(true)).unwrap();
    let before = st.state();
    match st.assert(term("age"), Value::int(17)) {
        Err(ConsultError::ConflictingAssert(e)) => {
            let mut labels = e.labels();
            labels.sort();
            assert_eq!(labels, vec!["A1", "F:age()", "F:vote()"]);
        }
        other => panic!("expected a conflict, got {:?}", other.err()),
    }
    assert_eq!(st.state(), before);
}

#[test]
fn explain_and_optimize_after_vote() {
    let mut st = session(VOTING);
    st.assert(term("vote"), Value::Bool(true)).unwrap();
    let e = st.explain("18 =< age()").unwrap();
    let mut labels = e.labels();
    labels.sort();
    assert_eq!(labels, vec!["A1", "F:vote()", "L"]);
    let (v, m) = st.optimize("age()", Direction::Minimize).unwrap();
    assert_eq!(v, Value::int(18));
    assert!(m.contains(&(term("age"), Value::int(18))));
}

#[test]
fn changing_an_answer_replaces_the_fact() {
    let mut st = session(VOTING);
    st.assert(term("age"), Value::int(17)).unwrap();
    assert_eq!(st.state().atom("vote()").unwrap().status, AtomStatus::PropagatedFalse);
    st.assert(term("age"), Value::int(40)).unwrap();
    assert_eq!(st.state().atom("vote()").unwrap().status, AtomStatus::PropagatedTrue);
    assert_eq!(st.consequences(), &fresh(&st));
}

#[test]
fn irrelevant_atoms_are_greyed() {
    let mut st = session("vocabulary V { a, b: () -> Bool } theory T:V { a() => b(). }");
    st.assert(term("b"), Value::Bool(true)).unwrap();
    let table = st.state();
    assert_eq!(table.atom("a()").unwrap().status, AtomStatus::Irrelevant);
    assert_eq!(table.term("a()").unwrap().status, TermStatus::Irrelevant);
    st.retract(&term("b")).unwrap();
    assert_eq!(st.state().atom("a()").unwrap().status, AtomStatus::Unknown);
}

#[test]
fn numeric_terms_get_values() {
    let mut st = session("vocabulary V { x, y: () -> Int } theory T:V { x() = y() + 1. }");
    st.assert(term("y"), Value::int(4)).unwrap();
    let table = st.state();
    assert_eq!(table.term("x()").unwrap().status, TermStatus::Value(Value::int(5)));
    assert_eq!(table.term("y()").unwrap().status, TermStatus::User);
    assert_eq!(st.consequences(), &fresh(&st));
    st.retract(&term("y")).unwrap();
    assert_eq!(st.state().term("x()").unwrap().status, TermStatus::Unknown);
    assert_eq!(st.consequences(), &fresh(&st));
}
