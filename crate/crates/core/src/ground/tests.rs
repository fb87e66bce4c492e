use super::*;
use crate::check::check;
use crate::lang::parse_kb;

fn grounded(src: &str) -> Result<GroundTheory, GroundError> {
    let tkb = check(&parse_kb(src).unwrap()).unwrap();
    let voc = tkb.kb.vocabularies[0].name.clone();
    let s = PartialStructure::initial(&tkb, &voc).unwrap();
    ground_theory(&tkb, &s)
}

fn texts(gt: &GroundTheory) -> Vec<String> {
    gt.assertions.iter().map(|a| gt.render(&a.expr)).collect()
}

#[test]
fn forall_expands_to_conjunction() {
    let gt = grounded(
        "vocabulary V { type Person := {Bob, Alice} p: Person -> Bool }
         theory T:V { !x in Person: p(x). }",
    )
    .unwrap();
    assert_eq!(texts(&gt), vec!["p(Bob) & p(Alice)"]);
}

#[test]
fn cardinality_grounds_to_conditional_sum() {
    let gt = grounded(
        "vocabulary V { type Person := {Bob, Alice} p: Person -> Bool }
         theory T:V { #{x in Person: p(x)} = 1. }",
    )
    .unwrap();
    assert_eq!(
        texts(&gt),
        vec!["((if p(Bob) then 1 else 0) + (if p(Alice) then 1 else 0)) = 1"]
    );
}

#[test]
fn concept_application_splits_on_concepts() {
    let gt = grounded(
        "vocabulary V { type Person := {Bob} symA, symB: Person -> Bool
           pick: () -> Concept[Person -> Bool] }
         theory T:V { $(pick())(Bob). }",
    )
    .unwrap();
    assert_eq!(
        texts(&gt),
        vec!["if (pick() = `symA) then symA(Bob) else symB(Bob)"]
    );
}

#[test]
fn enumerated_symbols_are_folded() {
    let gt = grounded(
        "vocabulary V { type Person weight: Person -> Real heavy: Person -> Bool }
         theory T:V { !x in Person: heavy(x) <=> weight(x) > 75. }
         structure S:V { Person := {Bob, Alice} weight := {Bob -> 80, Alice -> 60} }",
    )
    .unwrap();
    assert_eq!(texts(&gt), vec!["heavy(Bob) & ~heavy(Alice)"]);
    assert!(gt.terms.iter().all(|t| t.term.symbol == "heavy"));
}

#[test]
fn listing_two_reduces_to_rules_and_support() {
    let gt = grounded(
        "vocabulary V { age: () -> Int has_license, tested, can_drive: () -> Bool }
         theory T:V { { can_drive() <- has_license() & age() =< 85.
                        can_drive() <- has_license() & tested(). } }",
    )
    .unwrap();
    assert_eq!(
        texts(&gt),
        vec![
            "(has_license() & (age() =< 85)) => can_drive()",
            "(has_license() & tested()) => can_drive()",
            "can_drive() => ((has_license() & (age() =< 85)) | (has_license() & tested()))",
        ]
    );
    let labels: Vec<&str> = gt.assertions.iter().map(|a| a.label.as_str()).collect();
    assert_eq!(labels, vec!["D1.R1", "D1.R2", "D1.C"]);
    assert!(gt.levels.is_empty());
}

#[test]
fn self_negation_is_unstratified() {
    let e = grounded("vocabulary V { p: () -> Bool } theory T:V { { p() <- ~p(). } }").unwrap_err();
    assert!(matches!(e, GroundError::UnstratifiedDefinition(_)));
}

#[test]
fn positive_recursion_gets_levels() {
    let gt = grounded(
        "vocabulary V { type N := {1..3} edge, tc: N * N -> Bool }
         theory T:V { { tc(x, y) <- edge(x, y). tc(x, y) <- ?z in N: tc(x, z) & tc(z, y). } }",
    )
    .unwrap();
    assert_eq!(gt.levels.len(), 9);
    assert!(gt.levels.iter().all(|l| l.max == 9));
    assert!(gt.assertions[2].expr.has_level());
}

#[test]
fn quantifying_over_int_is_rejected() {
    let e = grounded("vocabulary V { p: () -> Bool } theory T:V { !x in Int: p(). }").unwrap_err();
    assert!(matches!(e, GroundError::InfiniteQuantification { .. }));
}

#[test]
fn voting_atom_pool() {
    let gt = grounded(
        "vocabulary V { age: () -> Int vote: () -> Bool } theory T:V { vote() <=> 18 =< age(). }",
    )
    .unwrap();
    let atoms: Vec<&str> = gt.atoms.iter().map(|a| a.text.as_str()).collect();
    assert_eq!(atoms, vec!["vote()", "18 =< age()"]);
}

#[test]
fn finite_terms_get_equality_atoms() {
    let gt = grounded(
        "vocabulary V { type Color := {Red, Green} c: () -> Color type Age := {0..2} a: () -> Age }",
    )
    .unwrap();
    let atoms: Vec<&str> = gt.atoms.iter().map(|a| a.text.as_str()).collect();
    assert_eq!(
        atoms,
        vec!["c() = Red", "c() = Green", "a() = 0", "a() = 1", "a() = 2"]
    );
    assert_eq!(gt.background.len(), 1);
    assert_eq!(gt.render(&gt.background[0].expr), "(0 =< a()) & (a() =< 2)");
}

#[test]
fn min_aggregate_is_a_chain() {
    let gt = grounded(
        "vocabulary V { type P := {a, b} f: P -> Int } theory T:V { min(lambda x in P: f(x)) > 0. }",
    )
    .unwrap();
    assert_eq!(
        texts(&gt),
        vec!["(if (f(a) =< f(b)) then f(a) else f(b)) > 0"]
    );
}

#[test]
fn simplify_examples() {
    let mut gt = grounded("vocabulary V { a, b: () -> Bool } theory T:V { a() => b(). }").unwrap();
    let b = gt.parse_ground("b()").unwrap().0;
    let mut facts = Facts::default();
    facts.atoms.insert(b, true);
    let s = simplify(&gt, &facts);
    assert!(s.assertions.is_empty());
    let same = simplify(&gt, &Facts::default());
    assert_eq!(texts(&same), texts(&gt));

    let mut gt = grounded(
        "vocabulary V { age: () -> Int vote: () -> Bool } theory T:V { vote() <=> 18 =< age(). }",
    )
    .unwrap();
    let vote = gt.parse_ground("vote()").unwrap().0;
    let mut facts = Facts::default();
    facts.atoms.insert(vote, true);
    let s = simplify(&gt, &facts);
    assert_eq!(texts(&s), vec!["18 =< age()"]);
    let again = simplify(&s, &Facts::default());
    assert_eq!(texts(&again), texts(&s));
}

#[test]
fn user_facts_are_unit_assertions() {
    let tkb = check(
        &parse_kb("vocabulary V { age: () -> Int vote: () -> Bool } theory T:V { vote() <=> 18 =< age(). }")
            .unwrap(),
    )
    .unwrap();
    let s = PartialStructure::empty(&tkb, "V").unwrap();
    let s = s.assert_fact(Term::new("vote", vec![]), Value::Bool(false)).unwrap();
    let gt = ground_theory(&tkb, &s).unwrap();
    assert_eq!(gt.facts.len(), 1);
    assert_eq!(gt.facts[0].label, "F:vote()");
    assert_eq!(gt.render(&gt.facts[0].expr), "~vote()");
}
