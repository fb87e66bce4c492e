//! Brute-force model enumeration, used to test the solver-based tasks.

use std::collections::{BTreeMap, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use super::eval::{eval_expr, Interpretation};
use super::{InferenceError, Result};
use crate::check::TypedKB;
use crate::interp::{PartialStructure, Term};
use crate::types::{TDefinition, TExpr, TKind, Type, TypedTheory};
use crate::value::Value;

/// Most candidate structures the oracle will try.
pub const LIMIT: u128 = 1_000_000;

/// Values of every term that the structure does not enumerate.
pub type OracleModel = BTreeMap<Term, Value>;

/// All models of the theories over `s`'s vocabulary that expand `s`.
pub fn oracle_enumerate(tkb: &TypedKB, s: &PartialStructure) -> Result<Vec<OracleModel>> {
    let theories: Vec<&TypedTheory> = tkb
        .theories
        .iter()
        .filter(|t| t.vocabulary == s.vocab.name)
        .collect();
    let defs: Vec<&TDefinition> = theories.iter().flat_map(|t| &t.definitions).collect();
    let defined: Vec<&String> = defs.iter().flat_map(|d| &d.defined).collect();

    let mut free: Vec<(Term, Vec<Value>)> = Vec::new();
    let mut total: u128 = 1;
    for sym in s.vocab.symbols.values() {
        if defined.contains(&&sym.name) || s.is_enumerated(&sym.name) {
            continue;
        }
        let range = match &sym.sig.result {
            Type::Bool => vec![Value::Bool(false), Value::Bool(true)],
            t => s
                .extension(t)
                .ok_or_else(|| InferenceError::TooLarge(format!("{} ranges over {t}", sym.name)))?,
        };
        for term in s.terms_of(&sym.name) {
            let r = match s.lookup(&term) {
                Some(a) => vec![a.value.clone()],
                None => range.clone(),
            };
            total = total.saturating_mul(r.len() as u128);
            if total > LIMIT {
                return Err(InferenceError::TooLarge(format!("more than {LIMIT}")));
            }
            free.push((term, r));
        }
    }

    let mut out = Vec::new();
    let mut idx = vec![0usize; free.len()];
    loop {
        let mut values: HashMap<Term, Value> = free
            .iter()
            .zip(&idx)
            .map(|((t, r), &k)| (t.clone(), r[k].clone()))
            .collect();
        if let Some(m) = check_candidate(s, &theories, &defs, &mut values) {
            out.push(m);
        }
        // next candidate, last position fastest
        let mut k = free.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < free[k].1.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn check_candidate(
    s: &PartialStructure,
    theories: &[&TypedTheory],
    defs: &[&TDefinition],
    values: &mut HashMap<Term, Value>,
) -> Option<OracleModel> {
    for d in defs {
        if !evaluate_definition(s, d, values) {
            return None;
        }
    }
    // enumerations and user facts on defined symbols constrain the result
    for (t, a) in &s.assignments {
        if let Some(v) = values.get(t) {
            if *v != a.value {
                return None;
            }
        }
    }
    let interp = Interpretation {
        structure: s,
        values: std::mem::take(values),
    };
    for th in theories {
        for ax in &th.axioms {
            if eval_expr(&ax.expr, &mut Vec::new(), &interp) != Some(Value::Bool(true)) {
                return None;
            }
        }
    }
    Some(interp.values.into_iter().collect())
}

fn mentions(e: &TExpr, out: &mut Vec<String>, all: &[String]) {
    e.visit(&mut |x| match &x.kind {
        TKind::App(s, _) => out.push(s.clone()),
        TKind::ConceptApp(..) => out.extend(all.iter().cloned()),
        _ => {}
    });
}

/// Computes the defined symbols' values bottom-up, by least fixpoint within
/// each recursive component. Returns false when no value is possible, as for
/// a function with no applicable rule.
fn evaluate_definition(s: &PartialStructure, d: &TDefinition, values: &mut HashMap<Term, Value>) -> bool {
    let mut graph: DiGraphMap<usize, ()> = DiGraphMap::new();
    let index: HashMap<&str, usize> = d.defined.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    for i in 0..d.defined.len() {
        graph.add_node(i);
    }
    for r in &d.rules {
        let mut used = Vec::new();
        mentions(&r.body, &mut used, &d.defined);
        if let Some(v) = &r.value {
            mentions(v, &mut used, &d.defined);
        }
        for a in &r.args {
            mentions(a, &mut used, &d.defined);
        }
        for u in used {
            if let Some(&j) = index.get(u.as_str()) {
                graph.add_edge(index[r.symbol.as_str()], j, ());
            }
        }
    }
    for scc in tarjan_scc(&graph) {
        let symbols: Vec<&str> = scc.iter().map(|&i| d.defined[i].as_str()).collect();
        let functions: Vec<&str> = symbols
            .iter()
            .copied()
            .filter(|n| s.vocab.symbol(n).unwrap().sig.result != Type::Bool)
            .collect();
        for n in &symbols {
            if !functions.contains(n) {
                for t in s.terms_of(n) {
                    values.insert(t, Value::Bool(false));
                }
            }
        }
        let rules: Vec<_> = d.rules.iter().filter(|r| symbols.contains(&r.symbol.as_str())).collect();
        let mut fvals: HashMap<Term, Value> = HashMap::new();
        loop {
            let mut changed = false;
            for r in &rules {
                let sig = &s.vocab.symbol(&r.symbol).unwrap().sig;
                let types: Vec<Type> = r.vars.iter().map(|(_, t)| t.clone()).collect();
                for vals in s.tuples(&types) {
                    let interp = Interpretation {
                        structure: s,
                        values: std::mem::take(values),
                    };
                    let mut env: Vec<(String, Value)> =
                        r.vars.iter().map(|(n, _)| n.clone()).zip(vals).collect();
                    let args: Option<Vec<Value>> = r.args.iter().map(|a| eval_expr(a, &mut env, &interp)).collect();
                    let fires = eval_expr(&r.body, &mut env, &interp) == Some(Value::Bool(true));
                    let value = r.value.as_ref().map(|v| eval_expr(v, &mut env, &interp));
                    *values = interp.values;
                    let Some(args) = args else { return false };
                    if !fires || !args.iter().zip(&sig.args).all(|(v, t)| s.in_type(v, t)) {
                        continue;
                    }
                    let term = Term::new(&r.symbol, args);
                    match value {
                        None => {
                            if values.get(&term) != Some(&Value::Bool(true)) {
                                values.insert(term, Value::Bool(true));
                                changed = true;
                            }
                        }
                        Some(v) => {
                            let Some(v) = v else { return false };
                            if !s.in_type(&v, &sig.result) {
                                return false;
                            }
                            match fvals.get(&term) {
                                Some(old) if *old != v => return false,
                                Some(_) => {}
                                None => {
                                    fvals.insert(term, v);
                                }
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for f in &functions {
            for t in s.terms_of(f) {
                match fvals.remove(&t) {
                    Some(v) => {
                        values.insert(t, v);
                    }
                    None => return false,
                }
            }
        }
    }
    true
}
