//! Reduction of inductive definitions to classical assertions.
//!
//! Each rule yields `body => head` over all its instances. One further
//! assertion per definition states that every defined atom is supported by
//! some rule body; within a recursive component, body occurrences of defined
//! atoms carry a strictly smaller level, which rules out unfounded loops.

use std::collections::HashMap;

use num::BigRational;
use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use super::expr::*;
use super::{Assertion, AssertionKind, Env, GroundError, Grounder, LevelVar};
use crate::interp::Term;
use crate::lang::CmpOp;
use crate::types::{TDefinition, Type};

struct Instance {
    head: GExpr,
    key: Term,
    value: Option<GExpr>,
    body: GExpr,
}

pub(super) fn reduce(
    g: &mut Grounder<'_>,
    def: &TDefinition,
    number: usize,
) -> Result<Vec<Assertion>, GroundError> {
    let mut out = Vec::new();
    let mut instances: Vec<Instance> = Vec::new();
    for (j, rule) in def.rules.iter().enumerate() {
        let sig = g.gt.structure.vocab.symbol(&rule.symbol).unwrap().sig.clone();
        let mut parts = Vec::new();
        for vals in g.tuples(&rule.vars, rule.span)? {
            let mut env: Env = rule.vars.iter().map(|(n, _)| n.clone()).zip(vals).collect();
            let mut args = Vec::new();
            for a in &rule.args {
                let ga = g.ground(a, &mut env)?;
                let v = ga
                    .as_value()
                    .cloned()
                    .ok_or(GroundError::NonGroundHead { span: rule.span })?;
                args.push(v);
            }
            if !args.iter().zip(&sig.args).all(|(v, t)| g.gt.structure.in_type(v, t)) {
                continue;
            }
            let key = Term::new(&rule.symbol, args);
            let head = g
                .gt
                .term_expr(&key)
                .ok_or_else(|| GroundError::Invalid(format!("unknown term {key}")))?;
            let body = g.ground(&rule.body, &mut env)?;
            let value = match &rule.value {
                Some(v) => Some(g.ground(v, &mut env)?),
                None => None,
            };
            let concl = match &value {
                Some(v) => cmp(CmpOp::Eq, head.clone(), v.clone()),
                None => head.clone(),
            };
            parts.push(implies(body.clone(), concl));
            if body != FALSE {
                instances.push(Instance {
                    head,
                    key,
                    value,
                    body,
                });
            }
        }
        out.push(Assertion {
            label: format!("D{number}.R{}", j + 1),
            expr: and(parts),
            kind: AssertionKind::Rule,
            source: rule.source.clone(),
        });
    }

    let defined: Vec<Term> = def
        .defined
        .iter()
        .flat_map(|s| g.gt.structure.terms_of(s))
        .collect();
    let is_function: HashMap<&str, bool> = def
        .defined
        .iter()
        .map(|s| {
            let r = &g.gt.structure.vocab.symbol(s).unwrap().sig.result;
            (s.as_str(), *r != Type::Bool)
        })
        .collect();
    let defined_ids: HashMap<usize, &Term> = defined
        .iter()
        .filter_map(|t| g.gt.term_ids.get(t).map(|id| (*id, t)))
        .collect();

    // ground dependency graph among open defined atoms
    let mut graph: DiGraphMap<usize, ()> = DiGraphMap::new();
    for id in defined_ids.keys() {
        graph.add_node(*id);
    }
    let mut occ: Vec<(usize, usize, Polarity)> = Vec::new();
    for inst in &instances {
        let GExpr::Term(h) = inst.head else { continue };
        let mut record = |d: usize, p: Polarity| {
            if defined_ids.contains_key(&d) {
                occ.push((h, d, p));
            }
        };
        occurrences(&inst.body, Polarity::Positive, &mut record);
        if let Some(v) = &inst.value {
            occurrences(v, Polarity::Mixed, &mut record);
        }
    }
    for (h, d, _) in &occ {
        graph.add_edge(*h, *d, ());
    }
    let mut component: HashMap<usize, usize> = HashMap::new();
    let mut recursive: HashMap<usize, bool> = HashMap::new();
    for (k, scc) in tarjan_scc(&graph).into_iter().enumerate() {
        let rec = scc.len() > 1 || graph.contains_edge(scc[0], scc[0]);
        for n in scc {
            component.insert(n, k);
            recursive.insert(n, rec);
        }
    }
    for (h, d, p) in &occ {
        if component[h] != component[d] {
            continue;
        }
        let (ht, dt) = (defined_ids[h], defined_ids[d]);
        if is_function[ht.symbol.as_str()] || is_function[dt.symbol.as_str()] {
            return Err(GroundError::RecursiveFunction(format!("{ht} depends on {dt}")));
        }
        if *p != Polarity::Positive {
            return Err(GroundError::UnstratifiedDefinition(format!(
                "{ht} depends on {dt} under negation"
            )));
        }
    }

    let mut level_of: HashMap<usize, usize> = HashMap::new();
    let max = defined.len();
    let first_level = g.gt.levels.len();
    for t in &defined {
        if let Some(&id) = g.gt.term_ids.get(t) {
            if recursive.get(&id) == Some(&true) {
                level_of.insert(id, g.gt.levels.len());
                g.gt.levels.push(LevelVar { term: id, max });
            }
        }
    }
    for l in first_level..g.gt.levels.len() {
        let term = g.gt.levels[l].term;
        let label = format!("B{}", g.gt.background.len() + 1);
        let zero = GExpr::num(BigRational::from_integer(0.into()));
        let top = GExpr::num(BigRational::from_integer(max.into()));
        let source = format!("level of {} is in 0..{max}", g.gt.term_text(term));
        g.gt.background.push(Assertion {
            label,
            expr: and(vec![
                cmp(CmpOp::Le, zero, GExpr::Level(l)),
                cmp(CmpOp::Le, GExpr::Level(l), top),
            ]),
            kind: AssertionKind::Background,
            source,
        });
    }

    let mut supports = Vec::new();
    for t in &defined {
        let head = g
            .gt
            .term_expr(t)
            .ok_or_else(|| GroundError::Invalid(format!("unknown term {t}")))?;
        let own = match &head {
            GExpr::Term(h) => level_of.get(h).copied().map(|l| (*h, l)),
            _ => None,
        };
        let leveled = |e: &GExpr| -> GExpr {
            let Some((h, lh)) = own else { return e.clone() };
            e.rewrite(&mut |x| match x {
                GExpr::Term(d) if component.get(d) == component.get(&h) => {
                    level_of.get(d).map(|&ld| {
                        and(vec![
                            x.clone(),
                            cmp(CmpOp::Lt, GExpr::Level(ld), GExpr::Level(lh)),
                        ])
                    })
                }
                _ => None,
            })
        };
        let mine: Vec<&Instance> = instances.iter().filter(|i| &i.key == t).collect();
        if is_function[t.symbol.as_str()] {
            supports.push(or(mine
                .iter()
                .map(|i| {
                    and(vec![
                        leveled(&i.body),
                        cmp(CmpOp::Eq, head.clone(), i.value.clone().unwrap()),
                    ])
                })
                .collect()));
        } else {
            supports.push(implies(
                head.clone(),
                or(mine.iter().map(|i| leveled(&i.body)).collect()),
            ));
        }
    }
    out.push(Assertion {
        label: format!("D{number}.C"),
        expr: and(supports),
        kind: AssertionKind::Completion,
        source: format!(
            "{} only where a rule of the definition applies",
            def.defined.join(", ")
        ),
    });
    Ok(out)
}
