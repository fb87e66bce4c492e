//! Direct evaluation of typed expressions in a total structure, without a
//! solver.

use std::collections::HashMap;

use num::{BigRational, Zero};

use crate::ground::expr::{arith_values, compare};
use crate::interp::{PartialStructure, Term};
use crate::lang::{AggOp, Quantifier};
use crate::types::{TExpr, TKind, Type};
use crate::value::Value;

/// Values of the open terms; enumerated symbols are read from the structure.
pub struct Interpretation<'a> {
    pub structure: &'a PartialStructure,
    pub values: HashMap<Term, Value>,
}

impl Interpretation<'_> {
    pub fn get(&self, t: &Term, result: &Type) -> Option<Value> {
        if let Some(v) = self.values.get(t) {
            return Some(v.clone());
        }
        if let Some(a) = self.structure.lookup(t) {
            return Some(a.value.clone());
        }
        // outside the symbol's domain
        (*result == Type::Bool).then_some(Value::Bool(false))
    }
}

/// Evaluates `e` under variable bindings `env`; `None` for undefined
/// operations such as division by zero or an empty minimum.
pub fn eval_expr(e: &TExpr, env: &mut Vec<(String, Value)>, i: &Interpretation<'_>) -> Option<Value> {
    let b = |x: &TExpr, env: &mut Vec<(String, Value)>| eval_expr(x, env, i).and_then(|v| v.as_bool());
    let n = |x: &TExpr, env: &mut Vec<(String, Value)>| match eval_expr(x, env, i) {
        Some(Value::Num(n)) => Some(n),
        _ => None,
    };
    Some(match &e.kind {
        TKind::Const(v) => v.clone(),
        TKind::Var(name) => env.iter().rev().find(|(n, _)| n == name)?.1.clone(),
        TKind::App(symbol, args) => {
            let vals = args
                .iter()
                .map(|a| eval_expr(a, env, i))
                .collect::<Option<Vec<_>>>()?;
            let sym = i.structure.vocab.symbol(symbol)?;
            i.get(&Term::new(symbol, vals), &sym.sig.result)?
        }
        TKind::ConceptApp(c, args) => {
            let Value::Concept(name) = eval_expr(c, env, i)? else {
                return None;
            };
            let vals = args
                .iter()
                .map(|a| eval_expr(a, env, i))
                .collect::<Option<Vec<_>>>()?;
            let sym = i.structure.vocab.symbol(&name)?;
            i.get(&Term::new(name.clone(), vals), &sym.sig.result)?
        }
        TKind::Not(x) => Value::Bool(!b(x, env)?),
        TKind::And(xs) => {
            for x in xs {
                if !b(x, env)? {
                    return Some(Value::Bool(false));
                }
            }
            Value::Bool(true)
        }
        TKind::Or(xs) => {
            for x in xs {
                if b(x, env)? {
                    return Some(Value::Bool(true));
                }
            }
            Value::Bool(false)
        }
        TKind::Implies(x, y) => Value::Bool(!b(x, env)? || b(y, env)?),
        TKind::Iff(x, y) => Value::Bool(b(x, env)? == b(y, env)?),
        TKind::Cmp(first, rest) => {
            let mut prev = eval_expr(first, env, i)?;
            let mut ok = true;
            for (op, x) in rest {
                let next = eval_expr(x, env, i)?;
                ok &= compare(*op, &prev, &next)?;
                prev = next;
            }
            Value::Bool(ok)
        }
        TKind::Arith(op, x, y) => Value::Num(arith_values(*op, &n(x, env)?, &n(y, env)?)?),
        TKind::Neg(x) => Value::Num(-n(x, env)?),
        TKind::Ite(c, x, y) => {
            if b(c, env)? {
                eval_expr(x, env, i)?
            } else {
                eval_expr(y, env, i)?
            }
        }
        TKind::Quant(q, bounds, body) => {
            let want = *q == Quantifier::Exists;
            for vals in bindings(bounds, i)? {
                let mark = push(env, bounds, vals);
                let r = b(body, env);
                env.truncate(mark);
                if r? == want {
                    return Some(Value::Bool(want));
                }
            }
            Value::Bool(!want)
        }
        TKind::Count(bounds, body) => {
            let mut count = 0i64;
            for vals in bindings(bounds, i)? {
                let mark = push(env, bounds, vals);
                let r = b(body, env);
                env.truncate(mark);
                count += r? as i64;
            }
            Value::int(count)
        }
        TKind::Agg(op, bounds, term) => {
            let mut parts = Vec::new();
            for vals in bindings(bounds, i)? {
                let mark = push(env, bounds, vals);
                let r = n(term, env);
                env.truncate(mark);
                parts.push(r?);
            }
            Value::Num(match op {
                AggOp::Sum => parts.into_iter().fold(BigRational::zero(), |a, x| a + x),
                AggOp::Min => parts.into_iter().min()?,
                AggOp::Max => parts.into_iter().max()?,
            })
        }
    })
}

fn bindings(bounds: &[(String, Type)], i: &Interpretation<'_>) -> Option<Vec<Vec<Value>>> {
    let types: Vec<Type> = bounds.iter().map(|(_, t)| t.clone()).collect();
    for t in &types {
        i.structure.extension(t)?;
    }
    Some(i.structure.tuples(&types))
}

fn push(env: &mut Vec<(String, Value)>, bounds: &[(String, Type)], vals: Vec<Value>) -> usize {
    let mark = env.len();
    env.extend(bounds.iter().map(|(n, _)| n.clone()).zip(vals));
    mark
}
