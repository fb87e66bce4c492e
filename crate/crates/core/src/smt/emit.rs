//! SMT-LIB 2 text for ground theories.

use num::{BigRational, Signed};

use super::sexpr::quote;
use crate::ground::{GExpr, GroundTheory, SortKind};
use crate::lang::{ArithOp, CmpOp};
use crate::value::Value;

pub fn elem_symbol(sort: &str, v: &Value) -> String {
    quote(&format!("{sort}:{v}"))
}

pub fn sort_symbol(sort: &str) -> String {
    quote(sort)
}

pub fn level_symbol(gt: &GroundTheory, l: usize) -> String {
    quote(&format!("level:{}", gt.term_text(gt.levels[l].term)))
}

pub fn label_symbol(label: &str) -> String {
    quote(label)
}

fn smt_sort(s: &SortKind) -> String {
    match s {
        SortKind::Bool => "Bool".into(),
        SortKind::Int => "Int".into(),
        SortKind::Real => "Real".into(),
        SortKind::Finite(name) => sort_symbol(name),
    }
}

/// Whether the theory needs more than quantifier-free linear arithmetic
/// with uninterpreted functions.
pub fn needs_full_logic(gt: &GroundTheory) -> bool {
    let mut nonlinear = false;
    for a in gt.background.iter().chain(&gt.assertions).chain(&gt.facts) {
        a.expr.visit(&mut |e| {
            match e {
                GExpr::Arith(ArithOp::Mul, x, y) => {
                    nonlinear |= x.as_value().is_none() && y.as_value().is_none()
                }
                GExpr::Arith(ArithOp::Div, _, y) => nonlinear |= y.as_value().is_none(),
                _ => {}
            }
        });
    }
    nonlinear
}

/// Declarations, domain axioms and background assertions. `datatypes`
/// selects enumerated datatypes for finite sorts instead of uninterpreted
/// sorts with distinctness and exhaustiveness axioms.
pub fn declarations(gt: &GroundTheory, datatypes: bool) -> Vec<String> {
    let mut out = Vec::new();
    for (sort, elems) in &gt.sorts {
        let s = sort_symbol(sort);
        if datatypes && !elems.is_empty() {
            let ctors: Vec<String> = elems.iter().map(|e| format!("({})", elem_symbol(sort, e))).collect();
            out.push(format!("(declare-datatypes (({s} 0)) (({})))", ctors.join(" ")));
            continue;
        }
        out.push(format!("(declare-sort {s} 0)"));
        for e in elems {
            out.push(format!("(declare-fun {} () {s})", elem_symbol(sort, e)));
        }
        if elems.len() > 1 {
            let names: Vec<String> = elems.iter().map(|e| elem_symbol(sort, e)).collect();
            out.push(format!(
                "(assert (! (distinct {}) :named {}))",
                names.join(" "),
                label_symbol(&format!("U:{sort}"))
            ));
        }
    }
    for t in &gt.terms {
        out.push(format!("(declare-fun {} () {})", t.smt, smt_sort(&t.sort)));
    }
    for l in 0..gt.levels.len() {
        out.push(format!("(declare-fun {} () Int)", level_symbol(gt, l)));
    }
    if !datatypes {
        for t in &gt.terms {
            if let SortKind::Finite(sort) = &t.sort {
                let elems = &gt.sorts[sort];
                let cases: Vec<String> = elems
                    .iter()
                    .map(|e| format!("(= {} {})", t.smt, elem_symbol(sort, e)))
                    .collect();
                let body = match cases.len() {
                    0 => "false".to_string(),
                    1 => cases[0].clone(),
                    _ => format!("(or {})", cases.join(" ")),
                };
                out.push(format!(
                    "(assert (! {body} :named {}))",
                    label_symbol(&format!("X:{}", t.term))
                ));
            }
        }
    }
    for a in &gt.background {
        out.push(named_assert(gt, &a.label, &a.expr));
    }
    out
}

pub fn named_assert(gt: &GroundTheory, label: &str, e: &GExpr) -> String {
    format!("(assert (! {} :named {}))", expr(gt, e), label_symbol(label))
}

pub fn expr(gt: &GroundTheory, e: &GExpr) -> String {
    let mut s = String::new();
    emit(gt, e, false, &mut s);
    s
}

fn is_real(gt: &GroundTheory, e: &GExpr) -> bool {
    match e {
        GExpr::Const(Value::Num(n)) => !n.is_integer(),
        GExpr::Term(i) => gt.terms[*i].sort == SortKind::Real,
        GExpr::Arith(ArithOp::Div, ..) => true,
        GExpr::Arith(_, a, b) => is_real(gt, a) || is_real(gt, b),
        GExpr::Sum(xs) => xs.iter().any(|x| is_real(gt, x)),
        GExpr::Neg(x) => is_real(gt, x),
        GExpr::Ite(_, a, b) => is_real(gt, a) || is_real(gt, b),
        _ => false,
    }
}

fn is_numeric(gt: &GroundTheory, e: &GExpr) -> bool {
    match e {
        GExpr::Const(Value::Num(_)) | GExpr::Level(_) => true,
        GExpr::Term(i) => matches!(gt.terms[*i].sort, SortKind::Int | SortKind::Real),
        GExpr::Arith(..) | GExpr::Sum(_) | GExpr::Neg(_) => true,
        GExpr::Ite(_, a, _) => is_numeric(gt, a),
        _ => false,
    }
}

fn number(n: &BigRational, real: bool, out: &mut String) {
    let neg = n.is_negative();
    let a = n.abs();
    let body = if a.is_integer() {
        if real {
            format!("{}.0", a.numer())
        } else {
            a.numer().to_string()
        }
    } else {
        format!("(/ {}.0 {}.0)", a.numer(), a.denom())
    };
    if neg {
        out.push_str(&format!("(- {body})"));
    } else {
        out.push_str(&body);
    }
}

fn emit(gt: &GroundTheory, e: &GExpr, real: bool, out: &mut String) {
    let list = |op: &str, xs: &[&GExpr], real: bool, out: &mut String| {
        out.push('(');
        out.push_str(op);
        for x in xs {
            out.push(' ');
            emit(gt, x, real, out);
        }
        out.push(')');
    };
    match e {
        GExpr::Const(Value::Bool(b)) => out.push_str(if *b { "true" } else { "false" }),
        GExpr::Const(Value::Num(n)) => number(n, real, out),
        GExpr::Const(v) => out.push_str(&quote(&v.to_string())),
        GExpr::Elem(sort, v) => out.push_str(&elem_symbol(sort, v)),
        GExpr::Term(i) => {
            let t = &gt.terms[*i];
            if real && t.sort == SortKind::Int {
                out.push_str(&format!("(to_real {})", t.smt));
            } else {
                out.push_str(&t.smt);
            }
        }
        GExpr::Level(l) => {
            if real {
                out.push_str(&format!("(to_real {})", level_symbol(gt, *l)));
            } else {
                out.push_str(&level_symbol(gt, *l));
            }
        }
        GExpr::Not(x) => list("not", &[x], false, out),
        GExpr::And(xs) => list("and", &xs.iter().collect::<Vec<_>>(), false, out),
        GExpr::Or(xs) => list("or", &xs.iter().collect::<Vec<_>>(), false, out),
        GExpr::Implies(a, b) => list("=>", &[a, b], false, out),
        GExpr::Iff(a, b) => list("=", &[a, b], false, out),
        GExpr::Cmp(op, a, b) => {
            let r = (is_numeric(gt, a) || is_numeric(gt, b)) && (is_real(gt, a) || is_real(gt, b));
            match op {
                CmpOp::Ne => {
                    out.push_str("(not ");
                    list("=", &[a, b], r, out);
                    out.push(')');
                }
                _ => {
                    let sym = match op {
                        CmpOp::Eq => "=",
                        CmpOp::Lt => "<",
                        CmpOp::Le => "<=",
                        CmpOp::Gt => ">",
                        CmpOp::Ge => ">=",
                        CmpOp::Ne => unreachable!(),
                    };
                    list(sym, &[a, b], r, out)
                }
            }
        }
        GExpr::Sum(xs) => {
            let r = real || is_real(gt, e);
            list("+", &xs.iter().collect::<Vec<_>>(), r, out)
        }
        GExpr::Arith(op, a, b) => {
            let (sym, r) = match op {
                ArithOp::Add => ("+", real || is_real(gt, e)),
                ArithOp::Sub => ("-", real || is_real(gt, e)),
                ArithOp::Mul => ("*", real || is_real(gt, e)),
                ArithOp::Div => ("/", true),
            };
            list(sym, &[a, b], r, out)
        }
        GExpr::Neg(x) => list("-", &[x], real || is_real(gt, e), out),
        GExpr::Ite(c, a, b) => {
            let r = real || is_real(gt, e);
            out.push_str("(ite ");
            emit(gt, c, false, out);
            out.push(' ');
            emit(gt, a, r, out);
            out.push(' ');
            emit(gt, b, r, out);
            out.push(')');
        }
    }
}
