use std::fmt::Write;

use super::ast::*;
use crate::value::format_decimal;

const INDENT: &str = "    ";

/// Renders a knowledge base in concrete syntax. The output re-parses to a tree
/// equal to `kb` (spans aside).
pub fn print_kb(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for v in &kb.vocabularies {
        print_vocabulary(&mut out, v);
        out.push('\n');
    }
    for t in &kb.theories {
        writeln!(out, "theory {}:{} {{", t.name, t.vocabulary).unwrap();
        for item in &t.items {
            match item {
                TheoryItem::Axiom(e) => writeln!(out, "{INDENT}{}.", print_expr(e)).unwrap(),
                TheoryItem::Definition(d) => {
                    writeln!(out, "{INDENT}{{").unwrap();
                    for r in &d.rules {
                        writeln!(out, "{INDENT}{INDENT}{}", print_rule(r)).unwrap();
                    }
                    writeln!(out, "{INDENT}}}").unwrap();
                }
            }
        }
        out.push_str("}\n\n");
    }
    for s in &kb.structures {
        writeln!(out, "structure {}:{} {{", s.name, s.vocabulary).unwrap();
        for e in &s.enumerations {
            writeln!(out, "{INDENT}{}", print_enumeration(e)).unwrap();
        }
        out.push_str("}\n\n");
    }
    out
}

fn print_vocabulary(out: &mut String, v: &Vocabulary) {
    writeln!(out, "vocabulary {} {{", v.name).unwrap();
    for t in &v.types {
        write!(out, "{INDENT}type {}", t.name).unwrap();
        if let Some(b) = &t.base {
            write!(out, " <: {b}").unwrap();
        }
        if let Some(cs) = &t.constructors {
            write!(out, " := {{{}}}", join(cs.iter().map(print_tuple))).unwrap();
        }
        out.push('\n');
    }
    for s in &v.symbols {
        writeln!(out, "{INDENT}{}: {}", s.name, s.signature).unwrap();
    }
    out.push_str("}\n");
}

pub fn print_rule(r: &Rule) -> String {
    let mut s = String::new();
    if !r.vars.is_empty() {
        write!(s, "!{}: ", print_binders(&r.vars)).unwrap();
    }
    s.push_str(&print_head(&r.head));
    if let Some(b) = &r.body {
        write!(s, " <- {}", print_expr(b)).unwrap();
    }
    s.push('.');
    s
}

pub fn print_head(h: &Head) -> String {
    let mut s = format!("{}({})", h.symbol, join(h.args.iter().map(print_expr)));
    if let Some(v) = &h.value {
        write!(s, " = {}", print_at(v, Level::Additive)).unwrap();
    }
    s
}

pub fn print_enumeration(e: &Enumeration) -> String {
    let body = match &e.body {
        EnumBody::Tuples(ts) => format!("{{{}}}", join(ts.iter().map(print_tuple))),
        EnumBody::Map(entries) => format!(
            "{{{}}}",
            join(entries.iter().map(|(args, v)| {
                let lhs = if args.len() == 1 {
                    args[0].to_string()
                } else {
                    format!("({})", join(args.iter().map(|a| a.to_string())))
                };
                format!("{lhs} -> {v}")
            }))
        ),
        EnumBody::Constant(v) => v.to_string(),
    };
    format!("{} := {}", e.target, body)
}

fn print_tuple(t: &EnumTuple) -> String {
    match t {
        EnumTuple::Range(a, b) => format!("{a}..{b}"),
        EnumTuple::Tuple(es) if es.len() == 1 => es[0].to_string(),
        EnumTuple::Tuple(es) => format!("({})", join(es.iter().map(|e| e.to_string()))),
    }
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(", ")
}

pub fn print_binders(bs: &[Binder]) -> String {
    join(bs.iter().map(|b| format!("{} in {}", b.name, b.ty)))
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Open,
    Iff,
    Implies,
    Or,
    And,
    Cmp,
    Additive,
    Multiplicative,
    Unary,
    Primary,
}

fn level_of(e: &Expr) -> Level {
    match &e.kind {
        ExprKind::Quant(..) | ExprKind::Ite(..) => Level::Open,
        ExprKind::Iff(..) => Level::Iff,
        ExprKind::Implies(..) => Level::Implies,
        ExprKind::Or(..) => Level::Or,
        ExprKind::And(..) => Level::And,
        ExprKind::Cmp(..) => Level::Cmp,
        ExprKind::Arith(ArithOp::Add | ArithOp::Sub, ..) => Level::Additive,
        ExprKind::Arith(..) => Level::Multiplicative,
        ExprKind::Not(_) | ExprKind::Neg(_) => Level::Unary,
        ExprKind::Int(i) if i.sign() == num::bigint::Sign::Minus => Level::Unary,
        ExprKind::Real(r) if r < &num::zero() => Level::Unary,
        _ => Level::Primary,
    }
}

pub fn print_expr(e: &Expr) -> String {
    print_at(e, Level::Open)
}

fn print_at(e: &Expr, min: Level) -> String {
    let s = print_raw(e);
    if level_of(e) < min {
        format!("({s})")
    } else {
        s
    }
}

fn print_raw(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Bool(b) => b.to_string(),
        ExprKind::Int(i) => i.to_string(),
        ExprKind::Real(r) => format_decimal(r),
        ExprKind::Ident(s) => s.clone(),
        ExprKind::ConceptLit(s) => format!("`{s}"),
        ExprKind::App(f, args) => format!("{f}({})", join(args.iter().map(print_expr))),
        ExprKind::Not(x) => format!("~{}", print_at(x, Level::Unary)),
        ExprKind::Neg(x) => format!("-{}", print_at(x, Level::Unary)),
        ExprKind::And(a, b) => binary(a, "&", b, Level::And, Level::Cmp),
        ExprKind::Or(a, b) => binary(a, "|", b, Level::Or, Level::And),
        ExprKind::Implies(a, b) => binary(a, "=>", b, Level::Or, Level::Implies),
        ExprKind::Iff(a, b) => binary(a, "<=>", b, Level::Iff, Level::Implies),
        ExprKind::Cmp(first, rest) => {
            let mut s = print_at(first, Level::Additive);
            for (op, x) in rest {
                write!(s, " {} {}", op.symbol(), print_at(x, Level::Additive)).unwrap();
            }
            s
        }
        ExprKind::Arith(op, a, b) => {
            let (l, r) = match op {
                ArithOp::Add | ArithOp::Sub => (Level::Additive, Level::Multiplicative),
                ArithOp::Mul | ArithOp::Div => (Level::Multiplicative, Level::Unary),
            };
            format!("{} {} {}", print_at(a, l), op.symbol(), print_at(b, r))
        }
        ExprKind::Quant(q, bs, body) => {
            let sym = match q {
                Quantifier::Forall => "!",
                Quantifier::Exists => "?",
            };
            format!("{sym}{}: {}", print_binders(bs), print_expr(body))
        }
        ExprKind::Count(bs, body) => format!("#{{{}: {}}}", print_binders(bs), print_expr(body)),
        ExprKind::Agg(op, bs, t) => format!(
            "{}(lambda {}: {})",
            op.keyword(),
            print_binders(bs),
            print_expr(t)
        ),
        ExprKind::ConceptApp(c, args) => format!(
            "$({})({})",
            print_expr(c),
            join(args.iter().map(print_expr))
        ),
        ExprKind::Ite(c, t, f) => format!(
            "if {} then {} else {}",
            print_expr(c),
            print_expr(t),
            print_expr(f)
        ),
    }
}

fn binary(a: &Expr, op: &str, b: &Expr, left: Level, right: Level) -> String {
    format!("{} {op} {}", print_at(a, left), print_at(b, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_expr, parse_kb};

    fn roundtrip(src: &str) {
        let kb = parse_kb(src).unwrap();
        let printed = print_kb(&kb);
        let again = parse_kb(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
        assert_eq!(kb, again, "{printed}");
    }

    #[test]
    fn voting_roundtrip() {
        roundtrip(
            "vocabulary V { age: () -> Int  vote: () -> Bool } theory T:V { vote() <=> 18 =< age(). }",
        );
    }

    #[test]
    fn enumeration_is_verbatim_modulo_whitespace() {
        let kb = parse_kb("structure S:V { Person := {Bob, Alice} }").unwrap();
        assert_eq!(
            print_enumeration(&kb.structures[0].enumerations[0]),
            "Person := {Bob, Alice}"
        );
        roundtrip("structure S:V { weight := {Bob -> 80, Alice -> 80} edge := {(1, 2)} T := {0..120} a := 2.5 }");
    }

    #[test]
    fn cardinality_roundtrips() {
        let e = parse_expr("#{x in Person: p(x)}").unwrap();
        assert_eq!(print_expr(&e), "#{x in Person: p(x)}");
        assert_eq!(parse_expr(&print_expr(&e)).unwrap(), e);
    }

    #[test]
    fn parenthesization_preserves_structure() {
        for src in [
            "(a() & b()) & c()",
            "a() & (b() & c())",
            "(a() => b()) => c()",
            "a() => b() => c()",
            "(!x in T: p(x)) & q()",
            "~(a() | b())",
            "(1 - 2) - 3",
            "1 - (2 - 3)",
            "-f() * 2",
            "(a() = b()) = c()",
            "(if p() then 1 else 2) + 3",
            "$(`s)(x) & sum(lambda x in T: f(x)) > 2",
            "18.5 =< BMI() < 25",
        ] {
            let e = parse_expr(src).unwrap();
            let p = print_expr(&e);
            assert_eq!(parse_expr(&p).unwrap(), e, "{src} printed as {p}");
        }
    }

    #[test]
    fn definitions_and_types_roundtrip() {
        roundtrip(
            "vocabulary V { type Node := {1..3} type Color := {Red, Green} type W <: Real
               edge, tc: Node * Node -> Bool  pick: () -> Concept[Node -> Bool] }
             theory T:V {
               { tc(x, y) <- edge(x, y). tc(x, y) <- ?z in Node: tc(x, z) & tc(z, y). }
               { !x in Node: f(x) = x + 1 <- true. g() = 2. }
             }",
        );
    }
}
