use std::fmt;

use num::{BigRational, Zero};

use crate::lang::{ArithOp, CmpOp};
use crate::value::{format_number, Value};

/// A quantifier-free ground expression.
///
/// `Term` and `Level` index into the owning theory's symbol table and level
/// variables. Elements of finite non-numeric types carry their sort name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GExpr {
    Const(Value),
    Elem(String, Value),
    Term(usize),
    Level(usize),
    Not(Box<GExpr>),
    And(Vec<GExpr>),
    Or(Vec<GExpr>),
    Implies(Box<GExpr>, Box<GExpr>),
    Iff(Box<GExpr>, Box<GExpr>),
    Cmp(CmpOp, Box<GExpr>, Box<GExpr>),
    Sum(Vec<GExpr>),
    Arith(ArithOp, Box<GExpr>, Box<GExpr>),
    Neg(Box<GExpr>),
    Ite(Box<GExpr>, Box<GExpr>, Box<GExpr>),
}

pub const TRUE: GExpr = GExpr::Const(Value::Bool(true));
pub const FALSE: GExpr = GExpr::Const(Value::Bool(false));

impl GExpr {
    pub fn bool(b: bool) -> GExpr {
        GExpr::Const(Value::Bool(b))
    }

    pub fn num(n: BigRational) -> GExpr {
        GExpr::Const(Value::Num(n))
    }

    pub fn int(i: i64) -> GExpr {
        GExpr::Const(Value::int(i))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            GExpr::Const(Value::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    /// The value of a constant node.
    pub fn as_value(&self) -> Option<&Value> {
        match self {
            GExpr::Const(v) | GExpr::Elem(_, v) => Some(v),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&GExpr> {
        match self {
            GExpr::Const(_) | GExpr::Elem(..) | GExpr::Term(_) | GExpr::Level(_) => vec![],
            GExpr::Not(x) | GExpr::Neg(x) => vec![x],
            GExpr::And(xs) | GExpr::Or(xs) | GExpr::Sum(xs) => xs.iter().collect(),
            GExpr::Implies(a, b)
            | GExpr::Iff(a, b)
            | GExpr::Cmp(_, a, b)
            | GExpr::Arith(_, a, b) => vec![a, b],
            GExpr::Ite(c, a, b) => vec![c, a, b],
        }
    }

    pub fn visit(&self, f: &mut impl FnMut(&GExpr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Term ids occurring in the expression, in order of first occurrence.
    pub fn terms(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let GExpr::Term(i) = e {
                if !out.contains(i) {
                    out.push(*i);
                }
            }
        });
        out
    }

    pub fn has_level(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, GExpr::Level(_)));
        found
    }

    /// Rebuilds the expression bottom-up through the folding constructors,
    /// replacing any node for which `f` returns a substitute.
    pub fn rewrite(&self, f: &mut impl FnMut(&GExpr) -> Option<GExpr>) -> GExpr {
        if let Some(r) = f(self) {
            return r;
        }
        let mut go = |x: &GExpr| x.rewrite(f);
        match self {
            GExpr::Const(_) | GExpr::Elem(..) | GExpr::Term(_) | GExpr::Level(_) => self.clone(),
            GExpr::Not(x) => not(go(x)),
            GExpr::Neg(x) => neg(go(x)),
            GExpr::And(xs) => and(xs.iter().map(go).collect()),
            GExpr::Or(xs) => or(xs.iter().map(go).collect()),
            GExpr::Sum(xs) => sum(xs.iter().map(go).collect()),
            GExpr::Implies(a, b) => implies(go(a), go(b)),
            GExpr::Iff(a, b) => iff(go(a), go(b)),
            GExpr::Cmp(op, a, b) => cmp(*op, go(a), go(b)),
            GExpr::Arith(op, a, b) => arith(*op, go(a), go(b)),
            GExpr::Ite(c, a, b) => ite(go(c), go(a), go(b)),
        }
    }

    /// Evaluates under total assignments of terms and levels. `None` when a
    /// lookup fails or an operation is undefined (division by zero).
    pub fn eval(
        &self,
        term: &impl Fn(usize) -> Option<Value>,
        level: &impl Fn(usize) -> Option<Value>,
    ) -> Option<Value> {
        let b = |x: &GExpr| x.eval(term, level).and_then(|v| v.as_bool());
        let n = |x: &GExpr| match x.eval(term, level) {
            Some(Value::Num(n)) => Some(n),
            _ => None,
        };
        Some(match self {
            GExpr::Const(v) | GExpr::Elem(_, v) => v.clone(),
            GExpr::Term(i) => term(*i)?,
            GExpr::Level(i) => level(*i)?,
            GExpr::Not(x) => Value::Bool(!b(x)?),
            GExpr::And(xs) => {
                let mut r = true;
                for x in xs {
                    r &= b(x)?;
                }
                Value::Bool(r)
            }
            GExpr::Or(xs) => {
                let mut r = false;
                for x in xs {
                    r |= b(x)?;
                }
                Value::Bool(r)
            }
            GExpr::Implies(x, y) => Value::Bool(!b(x)? || b(y)?),
            GExpr::Iff(x, y) => Value::Bool(b(x)? == b(y)?),
            GExpr::Cmp(op, x, y) => {
                let (x, y) = (x.eval(term, level)?, y.eval(term, level)?);
                Value::Bool(compare(*op, &x, &y)?)
            }
            GExpr::Sum(xs) => {
                let mut acc = BigRational::zero();
                for x in xs {
                    acc += n(x)?;
                }
                Value::Num(acc)
            }
            GExpr::Arith(op, x, y) => Value::Num(arith_values(*op, &n(x)?, &n(y)?)?),
            GExpr::Neg(x) => Value::Num(-n(x)?),
            GExpr::Ite(c, x, y) => {
                if b(c)? {
                    x.eval(term, level)?
                } else {
                    y.eval(term, level)?
                }
            }
        })
    }
}

pub fn compare(op: CmpOp, x: &Value, y: &Value) -> Option<bool> {
    Some(match op {
        CmpOp::Eq => x == y,
        CmpOp::Ne => x != y,
        _ => {
            let (a, b) = (x.as_num()?, y.as_num()?);
            match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                _ => unreachable!(),
            }
        }
    })
}

pub fn arith_values(op: ArithOp, a: &BigRational, b: &BigRational) -> Option<BigRational> {
    Some(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => {
            if b.is_zero() {
                return None;
            }
            a / b
        }
    })
}

pub fn not(e: GExpr) -> GExpr {
    match e {
        GExpr::Const(Value::Bool(b)) => GExpr::bool(!b),
        GExpr::Not(x) => *x,
        e => GExpr::Not(Box::new(e)),
    }
}

fn junction(xs: Vec<GExpr>, is_and: bool) -> GExpr {
    let mut out = Vec::with_capacity(xs.len());
    for x in xs {
        match x {
            GExpr::Const(Value::Bool(b)) if b == is_and => {}
            GExpr::Const(Value::Bool(_)) => return GExpr::bool(!is_and),
            GExpr::And(ys) if is_and => out.extend(ys),
            GExpr::Or(ys) if !is_and => out.extend(ys),
            x => out.push(x),
        }
    }
    match out.len() {
        0 => GExpr::bool(is_and),
        1 => out.pop().unwrap(),
        _ if is_and => GExpr::And(out),
        _ => GExpr::Or(out),
    }
}

pub fn and(xs: Vec<GExpr>) -> GExpr {
    junction(xs, true)
}

pub fn or(xs: Vec<GExpr>) -> GExpr {
    junction(xs, false)
}

pub fn implies(a: GExpr, b: GExpr) -> GExpr {
    match (a.as_bool(), b.as_bool()) {
        (Some(true), _) => b,
        (Some(false), _) | (_, Some(true)) => TRUE,
        (_, Some(false)) => not(a),
        _ => GExpr::Implies(Box::new(a), Box::new(b)),
    }
}

pub fn iff(a: GExpr, b: GExpr) -> GExpr {
    match (a.as_bool(), b.as_bool()) {
        (Some(true), _) => b,
        (Some(false), _) => not(b),
        (_, Some(true)) => a,
        (_, Some(false)) => not(a),
        _ => GExpr::Iff(Box::new(a), Box::new(b)),
    }
}

pub fn cmp(op: CmpOp, a: GExpr, b: GExpr) -> GExpr {
    if let (Some(x), Some(y)) = (a.as_value(), b.as_value()) {
        if let Some(r) = compare(op, x, y) {
            return GExpr::bool(r);
        }
    }
    if matches!(op, CmpOp::Eq | CmpOp::Ne) {
        let positive = op == CmpOp::Eq;
        match (a.as_bool(), b.as_bool()) {
            (Some(v), _) => return if v == positive { b } else { not(b) },
            (_, Some(v)) => return if v == positive { a } else { not(a) },
            _ => {}
        }
    }
    GExpr::Cmp(op, Box::new(a), Box::new(b))
}

pub fn arith(op: ArithOp, a: GExpr, b: GExpr) -> GExpr {
    if let (GExpr::Const(Value::Num(x)), GExpr::Const(Value::Num(y))) = (&a, &b) {
        if let Some(r) = arith_values(op, x, y) {
            return GExpr::num(r);
        }
    }
    GExpr::Arith(op, Box::new(a), Box::new(b))
}

pub fn neg(e: GExpr) -> GExpr {
    match e {
        GExpr::Const(Value::Num(n)) => GExpr::num(-n),
        GExpr::Neg(x) => *x,
        e => GExpr::Neg(Box::new(e)),
    }
}

/// Sum with constants folded into a single trailing summand.
pub fn sum(xs: Vec<GExpr>) -> GExpr {
    let mut acc = BigRational::zero();
    let mut out = Vec::new();
    for x in xs {
        match x {
            GExpr::Const(Value::Num(n)) => acc += n,
            GExpr::Sum(ys) => {
                for y in ys {
                    match y {
                        GExpr::Const(Value::Num(n)) => acc += n,
                        y => out.push(y),
                    }
                }
            }
            x => out.push(x),
        }
    }
    if out.is_empty() {
        return GExpr::num(acc);
    }
    if !acc.is_zero() {
        out.push(GExpr::num(acc));
    }
    if out.len() == 1 {
        out.pop().unwrap()
    } else {
        GExpr::Sum(out)
    }
}

pub fn ite(c: GExpr, a: GExpr, b: GExpr) -> GExpr {
    match c.as_bool() {
        Some(true) => a,
        Some(false) => b,
        None if a == b => a,
        None => match (a.as_bool(), b.as_bool()) {
            (Some(true), Some(false)) => c,
            (Some(false), Some(true)) => not(c),
            _ => GExpr::Ite(Box::new(c), Box::new(a), Box::new(b)),
        },
    }
}

/// Readable rendering; `term` names symbol-table entries, `level` names
/// level variables.
pub struct Render<'a> {
    pub expr: &'a GExpr,
    pub term: &'a dyn Fn(usize) -> String,
    pub level: &'a dyn Fn(usize) -> String,
}

impl fmt::Display for Render<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render(self.expr, self, f, true)
    }
}

fn render(e: &GExpr, r: &Render<'_>, f: &mut fmt::Formatter<'_>, top: bool) -> fmt::Result {
    let atomic = matches!(
        e,
        GExpr::Const(_) | GExpr::Elem(..) | GExpr::Term(_) | GExpr::Level(_) | GExpr::Not(_) | GExpr::Neg(_)
    );
    let paren = !top && !atomic;
    if paren {
        write!(f, "(")?;
    }
    let list = |f: &mut fmt::Formatter<'_>, xs: &[GExpr], sep: &str| -> fmt::Result {
        for (i, x) in xs.iter().enumerate() {
            if i > 0 {
                write!(f, " {sep} ")?;
            }
            render(x, r, f, false)?;
        }
        Ok(())
    };
    match e {
        GExpr::Const(Value::Num(n)) => write!(f, "{}", format_number(n))?,
        GExpr::Const(v) | GExpr::Elem(_, v) => write!(f, "{v}")?,
        GExpr::Term(i) => write!(f, "{}", (r.term)(*i))?,
        GExpr::Level(i) => write!(f, "{}", (r.level)(*i))?,
        GExpr::Not(x) => {
            write!(f, "~")?;
            render(x, r, f, false)?
        }
        GExpr::Neg(x) => {
            write!(f, "-")?;
            render(x, r, f, false)?
        }
        GExpr::And(xs) => list(f, xs, "&")?,
        GExpr::Or(xs) => list(f, xs, "|")?,
        GExpr::Sum(xs) => list(f, xs, "+")?,
        GExpr::Implies(a, b) => list(f, &[(**a).clone(), (**b).clone()], "=>")?,
        GExpr::Iff(a, b) => list(f, &[(**a).clone(), (**b).clone()], "<=>")?,
        GExpr::Cmp(op, a, b) => list(f, &[(**a).clone(), (**b).clone()], op.symbol())?,
        GExpr::Arith(op, a, b) => list(f, &[(**a).clone(), (**b).clone()], op.symbol())?,
        GExpr::Ite(c, a, b) => {
            write!(f, "if ")?;
            render(c, r, f, false)?;
            write!(f, " then ")?;
            render(a, r, f, false)?;
            write!(f, " else ")?;
            render(b, r, f, false)?;
        }
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    Mixed,
}

impl Polarity {
    fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
            Polarity::Mixed => Polarity::Mixed,
        }
    }
}

/// Calls `f` for every term occurrence with the polarity of its position.
/// Terms under arithmetic or comparisons count as mixed.
pub fn occurrences(e: &GExpr, pol: Polarity, f: &mut impl FnMut(usize, Polarity)) {
    match e {
        GExpr::Term(i) => f(*i, pol),
        GExpr::Const(_) | GExpr::Elem(..) | GExpr::Level(_) => {}
        GExpr::Not(x) => occurrences(x, pol.flip(), f),
        GExpr::And(xs) | GExpr::Or(xs) => xs.iter().for_each(|x| occurrences(x, pol, f)),
        GExpr::Implies(a, b) => {
            occurrences(a, pol.flip(), f);
            occurrences(b, pol, f);
        }
        GExpr::Ite(c, a, b) => {
            occurrences(c, Polarity::Mixed, f);
            occurrences(a, pol, f);
            occurrences(b, pol, f);
        }
        GExpr::Iff(..) | GExpr::Cmp(..) | GExpr::Sum(_) | GExpr::Arith(..) | GExpr::Neg(_) => {
            for c in e.children() {
                occurrences(c, Polarity::Mixed, f);
            }
        }
    }
}
