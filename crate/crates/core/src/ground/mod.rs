//! Grounding: expands quantifiers, aggregates and concept applications over
//! finite extensions and reduces definitions, producing labeled quantifier-free
//! assertions over a fixed symbol table.

mod definitions;
pub mod expr;

use std::collections::HashMap;
use std::fmt::{self, Write};

use indexmap::IndexMap;
use num::BigRational;
use serde::Serialize;
use thiserror::Error;

pub use expr::{GExpr, Polarity, Render};
use expr::*;

use crate::check::{check_expr, TypedKB};
use crate::interp::{Origin, PartialStructure, Term};
use crate::lang::{parse_expr, AggOp, CmpOp, Quantifier, Span};
use crate::types::{Bound, NumKind, TExpr, TKind, Type, TypeKind};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("{span}: cannot quantify over unbounded type {ty}")]
    InfiniteQuantification { ty: String, span: Span },
    #[error("definition is not stratified: {0}")]
    UnstratifiedDefinition(String),
    #[error("recursive function definitions are not supported: {0}")]
    RecursiveFunction(String),
    #[error("{span}: rule head arguments must evaluate to domain elements")]
    NonGroundHead { span: Span },
    #[error("{span}: aggregate over an empty set")]
    EmptyAggregate { span: Span },
    #[error("{0}")]
    Invalid(String),
}

/// Solver-level sort of a ground term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SortKind {
    Bool,
    Int,
    Real,
    /// A finite non-numeric sort, by name.
    Finite(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermInfo {
    pub term: Term,
    pub ty: Type,
    pub sort: SortKind,
    /// Possible values when the result type is finite.
    pub range: Option<Vec<Value>>,
    /// Solver identifier.
    pub smt: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelVar {
    pub term: usize,
    pub max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AssertionKind {
    Axiom,
    Rule,
    Completion,
    Fact,
    Background,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assertion {
    pub label: String,
    pub expr: GExpr,
    pub kind: AssertionKind,
    /// Source text shown in explanations.
    pub source: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomKind {
    Propositional,
    Equality,
    Comparison,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundAtom {
    pub text: String,
    pub kind: AtomKind,
    pub expr: GExpr,
    pub terms: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GroundTheory {
    pub structure: PartialStructure,
    pub terms: Vec<TermInfo>,
    pub term_ids: HashMap<Term, usize>,
    pub levels: Vec<LevelVar>,
    /// Finite non-numeric sorts and their elements.
    pub sorts: IndexMap<String, Vec<Value>>,
    pub background: Vec<Assertion>,
    pub assertions: Vec<Assertion>,
    /// User facts of the structure, one unit assertion each.
    pub facts: Vec<Assertion>,
    pub atoms: Vec<GroundAtom>,
    pub atom_ids: HashMap<GExpr, usize>,
}

pub fn sort_name(t: &Type) -> String {
    t.to_string()
}

/// Grounds every theory over the structure's vocabulary.
pub fn ground_theory(tkb: &TypedKB, s: &PartialStructure) -> Result<GroundTheory, GroundError> {
    let theories: Vec<_> = tkb.theories.iter().filter(|t| t.vocabulary == s.vocab.name).collect();
    // enumerated defined symbols stay open so that their enumeration is
    // checked against the definition, levels included
    let defined: Vec<String> = theories
        .iter()
        .flat_map(|t| &t.definitions)
        .flat_map(|d| d.defined.iter().cloned())
        .collect();
    let mut gt = GroundTheory::new(s.clone(), &defined);
    let mut g = Grounder { gt: &mut gt };
    let mut axiom_no = 0;
    let mut def_no = 0;
    for th in &theories {
        for a in &th.axioms {
            axiom_no += 1;
            let e = g.ground(&a.expr, &mut Vec::new())?;
            g.gt.assertions.push(Assertion {
                label: format!("A{axiom_no}"),
                expr: e,
                kind: AssertionKind::Axiom,
                source: a.source.clone(),
            });
        }
        for d in &th.definitions {
            def_no += 1;
            let out = definitions::reduce(&mut g, d, def_no)?;
            g.gt.assertions.extend(out);
        }
    }
    let facts: Vec<(Term, Value)> = s
        .assignments
        .iter()
        .filter(|(t, a)| a.origin == Origin::User || defined.contains(&t.symbol))
        .map(|(t, a)| (t.clone(), a.value.clone()))
        .collect();
    for (t, v) in facts {
        let f = gt.fact(&t, &v)?;
        gt.facts.push(f);
    }
    gt.build_atoms();
    Ok(gt)
}

pub(crate) type Env = Vec<(String, Value)>;

impl GroundTheory {
    fn new(structure: PartialStructure, defined: &[String]) -> GroundTheory {
        let mut gt = GroundTheory {
            structure,
            terms: Vec::new(),
            term_ids: HashMap::new(),
            levels: Vec::new(),
            sorts: IndexMap::new(),
            background: Vec::new(),
            assertions: Vec::new(),
            facts: Vec::new(),
            atoms: Vec::new(),
            atom_ids: HashMap::new(),
        };
        let s = gt.structure.clone();
        for (name, info) in &s.vocab.types {
            if info.kind == TypeKind::Symbolic {
                gt.sorts.insert(name.clone(), s.extensions[name].clone());
            }
        }
        for sym in s.vocab.symbols.values() {
            if s.is_enumerated(&sym.name) && !defined.contains(&sym.name) {
                continue;
            }
            let result = &sym.sig.result;
            let sort = match (result, s.vocab.num_kind(result)) {
                (Type::Bool, _) => SortKind::Bool,
                (_, Some(NumKind::Int)) => SortKind::Int,
                (_, Some(NumKind::Real)) => SortKind::Real,
                _ => {
                    let name = sort_name(result);
                    if !gt.sorts.contains_key(&name) {
                        gt.sorts.insert(name.clone(), s.extension(result).unwrap_or_default());
                    }
                    SortKind::Finite(name)
                }
            };
            let range = match result {
                Type::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
                t => s.extension(t),
            };
            for term in s.terms_of(&sym.name) {
                let id = gt.terms.len();
                gt.term_ids.insert(term.clone(), id);
                gt.terms.push(TermInfo {
                    smt: format!("|{term}|"),
                    term,
                    ty: result.clone(),
                    sort: sort.clone(),
                    range: range.clone(),
                });
            }
        }
        for id in 0..gt.terms.len() {
            let info = &gt.terms[id];
            if !matches!(info.sort, SortKind::Int | SortKind::Real) {
                continue;
            }
            let Some(range) = info.range.clone() else {
                continue;
            };
            let label = format!("B{}", gt.background.len() + 1);
            let expr = membership(GExpr::Term(id), &range);
            gt.background.push(Assertion {
                label,
                expr,
                kind: AssertionKind::Background,
                source: format!("{} is in {}", info.term, info.ty),
            });
        }
        gt
    }

    pub fn term_text(&self, id: usize) -> String {
        self.terms[id].term.to_string()
    }

    pub fn level_text(&self, id: usize) -> String {
        format!("level({})", self.term_text(self.levels[id].term))
    }

    pub fn render(&self, e: &GExpr) -> String {
        Render {
            expr: e,
            term: &|i| self.term_text(i),
            level: &|i| self.level_text(i),
        }
        .to_string()
    }

    /// Ground expression for a value of the given type.
    pub fn value_expr(&mut self, v: Value, ty: &Type) -> GExpr {
        match (&v, ty) {
            (Value::Bool(_) | Value::Num(_), _) => GExpr::Const(v),
            _ => {
                let name = sort_name(ty);
                if !self.sorts.contains_key(&name) {
                    let ext = self.structure.extension(ty).unwrap_or_default();
                    self.sorts.insert(name.clone(), ext);
                }
                GExpr::Elem(name, v)
            }
        }
    }

    /// The ground expression standing for an applied term: its enumerated
    /// value, or its symbol-table entry.
    pub fn term_expr(&mut self, t: &Term) -> Option<GExpr> {
        if let Some(id) = self.term_ids.get(t) {
            return Some(GExpr::Term(*id));
        }
        let a = self.structure.lookup(t)?.clone();
        let ty = self.structure.vocab.symbol(&t.symbol)?.sig.result.clone();
        Some(self.value_expr(a.value, &ty))
    }

    /// Unit assertion `term = value` for a user fact.
    pub fn fact(&mut self, t: &Term, v: &Value) -> Result<Assertion, GroundError> {
        let lhs = self
            .term_expr(t)
            .ok_or_else(|| GroundError::Invalid(format!("unknown term {t}")))?;
        let ty = self.structure.vocab.symbol(&t.symbol).unwrap().sig.result.clone();
        let rhs = self.value_expr(v.clone(), &ty);
        Ok(Assertion {
            label: format!("F:{t}"),
            expr: cmp(CmpOp::Eq, lhs, rhs),
            kind: AssertionKind::Fact,
            source: format!("{t} = {v}"),
        })
    }

    /// Grounds a closed typed expression (objective, literal) against this
    /// theory's symbol table.
    pub fn ground_expr(&mut self, e: &TExpr) -> Result<GExpr, GroundError> {
        Grounder { gt: self }.ground(e, &mut Vec::new())
    }

    /// Parses, type checks and grounds a closed expression.
    pub fn parse_ground(&mut self, text: &str) -> Result<(GExpr, Type), GroundError> {
        let e = parse_expr(text).map_err(|e| GroundError::Invalid(e.to_string()))?;
        let t = check_expr(&self.structure.vocab, &e).map_err(|e| GroundError::Invalid(e.to_string()))?;
        let ty = t.ty.clone();
        Ok((self.ground_expr(&t)?, ty))
    }

    fn build_atoms(&mut self) {
        let mut atoms: Vec<(GExpr, AtomKind)> = Vec::new();
        for (id, info) in self.terms.iter().enumerate() {
            match (&info.sort, &info.range) {
                (SortKind::Bool, _) => atoms.push((GExpr::Term(id), AtomKind::Propositional)),
                (_, Some(range)) => {
                    for v in range {
                        let rhs = match &info.sort {
                            SortKind::Finite(s) => GExpr::Elem(s.clone(), v.clone()),
                            _ => GExpr::Const(v.clone()),
                        };
                        atoms.push((
                            GExpr::Cmp(CmpOp::Eq, Box::new(GExpr::Term(id)), Box::new(rhs)),
                            AtomKind::Equality,
                        ));
                    }
                }
                _ => {}
            }
        }
        for a in &self.assertions {
            a.expr.visit(&mut |e| {
                if let GExpr::Cmp(..) = e {
                    if !e.terms().is_empty() && !e.has_level() {
                        atoms.push((e.clone(), AtomKind::Comparison));
                    }
                }
            });
        }
        for (e, kind) in atoms {
            if self.atom_ids.contains_key(&e) {
                continue;
            }
            self.atom_ids.insert(e.clone(), self.atoms.len());
            self.atoms.push(GroundAtom {
                text: self.render(&e),
                kind,
                terms: e.terms(),
                expr: e,
            });
        }
    }

    /// Readable dump, one labeled assertion per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for a in self.background.iter().chain(&self.assertions).chain(&self.facts) {
            writeln!(out, "[{}] {}", a.label, self.render(&a.expr)).unwrap();
        }
        out
    }
}

impl fmt::Display for GroundTheory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// `t` takes one of the listed numeric values; contiguous integer ranges
/// become a pair of bounds.
fn membership(t: GExpr, range: &[Value]) -> GExpr {
    let nums: Vec<&BigRational> = range.iter().filter_map(|v| v.as_num()).collect();
    let contiguous = !nums.is_empty()
        && nums.iter().all(|n| n.is_integer())
        && nums.windows(2).all(|w| w[1] - w[0] == BigRational::from_integer(1.into()));
    if contiguous {
        and(vec![
            cmp(CmpOp::Le, GExpr::num(nums[0].clone()), t.clone()),
            cmp(CmpOp::Le, t, GExpr::num(nums[nums.len() - 1].clone())),
        ])
    } else {
        or(range
            .iter()
            .map(|v| cmp(CmpOp::Eq, t.clone(), GExpr::Const(v.clone())))
            .collect())
    }
}

pub(crate) struct Grounder<'a> {
    pub gt: &'a mut GroundTheory,
}

impl Grounder<'_> {
    pub(crate) fn tuples(&self, bounds: &[Bound], span: Span) -> Result<Vec<Vec<Value>>, GroundError> {
        let types: Vec<Type> = bounds.iter().map(|(_, t)| t.clone()).collect();
        for t in &types {
            if self.gt.structure.extension(t).is_none() {
                return Err(GroundError::InfiniteQuantification {
                    ty: t.to_string(),
                    span,
                });
            }
        }
        Ok(self.gt.structure.tuples(&types))
    }

    /// Grounds `body` once per binding of `bounds`.
    fn expand(
        &mut self,
        bounds: &[Bound],
        body: &TExpr,
        span: Span,
        env: &mut Env,
    ) -> Result<Vec<GExpr>, GroundError> {
        let mut out = Vec::new();
        for vals in self.tuples(bounds, span)? {
            let mark = env.len();
            env.extend(bounds.iter().map(|(n, _)| n.clone()).zip(vals));
            let r = self.ground(body, env);
            env.truncate(mark);
            out.push(r?);
        }
        Ok(out)
    }

    /// Applies `symbol` to ground arguments, splitting on the possible values
    /// of any non-constant argument.
    fn app(&mut self, symbol: &str, args: Vec<GExpr>) -> Result<GExpr, GroundError> {
        let sig = self
            .gt
            .structure
            .vocab
            .symbol(symbol)
            .ok_or_else(|| GroundError::Invalid(format!("unknown symbol `{symbol}`")))?
            .sig
            .clone();
        let open: Vec<usize> = (0..args.len()).filter(|&i| args[i].as_value().is_none()).collect();
        if open.is_empty() {
            let vals = args.iter().map(|a| a.as_value().unwrap().clone()).collect();
            return self.app_values(symbol, vals, &sig.result);
        }
        let open_types: Vec<Type> = open.iter().map(|&i| sig.args[i].clone()).collect();
        let cases = self.gt.structure.tuples(&open_types);
        let mut acc: Option<GExpr> = None;
        for case in cases.into_iter().rev() {
            let mut vals: Vec<Value> = args.iter().map(|a| a.as_value().cloned().unwrap_or(Value::Bool(false))).collect();
            let mut conds = Vec::new();
            for (k, &i) in open.iter().enumerate() {
                vals[i] = case[k].clone();
                let ve = self.gt.value_expr(case[k].clone(), &sig.args[i]);
                conds.push(cmp(CmpOp::Eq, args[i].clone(), ve));
            }
            let branch = self.app_values(symbol, vals, &sig.result)?;
            acc = Some(match acc {
                None => branch,
                Some(rest) => ite(and(conds), branch, rest),
            });
        }
        acc.ok_or_else(|| GroundError::Invalid(format!("`{symbol}` has an empty argument type")))
    }

    fn app_values(&mut self, symbol: &str, vals: Vec<Value>, result: &Type) -> Result<GExpr, GroundError> {
        let t = Term::new(symbol, vals);
        match self.gt.term_expr(&t) {
            Some(e) => Ok(e),
            None => {
                // enumerated predicates are closed; anything else is out of domain
                if *result == Type::Bool {
                    Ok(FALSE)
                } else {
                    Err(GroundError::Invalid(format!("{t} is outside the domain of `{symbol}`")))
                }
            }
        }
    }

    pub(crate) fn ground(&mut self, e: &TExpr, env: &mut Env) -> Result<GExpr, GroundError> {
        Ok(match &e.kind {
            TKind::Const(v) => self.gt.value_expr(v.clone(), &e.ty),
            TKind::Var(name) => {
                let v = env
                    .iter()
                    .rev()
                    .find(|(n, _)| n == name)
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| GroundError::Invalid(format!("unbound variable `{name}`")))?;
                self.gt.value_expr(v, &e.ty)
            }
            TKind::App(symbol, args) => {
                let gargs = args
                    .iter()
                    .map(|a| self.ground(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                self.app(symbol, gargs)?
            }
            TKind::ConceptApp(c, args) => {
                let gc = self.ground(c, env)?;
                let gargs = args
                    .iter()
                    .map(|a| self.ground(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                if let Some(Value::Concept(name)) = gc.as_value() {
                    let name = name.clone();
                    return self.app(&name, gargs);
                }
                let candidates = self.gt.structure.extension(&c.ty).unwrap_or_default();
                let mut acc: Option<GExpr> = None;
                for k in candidates.into_iter().rev() {
                    let Value::Concept(name) = &k else { continue };
                    let branch = self.app(name, gargs.clone())?;
                    let ke = self.gt.value_expr(k.clone(), &c.ty);
                    acc = Some(match acc {
                        None => branch,
                        Some(rest) => ite(cmp(CmpOp::Eq, gc.clone(), ke), branch, rest),
                    });
                }
                acc.ok_or_else(|| GroundError::Invalid(format!("no concepts of type {}", c.ty)))?
            }
            TKind::Not(x) => not(self.ground(x, env)?),
            TKind::And(xs) => {
                let mut out = Vec::new();
                for x in xs {
                    let g = self.ground(x, env)?;
                    if g == FALSE {
                        return Ok(FALSE);
                    }
                    out.push(g);
                }
                and(out)
            }
            TKind::Or(xs) => {
                let mut out = Vec::new();
                for x in xs {
                    let g = self.ground(x, env)?;
                    if g == TRUE {
                        return Ok(TRUE);
                    }
                    out.push(g);
                }
                or(out)
            }
            TKind::Implies(a, b) => implies(self.ground(a, env)?, self.ground(b, env)?),
            TKind::Iff(a, b) => iff(self.ground(a, env)?, self.ground(b, env)?),
            TKind::Cmp(first, rest) => {
                let mut prev = self.ground(first, env)?;
                let mut links = Vec::new();
                for (op, x) in rest {
                    let next = self.ground(x, env)?;
                    links.push(cmp(*op, prev, next.clone()));
                    prev = next;
                }
                and(links)
            }
            TKind::Arith(op, a, b) => arith(*op, self.ground(a, env)?, self.ground(b, env)?),
            TKind::Neg(x) => neg(self.ground(x, env)?),
            TKind::Quant(q, bounds, body) => {
                let parts = self.expand(bounds, body, e.span, env)?;
                match q {
                    Quantifier::Forall => and(parts),
                    Quantifier::Exists => or(parts),
                }
            }
            TKind::Count(bounds, body) => {
                let parts = self.expand(bounds, body, e.span, env)?;
                let one = GExpr::num(BigRational::from_integer(1.into()));
                let zero = GExpr::num(BigRational::from_integer(0.into()));
                sum(parts
                    .into_iter()
                    .map(|p| ite(p, one.clone(), zero.clone()))
                    .collect())
            }
            TKind::Agg(op, bounds, term) => {
                let parts = self.expand(bounds, term, e.span, env)?;
                match op {
                    AggOp::Sum => sum(parts),
                    AggOp::Min | AggOp::Max => {
                        if parts.is_empty() {
                            return Err(GroundError::EmptyAggregate { span: e.span });
                        }
                        extremum(parts, *op == AggOp::Min)
                    }
                }
            }
            TKind::Ite(c, a, b) => ite(
                self.ground(c, env)?,
                self.ground(a, env)?,
                self.ground(b, env)?,
            ),
        })
    }
}

/// Minimum (or maximum) of finitely many terms as an if-then-else chain:
/// the first term not exceeded by any later term is the extremum.
fn extremum(parts: Vec<GExpr>, min: bool) -> GExpr {
    let op = if min { CmpOp::Le } else { CmpOp::Ge };
    let n = parts.len();
    let mut acc = parts[n - 1].clone();
    for i in (0..n - 1).rev() {
        let cond = and((i + 1..n)
            .map(|j| cmp(op, parts[i].clone(), parts[j].clone()))
            .collect());
        acc = ite(cond, parts[i].clone(), acc);
    }
    acc
}

/// Facts used to simplify a theory: truth values of atoms and values of terms.
#[derive(Clone, Debug, Default)]
pub struct Facts {
    pub atoms: HashMap<GExpr, bool>,
    pub values: HashMap<usize, Value>,
}

/// Substitutes known atoms and term values and folds the result; assertions
/// that reduce to true are dropped. Background assertions are kept as they are.
pub fn simplify(gt: &GroundTheory, facts: &Facts) -> GroundTheory {
    let mut out = gt.clone();
    let sorts: Vec<Option<String>> = gt
        .terms
        .iter()
        .map(|t| match &t.sort {
            SortKind::Finite(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let mut sub = |e: &GExpr| -> Option<GExpr> {
        if let Some(b) = facts.atoms.get(e) {
            return Some(GExpr::bool(*b));
        }
        if let GExpr::Term(i) = e {
            if let Some(v) = facts.values.get(i) {
                return Some(match &sorts[*i] {
                    Some(s) => GExpr::Elem(s.clone(), v.clone()),
                    None => GExpr::Const(v.clone()),
                });
            }
        }
        None
    };
    for list in [&mut out.assertions, &mut out.facts] {
        let kept: Vec<Assertion> = list
            .iter()
            .map(|a| Assertion {
                expr: a.expr.rewrite(&mut sub),
                ..a.clone()
            })
            .filter(|a| a.expr != TRUE)
            .collect();
        *list = kept;
    }
    out
}

#[cfg(test)]
mod tests;
