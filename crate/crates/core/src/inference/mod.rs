//! The generic reasoning tasks over a ground theory and a solver session.

mod eval;
pub mod oracle;

use std::collections::HashSet;

use num::{BigInt, BigRational, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::check::TypedKB;
use crate::ground::expr::{cmp, not, or};
use crate::ground::{
    ground_theory, simplify, Assertion, AssertionKind, AtomKind, Facts, GExpr, GroundError,
    GroundTheory, SortKind,
};
use crate::interp::{InterpError, Origin, PartialStructure, Term};
use crate::lang::CmpOp;
use crate::smt::{Model, SmtError, SolverAnswer, SolverConfig, SolverSession, Status};
use crate::types::{NumKind, Type};
use crate::value::Value;

pub use eval::{eval_expr, Interpretation};
pub use oracle::{oracle_enumerate, OracleModel};

/// Tolerance for optimizing real-valued objectives.
pub const EPSILON: (i64, i64) = (1, 1_000_000);
/// Objectives reaching this magnitude are reported unbounded.
pub const PROBE: i64 = 1_000_000_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error("the solver could not decide: {0}")]
    SolverUnknown(String),
    #[error("the theory and the structure are inconsistent")]
    Inconsistent,
    #[error("{0} is not a consequence")]
    NotAConsequence(String),
    #[error("{0} is unbounded")]
    Unbounded(String),
    #[error("{0} is not numeric")]
    NotNumeric(String),
    #[error("{0} is not a Boolean expression")]
    NotBoolean(String),
    #[error("too many candidate structures ({0})")]
    TooLarge(String),
}

pub type Result<T, E = InferenceError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Propagation result over the atom pool of a ground theory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Consequences {
    /// Truth value of each atom in every model, when it has one.
    pub atoms: Vec<Option<bool>>,
    /// Atoms fixed directly by a fact of the structure.
    pub given: Vec<bool>,
    /// Value of each term when all models agree on it.
    pub values: Vec<Option<Value>>,
}

impl Consequences {
    pub fn decided(&self, atom: usize) -> Option<bool> {
        self.atoms[atom]
    }

    /// Atoms determined by propagation rather than given.
    pub fn propagated(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.given[*i])
            .filter_map(|(i, v)| v.map(|v| (i, v)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExplanationItem {
    pub label: String,
    pub kind: AssertionKind,
    pub source: String,
}

/// A subset-minimal inconsistent set of named assertions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Explanation {
    pub items: Vec<ExplanationItem>,
}

impl Explanation {
    pub fn labels(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.label.as_str()).collect()
    }
}

/// Label of the negated literal in an explanation.
pub const NEGATED: &str = "L";

/// One thing propagation decides: an atom's truth value, or the value of a
/// numeric term with no equality atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Item {
    Atom(usize),
    Term(usize),
}

/// A ground theory loaded into a solver: background at depth 0, theory
/// assertions at depth 1, facts at depth 2.
pub struct Reasoner {
    pub gt: GroundTheory,
    solver: SolverSession,
    /// Background-only session for subset checks.
    aux: Option<SolverSession>,
    config: SolverConfig,
    /// Number of solver checks issued, for diagnostics.
    pub checks: usize,
}

impl Reasoner {
    pub fn new(gt: GroundTheory, config: &SolverConfig) -> Result<Reasoner> {
        let mut solver = SolverSession::open(config)?;
        solver.load_background(&gt)?;
        solver.push()?;
        for a in &gt.assertions {
            solver.assert(&gt, &a.label, &a.expr)?;
        }
        solver.push()?;
        for a in &gt.facts {
            solver.assert(&gt, &a.label, &a.expr)?;
        }
        Ok(Reasoner {
            gt,
            solver,
            aux: None,
            config: config.clone(),
            checks: 0,
        })
    }

    pub fn from_kb(tkb: &TypedKB, s: &PartialStructure, config: &SolverConfig) -> Result<Reasoner> {
        Reasoner::new(ground_theory(tkb, s)?, config)
    }

    /// Replaces the structure's user facts.
    pub fn set_structure(&mut self, s: PartialStructure) -> Result<()> {
        self.gt.structure = s;
        let defined_facts: Vec<Assertion> = self
            .gt
            .facts
            .iter()
            .filter(|a| {
                a.expr.terms().first().is_some_and(|&t| {
                    let term = &self.gt.terms[t].term;
                    self.gt.structure.lookup(term).map(|x| x.origin) == Some(Origin::Enumeration)
                })
            })
            .cloned()
            .collect();
        let users: Vec<(Term, Value)> = self
            .gt
            .structure
            .user_facts()
            .map(|(t, v)| (t.clone(), v.clone()))
            .collect();
        let mut facts = defined_facts;
        for (t, v) in users {
            facts.push(self.gt.fact(&t, &v)?);
        }
        self.gt.facts = facts;
        self.solver.pop()?;
        self.solver.push()?;
        for a in &self.gt.facts {
            self.solver.assert(&self.gt, &a.label, &a.expr)?;
        }
        Ok(())
    }

    fn check(&mut self, assumptions: &[Assertion], want_model: bool) -> Result<SolverAnswer> {
        self.checks += 1;
        let a = if want_model {
            self.solver.check_under(&self.gt, assumptions)?
        } else {
            self.solver.check_status(&self.gt, assumptions)?
        };
        if a.status == Status::Unknown {
            return Err(InferenceError::SolverUnknown(
                "check-sat returned unknown (timeout or incompleteness)".into(),
            ));
        }
        Ok(a)
    }

    fn query(label: &str, expr: GExpr) -> Assertion {
        Assertion {
            label: label.into(),
            expr,
            kind: AssertionKind::Fact,
            source: String::new(),
        }
    }

    /// Parses a closed Boolean expression over this theory's vocabulary.
    pub fn literal(&mut self, text: &str) -> Result<GExpr> {
        let (e, ty) = self.gt.parse_ground(text)?;
        if ty != Type::Bool {
            return Err(InferenceError::NotBoolean(text.into()));
        }
        Ok(e)
    }

    /// Model checking: whether the theory has a model expanding the structure.
    pub fn satisfiable(&mut self) -> Result<bool> {
        Ok(self.check(&[], false)?.status == Status::Sat)
    }

    /// A model satisfying the extra assertions too, if any.
    pub fn sat_under(&mut self, extra: &[Assertion]) -> Result<Option<Model>> {
        Ok(self.check(extra, true)?.model)
    }

    /// Some model, if any.
    pub fn model(&mut self) -> Result<Option<Model>> {
        Ok(self.check(&[], true)?.model)
    }

    /// Up to `max` models that differ in the value of at least one term.
    pub fn models(&mut self, max: usize) -> Result<Vec<Model>> {
        let mut out = Vec::new();
        if max == 0 {
            return Ok(out);
        }
        self.solver.push()?;
        let r = self.enumerate(max, &mut out);
        self.solver.pop()?;
        r?;
        Ok(out)
    }

    fn enumerate(&mut self, max: usize, out: &mut Vec<Model>) -> Result<()> {
        while out.len() < max {
            self.checks += 1;
            let a = self.solver.check_in_scope(&self.gt, &[], true)?;
            match a.status {
                Status::Unsat => break,
                Status::Unknown => {
                    return Err(InferenceError::SolverUnknown("model enumeration".into()))
                }
                Status::Sat => {}
            }
            let m = a.model.unwrap();
            let differs: Vec<GExpr> = (0..self.gt.terms.len())
                .map(|i| not(cmp(CmpOp::Eq, GExpr::Term(i), self.value_expr(i, &m.terms[i]))))
                .collect();
            out.push(m);
            if differs.is_empty() {
                break;
            }
            let label = format!("M{}", out.len());
            self.solver.assert(&self.gt, &label, &or(differs))?;
        }
        Ok(())
    }

    fn value_expr(&self, term: usize, v: &Value) -> GExpr {
        match &self.gt.terms[term].sort {
            SortKind::Finite(s) => GExpr::Elem(s.clone(), v.clone()),
            _ => GExpr::Const(v.clone()),
        }
    }

    fn item_expr(&self, item: Item) -> GExpr {
        match item {
            Item::Atom(a) => self.gt.atoms[a].expr.clone(),
            Item::Term(t) => GExpr::Term(t),
        }
    }

    /// Atoms fixed by a fact, with their value.
    fn given_atoms(&self) -> Vec<Option<bool>> {
        self.gt
            .atoms
            .iter()
            .map(|a| {
                if a.kind == AtomKind::Comparison {
                    return None;
                }
                let t = a.terms[0];
                let v = &self.gt.structure.lookup(&self.gt.terms[t].term)?.value;
                Some(match &a.expr {
                    GExpr::Term(_) => v.as_bool()?,
                    GExpr::Cmp(_, _, rhs) => rhs.as_value()? == v,
                    _ => return None,
                })
            })
            .collect()
    }

    /// Numeric terms without equality atoms; their values are decided
    /// separately.
    pub fn value_terms(&self) -> Vec<usize> {
        (0..self.gt.terms.len())
            .filter(|&i| {
                let t = &self.gt.terms[i];
                matches!(t.sort, SortKind::Int | SortKind::Real) && t.range.is_none()
            })
            .collect()
    }

    /// Backbone computation: every atom true (or false) in all models.
    pub fn propagate(&mut self) -> Result<Consequences> {
        let n = self.gt.atoms.len();
        let prev = Consequences {
            atoms: vec![None; n],
            given: vec![false; n],
            values: vec![None; self.gt.terms.len()],
        };
        let all_atoms: Vec<usize> = (0..n).collect();
        let all_terms = self.value_terms();
        self.repropagate(&prev, &all_atoms, &all_terms)
    }

    /// Propagation that only re-tests the listed atoms and value terms; all
    /// other entries of `prev` are kept.
    pub fn repropagate(
        &mut self,
        prev: &Consequences,
        atoms: &[usize],
        terms: &[usize],
    ) -> Result<Consequences> {
        let given = self.given_atoms();
        let mut out = Consequences {
            atoms: prev.atoms.clone(),
            given: given.iter().map(|g| g.is_some()).collect(),
            values: prev.values.clone(),
        };
        let retest: HashSet<usize> = atoms.iter().copied().collect();
        for (i, g) in given.iter().enumerate() {
            if g.is_some() {
                out.atoms[i] = *g;
            } else if prev.given.get(i) == Some(&true) && !retest.contains(&i) {
                out.atoms[i] = None;
            }
        }
        let mut items: Vec<Item> = atoms
            .iter()
            .filter(|&&a| given[a].is_none())
            .map(|&a| Item::Atom(a))
            .collect();
        items.extend(terms.iter().map(|&t| Item::Term(t)));
        let Some(base) = self.check(&[], true)?.model else {
            return Err(InferenceError::Inconsistent);
        };
        let exprs: Vec<GExpr> = items.iter().map(|&it| self.item_expr(it)).collect();
        let first: Vec<Option<Value>> = exprs.iter().map(|e| base.eval(e)).collect();
        let mut open: Vec<bool> = first.iter().map(|v| v.is_some()).collect();
        let mut fixed: Vec<Option<Value>> = vec![None; items.len()];
        for i in 0..items.len() {
            if !open[i] {
                continue;
            }
            open[i] = false;
            let v = first[i].clone().unwrap();
            let flip = match &v {
                Value::Bool(true) => not(exprs[i].clone()),
                Value::Bool(false) => exprs[i].clone(),
                _ => not(cmp(CmpOp::Eq, exprs[i].clone(), GExpr::Const(v.clone()))),
            };
            let a = self.check(&[Self::query("P", flip)], true)?;
            match a.model {
                None => fixed[i] = Some(v),
                Some(m) => {
                    for j in i + 1..items.len() {
                        if open[j] && m.eval(&exprs[j]) != first[j] {
                            open[j] = false;
                        }
                    }
                }
            }
        }
        for (k, item) in items.iter().enumerate() {
            match item {
                Item::Atom(a) => out.atoms[*a] = fixed[k].as_ref().and_then(|v| v.as_bool()),
                Item::Term(t) => out.values[*t] = fixed[k].clone(),
            }
        }
        self.derive_values(&mut out);
        Ok(out)
    }

    /// Term values implied by decided atoms.
    fn derive_values(&self, c: &mut Consequences) {
        let value_terms: HashSet<usize> = self.value_terms().into_iter().collect();
        for t in 0..self.gt.terms.len() {
            if value_terms.contains(&t) {
                continue;
            }
            c.values[t] = None;
        }
        for (i, a) in self.gt.atoms.iter().enumerate() {
            if c.atoms[i] != Some(true) {
                continue;
            }
            match (&a.kind, &a.expr) {
                (AtomKind::Propositional, GExpr::Term(t)) => c.values[*t] = Some(Value::Bool(true)),
                (AtomKind::Equality, GExpr::Cmp(_, _, rhs)) => {
                    c.values[a.terms[0]] = rhs.as_value().cloned()
                }
                _ => {}
            }
        }
        for (i, a) in self.gt.atoms.iter().enumerate() {
            if let (AtomKind::Propositional, GExpr::Term(t), Some(false)) = (&a.kind, &a.expr, c.atoms[i]) {
                c.values[*t] = Some(Value::Bool(false));
            }
        }
    }

    /// Terms occurring in the theory simplified by the consequences, plus
    /// undetermined terms of decided atoms, which the consequences still
    /// constrain. A level variable counts as its atom's term.
    pub fn mentioned(&self, c: &Consequences) -> HashSet<usize> {
        let residual = self.residual(c);
        let mut mentioned: HashSet<usize> = HashSet::new();
        for (i, a) in self.gt.atoms.iter().enumerate() {
            if c.atoms[i].is_some() {
                mentioned.extend(a.terms.iter().filter(|&&t| c.values[t].is_none()));
            }
        }
        for a in residual.assertions.iter().chain(&residual.facts) {
            a.expr.visit(&mut |e| match e {
                GExpr::Term(t) => {
                    mentioned.insert(*t);
                }
                GExpr::Level(l) => {
                    mentioned.insert(self.gt.levels[*l].term);
                }
                _ => {}
            });
        }
        mentioned
    }

    /// Relevance: an undecided atom is irrelevant when none of its terms
    /// occurs in the theory simplified by the consequences.
    pub fn relevance(&self, c: &Consequences) -> Vec<bool> {
        let mentioned = self.mentioned(c);
        self.gt
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                c.atoms[i].is_some() || c.given[i] || a.terms.iter().any(|t| mentioned.contains(t))
            })
            .collect()
    }

    /// The theory with every consequence substituted.
    pub fn residual(&self, c: &Consequences) -> GroundTheory {
        let mut facts = Facts::default();
        for (i, a) in self.gt.atoms.iter().enumerate() {
            if let Some(b) = c.atoms[i] {
                facts.atoms.insert(a.expr.clone(), b);
            }
        }
        for (t, v) in c.values.iter().enumerate() {
            if let Some(v) = v {
                facts.values.insert(t, v.clone());
            }
        }
        simplify(&self.gt, &facts)
    }

    /// Drops the background-only session, e.g. after new sorts were added.
    pub fn reset_aux(&mut self) {
        self.aux = None;
    }

    /// Satisfiability of the background plus exactly these assertions.
    pub fn subset_check(&mut self, set: &[Assertion]) -> Result<SolverAnswer> {
        self.checks += 1;
        let mut aux = match self.aux.take() {
            Some(a) => a,
            None => {
                let mut s = SolverSession::open(&self.config)?;
                s.load_background(&self.gt)?;
                s
            }
        };
        let a = aux.check_status(&self.gt, set);
        self.aux = Some(aux);
        let a = a?;
        if a.status == Status::Unknown {
            return Err(InferenceError::SolverUnknown("subset check".into()));
        }
        Ok(a)
    }

    /// A subset-minimal unsatisfiable subset of `set`, or `None` when the
    /// whole set is satisfiable.
    pub fn minimal_core(&mut self, set: Vec<Assertion>) -> Result<Option<Vec<Assertion>>> {
        let a = self.subset_check(&set)?;
        let Some(core) = a.core else { return Ok(None) };
        let mut current: Vec<Assertion> = set.into_iter().filter(|x| core.contains(&x.label)).collect();
        let mut i = 0;
        while i < current.len() {
            let mut without = current.clone();
            without.remove(i);
            let a = self.subset_check(&without)?;
            match a.core {
                Some(core) => current = without.into_iter().filter(|x| core.contains(&x.label)).collect(),
                None => i += 1,
            }
        }
        Ok(Some(current))
    }

    /// Explanation of a consequence `lit`: a minimal subset of theory,
    /// facts and `~lit` that is inconsistent.
    pub fn explain(&mut self, lit: &GExpr) -> Result<Explanation> {
        let negated = Assertion {
            label: NEGATED.into(),
            expr: not(lit.clone()),
            kind: AssertionKind::Fact,
            source: format!("~({})", self.gt.render(lit)),
        };
        let mut set: Vec<Assertion> = self.gt.assertions.iter().chain(&self.gt.facts).cloned().collect();
        set.push(negated);
        match self.minimal_core(set)? {
            Some(core) => Ok(to_explanation(core)),
            None => Err(InferenceError::NotAConsequence(self.gt.render(lit))),
        }
    }

    /// Explanation for why adding `extra` to theory and facts is inconsistent;
    /// `None` when it is consistent.
    pub fn conflict(&mut self, extra: Assertion) -> Result<Option<Explanation>> {
        let mut set: Vec<Assertion> = self
            .gt
            .assertions
            .iter()
            .chain(&self.gt.facts)
            .filter(|a| a.label != extra.label)
            .cloned()
            .collect();
        set.push(extra);
        Ok(self.minimal_core(set)?.map(to_explanation))
    }

    /// Optimal value of a numeric expression and a model attaining it. Real
    /// objectives are exact when attained, else within [`EPSILON`].
    pub fn optimize(&mut self, text: &str, dir: Direction) -> Result<(Value, Model)> {
        let (e, ty) = self.gt.parse_ground(text)?;
        let integral = match self.gt.structure.vocab.num_kind(&ty) {
            Some(NumKind::Int) => true,
            Some(NumKind::Real) => false,
            None => return Err(InferenceError::NotNumeric(text.into())),
        };
        self.optimize_expr(&e, integral, dir, text)
    }

    pub fn optimize_expr(
        &mut self,
        e: &GExpr,
        integral: bool,
        dir: Direction,
        text: &str,
    ) -> Result<(Value, Model)> {
        let obj = match dir {
            Direction::Minimize => e.clone(),
            Direction::Maximize => crate::ground::expr::neg(e.clone()),
        };
        let num = |n: &BigRational| GExpr::num(n.clone());
        let value_of = |m: &Model| -> Result<BigRational> {
            match m.eval(&obj) {
                Some(Value::Num(n)) => Ok(n),
                _ => Err(InferenceError::NotNumeric(text.into())),
            }
        };
        let Some(mut witness) = self.model()? else {
            return Err(InferenceError::Inconsistent);
        };
        let mut best = value_of(&witness)?;
        let probe = BigRational::from_integer(BigInt::from(-PROBE));
        let at_most = |v: &BigRational| Self::query("O", cmp(CmpOp::Le, obj.clone(), num(v)));
        if best > probe {
            if self.check(&[at_most(&probe)], false)?.status == Status::Sat {
                return Err(InferenceError::Unbounded(text.into()));
            }
        } else {
            return Err(InferenceError::Unbounded(text.into()));
        }
        // gallop down until infeasible, then bisect (lo infeasible, best feasible)
        let one = BigRational::from_integer(BigInt::from(1));
        let mut step = one.clone();
        let lo;
        loop {
            let target = &best - &step;
            match self.check(&[at_most(&target)], true)?.model {
                Some(m) => {
                    best = value_of(&m)?;
                    witness = m;
                    step = &step * BigRational::from_integer(BigInt::from(2));
                }
                None => {
                    lo = target;
                    break;
                }
            }
        }
        let mut lo = lo;
        let eps = BigRational::new(BigInt::from(EPSILON.0), BigInt::from(EPSILON.1));
        let two = BigRational::from_integer(BigInt::from(2));
        loop {
            let gap = &best - &lo;
            let done = if integral { gap <= one } else { gap <= eps };
            if done || gap.is_negative() || gap.is_zero() {
                break;
            }
            let mut mid = (&lo + &best) / &two;
            if integral {
                mid = mid.floor();
            }
            match self.check(&[at_most(&mid)], true)?.model {
                Some(m) => {
                    best = value_of(&m)?;
                    witness = m;
                }
                None => lo = mid,
            }
        }
        let value = match dir {
            Direction::Minimize => best,
            Direction::Maximize => -best,
        };
        Ok((Value::Num(value), witness))
    }

    /// Term values of a model as `(term, value)` pairs.
    pub fn assignment(&self, m: &Model) -> Vec<(Term, Value)> {
        self.gt
            .terms
            .iter()
            .zip(&m.terms)
            .map(|(t, v)| (t.term.clone(), v.clone()))
            .collect()
    }
}

fn to_explanation(core: Vec<Assertion>) -> Explanation {
    Explanation {
        items: core
            .into_iter()
            .map(|a| ExplanationItem {
                label: a.label,
                kind: a.kind,
                source: a.source,
            })
            .collect(),
    }
}

/// Whether `T` has a model expanding `S`.
pub fn model_check(tkb: &TypedKB, s: &PartialStructure, config: &SolverConfig) -> Result<bool> {
    Reasoner::from_kb(tkb, s, config)?.satisfiable()
}

/// Up to `max` models of `T` expanding `S`, as term assignments.
pub fn model_expand(
    tkb: &TypedKB,
    s: &PartialStructure,
    max: usize,
    config: &SolverConfig,
) -> Result<Vec<Vec<(Term, Value)>>> {
    let mut r = Reasoner::from_kb(tkb, s, config)?;
    let models = r.models(max)?;
    Ok(models.iter().map(|m| r.assignment(m)).collect())
}

pub fn propagate(tkb: &TypedKB, s: &PartialStructure, config: &SolverConfig) -> Result<(GroundTheory, Consequences)> {
    let mut r = Reasoner::from_kb(tkb, s, config)?;
    let c = r.propagate()?;
    Ok((r.gt, c))
}

pub fn explain(
    tkb: &TypedKB,
    s: &PartialStructure,
    literal: &str,
    config: &SolverConfig,
) -> Result<Explanation> {
    let mut r = Reasoner::from_kb(tkb, s, config)?;
    let lit = r.literal(literal)?;
    r.explain(&lit)
}

pub fn optimize(
    tkb: &TypedKB,
    s: &PartialStructure,
    term: &str,
    dir: Direction,
    config: &SolverConfig,
) -> Result<(Value, Vec<(Term, Value)>)> {
    let mut r = Reasoner::from_kb(tkb, s, config)?;
    let (v, m) = r.optimize(term, dir)?;
    Ok((v, r.assignment(&m)))
}

/// Relevance per atom, after propagation.
pub fn relevance(
    tkb: &TypedKB,
    s: &PartialStructure,
    config: &SolverConfig,
) -> Result<(GroundTheory, Consequences, Vec<bool>)> {
    let mut r = Reasoner::from_kb(tkb, s, config)?;
    let c = r.propagate()?;
    let rel = r.relevance(&c);
    Ok((r.gt, c, rel))
}

#[cfg(test)]
mod tests;
