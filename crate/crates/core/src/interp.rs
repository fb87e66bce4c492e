//! Partial structures: finite type extensions, enumerated interpretations and
//! user facts.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::check::{check_expr, expand_tuples, resolve_element, TypedKB};
use crate::lang::{parse_expr, EnumBody, StructureBlock};
use crate::types::{NumKind, TKind, Type, TypeKind, Vocab};
use crate::value::Value;

/// An applied ground term such as `weight(Bob)` or `age()`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub symbol: String,
    pub args: Vec<Value>,
}

impl Term {
    pub fn new(symbol: impl Into<String>, args: Vec<Value>) -> Term {
        Term {
            symbol: symbol.into(),
            args,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.symbol)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Enumeration,
    User,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub value: Value,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("type `{0}` has no extension; enumerate it in the structure")]
    MissingExtension(String),
    #[error("symbol `{symbol}` has an argument of unbounded type {ty}")]
    UnboundedArgument { symbol: String, ty: String },
    #[error("value {value} of {term} is outside type {ty}")]
    ValueOutsideType {
        term: String,
        value: String,
        ty: String,
    },
    #[error("enumeration of `{symbol}` gives no value for {term}")]
    IncompleteEnumeration { symbol: String, term: String },
    #[error("{0}")]
    TypeMismatch(String),
    #[error("{0} is fixed by the structure and cannot be changed")]
    OverwriteEnumeration(String),
    #[error("{0} is not a user fact")]
    NotUserFact(String),
    #[error("unknown vocabulary `{0}`")]
    UnknownVocabulary(String),
}

/// Type extensions plus a partial assignment of ground terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialStructure {
    pub vocab: Arc<Vocab>,
    /// Extensions of the custom types, in declaration order.
    pub extensions: IndexMap<String, Vec<Value>>,
    /// Symbols interpreted by an enumeration.
    pub enumerated: Vec<String>,
    pub assignments: BTreeMap<Term, Assignment>,
}

pub fn build_structure(tkb: &TypedKB, block: &StructureBlock) -> Result<PartialStructure, InterpError> {
    build_from(tkb, &block.vocabulary, &[block])
}

/// Builds a structure for `vocab` from any number of structure blocks.
pub fn build_from(
    tkb: &TypedKB,
    vocab: &str,
    blocks: &[&StructureBlock],
) -> Result<PartialStructure, InterpError> {
    let voc = tkb
        .vocab(vocab)
        .ok_or_else(|| InterpError::UnknownVocabulary(vocab.to_string()))?;
    let mut extensions = IndexMap::new();
    for (name, info) in &voc.types {
        let mut ext = info.constructors.clone();
        for b in blocks {
            for e in b.enumerations.iter().filter(|e| &e.target == name) {
                if let EnumBody::Tuples(ts) = &e.body {
                    ext = Some(expand_tuples(ts).into_iter().flatten().collect());
                }
            }
        }
        let Some(mut ext) = ext else {
            return Err(InterpError::MissingExtension(name.clone()));
        };
        let mut seen = std::collections::HashSet::new();
        ext.retain(|v| seen.insert(v.clone()));
        if info.kind != TypeKind::Symbolic {
            ext.sort();
        }
        extensions.insert(name.clone(), ext);
    }
    let mut s = PartialStructure {
        vocab: Arc::new(voc.clone()),
        extensions,
        enumerated: Vec::new(),
        assignments: BTreeMap::new(),
    };
    for sym in voc.symbols.values() {
        for t in &sym.sig.args {
            if s.extension(t).is_none() {
                return Err(InterpError::UnboundedArgument {
                    symbol: sym.name.clone(),
                    ty: t.to_string(),
                });
            }
        }
    }
    for b in blocks {
        for e in &b.enumerations {
            let Some(sym) = voc.symbol(&e.target) else {
                continue;
            };
            let sig = sym.sig.clone();
            let resolve = |els: &[crate::lang::EnumElement]| -> Result<Vec<Value>, InterpError> {
                els.iter()
                    .zip(&sig.args)
                    .map(|(el, t)| resolve_element(voc, el, t).map_err(InterpError::TypeMismatch))
                    .collect()
            };
            let mut table: BTreeMap<Vec<Value>, Value> = BTreeMap::new();
            match &e.body {
                EnumBody::Tuples(ts) => {
                    for tuple in ts {
                        let rows = match tuple {
                            crate::lang::EnumTuple::Tuple(els) => vec![resolve(els)?],
                            crate::lang::EnumTuple::Range(..) => {
                                expand_tuples(std::slice::from_ref(tuple))
                            }
                        };
                        for r in rows {
                            table.insert(r, Value::Bool(true));
                        }
                    }
                }
                EnumBody::Map(entries) => {
                    for (args, v) in entries {
                        let v = resolve_element(voc, v, &sig.result)
                            .map_err(InterpError::TypeMismatch)?;
                        table.insert(resolve(args)?, v);
                    }
                }
                EnumBody::Constant(v) => {
                    let v = resolve_element(voc, v, &sig.result).map_err(InterpError::TypeMismatch)?;
                    table.insert(Vec::new(), v);
                }
            }
            for args in s.tuples(&sig.args) {
                let term = Term::new(&sym.name, args.clone());
                let value = match table.remove(&args) {
                    Some(v) => v,
                    None if sig.result == Type::Bool => Value::Bool(false),
                    None => {
                        return Err(InterpError::IncompleteEnumeration {
                            symbol: sym.name.clone(),
                            term: term.to_string(),
                        })
                    }
                };
                if !s.in_type(&value, &sig.result) {
                    return Err(InterpError::ValueOutsideType {
                        term: term.to_string(),
                        value: value.to_string(),
                        ty: sig.result.to_string(),
                    });
                }
                s.assignments.insert(
                    term,
                    Assignment {
                        value,
                        origin: Origin::Enumeration,
                    },
                );
            }
            if let Some((args, _)) = table.into_iter().next() {
                return Err(InterpError::ValueOutsideType {
                    term: Term::new(&sym.name, args).to_string(),
                    value: "an enumerated tuple".into(),
                    ty: format!("the argument types of `{}`", sym.name),
                });
            }
            if !s.enumerated.contains(&sym.name) {
                s.enumerated.push(sym.name.clone());
            }
        }
    }
    Ok(s)
}

impl PartialStructure {
    /// Structure with no enumerated symbols, using only vocabulary constructors.
    pub fn empty(tkb: &TypedKB, vocab: &str) -> Result<PartialStructure, InterpError> {
        build_from(tkb, vocab, &[])
    }

    /// Structure built from every structure block over `vocab`.
    pub fn initial(tkb: &TypedKB, vocab: &str) -> Result<PartialStructure, InterpError> {
        let blocks: Vec<&StructureBlock> = tkb
            .kb
            .structures
            .iter()
            .filter(|s| s.vocabulary == vocab)
            .collect();
        build_from(tkb, vocab, &blocks)
    }

    /// Finite extension of a type, or `None` for Int and Real.
    pub fn extension(&self, t: &Type) -> Option<Vec<Value>> {
        match t {
            Type::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
            Type::Int | Type::Real => None,
            Type::Custom(n) => self.extensions.get(n).cloned(),
            Type::Concept(None) => Some(
                self.vocab
                    .symbols
                    .keys()
                    .map(|s| Value::Concept(s.clone()))
                    .collect(),
            ),
            Type::Concept(Some(sig)) => Some(
                self.vocab
                    .concepts_with(sig)
                    .into_iter()
                    .map(Value::Concept)
                    .collect(),
            ),
        }
    }

    /// All argument tuples over the given types, in lexicographic extension order.
    pub fn tuples(&self, types: &[Type]) -> Vec<Vec<Value>> {
        let mut out = vec![Vec::new()];
        for t in types {
            let ext = self.extension(t).unwrap_or_default();
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    ext.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(v.clone());
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// All ground terms of a symbol.
    pub fn terms_of(&self, symbol: &str) -> Vec<Term> {
        match self.vocab.symbol(symbol) {
            Some(s) => self
                .tuples(&s.sig.args)
                .into_iter()
                .map(|args| Term::new(symbol, args))
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn in_type(&self, v: &Value, t: &Type) -> bool {
        match (v, t) {
            (Value::Bool(_), Type::Bool) => true,
            (Value::Num(_), Type::Real) => true,
            (Value::Num(n), Type::Int) => n.is_integer(),
            (_, Type::Custom(_) | Type::Concept(_)) => {
                self.extension(t).is_some_and(|e| e.contains(v))
            }
            _ => false,
        }
    }

    pub fn is_enumerated(&self, symbol: &str) -> bool {
        self.enumerated.iter().any(|s| s == symbol)
    }

    pub fn lookup(&self, t: &Term) -> Option<&Assignment> {
        self.assignments.get(t)
    }

    pub fn user_facts(&self) -> impl Iterator<Item = (&Term, &Value)> {
        self.assignments
            .iter()
            .filter(|(_, a)| a.origin == Origin::User)
            .map(|(t, a)| (t, &a.value))
    }

    fn validate(&self, term: &Term, value: &Value) -> Result<(), InterpError> {
        let sym = self
            .vocab
            .symbol(&term.symbol)
            .ok_or_else(|| InterpError::TypeMismatch(format!("unknown symbol `{}`", term.symbol)))?;
        if sym.sig.args.len() != term.args.len() {
            return Err(InterpError::TypeMismatch(format!(
                "`{}` takes {} argument(s)",
                term.symbol,
                sym.sig.args.len()
            )));
        }
        for (a, t) in term.args.iter().zip(&sym.sig.args) {
            if !self.in_type(a, t) {
                return Err(InterpError::TypeMismatch(format!(
                    "argument {a} of {term} is not in {t}"
                )));
            }
        }
        if !self.in_type(value, &sym.sig.result) {
            return Err(InterpError::TypeMismatch(format!(
                "{value} is not a value of type {} for {term}",
                sym.sig.result
            )));
        }
        Ok(())
    }

    /// Records a user fact `term = value`, replacing an earlier user fact on
    /// the same term.
    pub fn assert_fact(&self, term: Term, value: Value) -> Result<PartialStructure, InterpError> {
        self.validate(&term, &value)?;
        if let Some(a) = self.assignments.get(&term) {
            if a.origin == Origin::Enumeration {
                return Err(InterpError::OverwriteEnumeration(term.to_string()));
            }
        }
        let mut s = self.clone();
        s.assignments.insert(
            term,
            Assignment {
                value,
                origin: Origin::User,
            },
        );
        Ok(s)
    }

    pub fn retract_fact(&self, term: &Term) -> Result<PartialStructure, InterpError> {
        match self.assignments.get(term) {
            Some(a) if a.origin == Origin::User => {
                let mut s = self.clone();
                s.assignments.remove(term);
                Ok(s)
            }
            _ => Err(InterpError::NotUserFact(term.to_string())),
        }
    }

    /// Parses a term such as `weight(Bob)` against the vocabulary.
    pub fn parse_term(&self, text: &str) -> Result<Term, InterpError> {
        let e = parse_expr(text).map_err(|e| InterpError::TypeMismatch(e.to_string()))?;
        let t = check_expr(&self.vocab, &e).map_err(|e| InterpError::TypeMismatch(e.to_string()))?;
        let TKind::App(symbol, args) = t.kind else {
            return Err(InterpError::TypeMismatch(format!("`{text}` is not an applied symbol")));
        };
        let args = args
            .into_iter()
            .map(|a| match a.kind {
                TKind::Const(v) => Ok(v),
                TKind::Neg(x) => match x.kind {
                    TKind::Const(Value::Num(n)) => Ok(Value::Num(-n)),
                    _ => Err(()),
                },
                _ => Err(()),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| InterpError::TypeMismatch(format!("arguments of `{text}` must be values")))?;
        Ok(Term::new(symbol, args))
    }

    /// Parses a value for `term`: an element, a number or a truth value.
    pub fn parse_value(&self, term: &Term, text: &str) -> Result<Value, InterpError> {
        let sym = self
            .vocab
            .symbol(&term.symbol)
            .ok_or_else(|| InterpError::TypeMismatch(format!("unknown symbol `{}`", term.symbol)))?;
        let text = text.trim();
        let v = if let Some(n) = crate::value::parse_number(text) {
            Value::Num(n)
        } else {
            match text {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                _ => match text.strip_prefix('`') {
                    Some(c) => Value::Concept(c.to_string()),
                    None => Value::Elem(text.to_string()),
                },
            }
        };
        let v = match (&v, &sym.sig.result) {
            (Value::Num(n), t) if self.vocab.num_kind(t) == Some(NumKind::Int) && !n.is_integer() => {
                return Err(InterpError::TypeMismatch(format!("{text} is not an integer")))
            }
            (Value::Elem(e), Type::Concept(_)) => Value::Concept(e.clone()),
            _ => v,
        };
        Ok(v)
    }
}
