//! Type checking: resolves every identifier, annotates every expression with
//! its type and reports all type errors at once.

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use num::BigRational;

use crate::lang::*;
use crate::types::*;
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub span: Span,
    pub message: String,
    pub expected: Option<String>,
    pub found: Option<String>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeErrors(pub Vec<TypeError>);

impl fmt::Display for TypeErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for TypeErrors {}

/// A knowledge base whose blocks have all been checked against their vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedKB {
    pub kb: KnowledgeBase,
    pub vocabularies: IndexMap<String, Vocab>,
    pub theories: Vec<TypedTheory>,
}

impl TypedKB {
    pub fn vocab(&self, name: &str) -> Option<&Vocab> {
        self.vocabularies.get(name)
    }

    /// Vocabulary of the first theory, or the first vocabulary.
    pub fn main_vocabulary(&self) -> Option<&str> {
        self.theories
            .first()
            .map(|t| t.vocabulary.as_str())
            .or_else(|| self.kb.vocabularies.first().map(|v| v.name.as_str()))
    }
}

const BUILTIN: [&str; 4] = ["Bool", "Int", "Real", "Concept"];

pub fn check(kb: &KnowledgeBase) -> Result<TypedKB, TypeErrors> {
    let mut errors = Vec::new();
    let mut vocabularies = IndexMap::new();
    for v in &kb.vocabularies {
        if vocabularies.contains_key(&v.name) {
            errors.push(err(v.span, format!("duplicate vocabulary `{}`", v.name)));
            continue;
        }
        let structures: Vec<&StructureBlock> = kb
            .structures
            .iter()
            .filter(|s| s.vocabulary == v.name)
            .collect();
        vocabularies.insert(v.name.clone(), resolve_vocabulary(v, &structures, &mut errors));
    }

    let mut theories = Vec::new();
    let mut seen = HashSet::new();
    for t in &kb.theories {
        if !seen.insert(&t.name) {
            errors.push(err(t.span, format!("duplicate theory `{}`", t.name)));
        }
        let Some(voc) = vocabularies.get(&t.vocabulary) else {
            errors.push(err(
                t.span,
                format!("theory `{}` refers to unknown vocabulary `{}`", t.name, t.vocabulary),
            ));
            continue;
        };
        let mut c = Checker {
            voc,
            errors: &mut errors,
        };
        theories.push(c.theory(t));
    }
    check_unique_definitions(&theories, &mut errors);

    let mut seen = HashSet::new();
    for s in &kb.structures {
        if !seen.insert(&s.name) {
            errors.push(err(s.span, format!("duplicate structure `{}`", s.name)));
        }
        match vocabularies.get(&s.vocabulary) {
            Some(voc) => check_structure(voc, s, &mut errors),
            None => errors.push(err(
                s.span,
                format!(
                    "structure `{}` refers to unknown vocabulary `{}`",
                    s.name, s.vocabulary
                ),
            )),
        }
    }

    if errors.is_empty() {
        Ok(TypedKB {
            kb: kb.clone(),
            vocabularies,
            theories,
        })
    } else {
        Err(TypeErrors(errors))
    }
}

/// Checks a standalone expression (an objective, a literal, an edited term)
/// against a vocabulary. No variables are in scope.
pub fn check_expr(voc: &Vocab, e: &Expr) -> Result<TExpr, TypeErrors> {
    let mut errors = Vec::new();
    let mut c = Checker {
        voc,
        errors: &mut errors,
    };
    let t = c.expr(e, &mut Vec::new());
    match t {
        Some(t) if errors.is_empty() => Ok(t),
        _ => Err(TypeErrors(errors)),
    }
}

fn err(span: Span, message: impl Into<String>) -> TypeError {
    TypeError {
        span,
        message: message.into(),
        expected: None,
        found: None,
    }
}

fn mismatch(span: Span, expected: impl fmt::Display, found: &Type) -> TypeError {
    TypeError {
        span,
        message: format!("expected {expected}, found {found}"),
        expected: Some(expected.to_string()),
        found: Some(found.to_string()),
    }
}

fn element_value(e: &EnumElement) -> Value {
    match e {
        EnumElement::Ident(s) => Value::Elem(s.clone()),
        EnumElement::Int(i) => Value::Num(BigRational::from_integer(i.clone())),
        EnumElement::Real(r) => Value::Num(r.clone()),
        EnumElement::Bool(b) => Value::Bool(*b),
    }
}

/// Expands `{a, b, 0..3}` into values.
pub(crate) fn expand_tuples(ts: &[EnumTuple]) -> Vec<Vec<Value>> {
    let mut out = Vec::new();
    for t in ts {
        match t {
            EnumTuple::Tuple(es) => out.push(es.iter().map(element_value).collect()),
            EnumTuple::Range(a, b) => {
                let mut i = a.clone();
                while &i <= b {
                    out.push(vec![Value::Num(BigRational::from_integer(i.clone()))]);
                    i += 1;
                }
            }
        }
    }
    out
}

fn numeric_kind_of(values: &[Value]) -> Option<Option<NumKind>> {
    // None: mixed; Some(None): symbolic; Some(Some(k)): numeric
    if values.is_empty() {
        return Some(None);
    }
    let nums: Vec<&BigRational> = values.iter().filter_map(|v| v.as_num()).collect();
    if nums.is_empty() {
        return values
            .iter()
            .all(|v| matches!(v, Value::Elem(_)))
            .then_some(None);
    }
    if nums.len() != values.len() {
        return None;
    }
    Some(Some(if nums.iter().all(|n| n.is_integer()) {
        NumKind::Int
    } else {
        NumKind::Real
    }))
}

fn resolve_vocabulary(
    v: &Vocabulary,
    structures: &[&StructureBlock],
    errors: &mut Vec<TypeError>,
) -> Vocab {
    let mut voc = Vocab {
        name: v.name.clone(),
        ..Vocab::default()
    };
    for t in &v.types {
        if BUILTIN.contains(&t.name.as_str()) {
            errors.push(err(t.span, format!("built-in type `{}` cannot be redeclared", t.name)));
            continue;
        }
        if voc.types.contains_key(&t.name) {
            errors.push(err(t.span, format!("duplicate type `{}`", t.name)));
            continue;
        }
        let constructors = t.constructors.as_ref().map(|c| {
            expand_tuples(c)
                .into_iter()
                .map(|mut tuple| {
                    if tuple.len() != 1 {
                        errors.push(err(t.span, "constructors must be single elements"));
                    }
                    tuple.pop().unwrap_or(Value::Bool(false))
                })
                .collect::<Vec<_>>()
        });
        let declared = match &t.base {
            None => None,
            Some(TypeRef::Named(b)) if b == "Int" => Some(NumKind::Int),
            Some(TypeRef::Named(b)) if b == "Real" => Some(NumKind::Real),
            Some(other) => {
                errors.push(err(
                    t.span,
                    format!("type `{}` can only be a subtype of Int or Real, not {other}", t.name),
                ));
                None
            }
        };
        // kind from the vocabulary, else from structure enumerations of the type
        let mut evidence: Vec<Value> = constructors.clone().unwrap_or_default();
        if constructors.is_none() {
            for s in structures {
                for e in s.enumerations.iter().filter(|e| e.target == t.name) {
                    if let EnumBody::Tuples(ts) = &e.body {
                        evidence.extend(expand_tuples(ts).into_iter().flatten());
                    }
                }
            }
        }
        let kind = match (declared, numeric_kind_of(&evidence)) {
            (Some(k), Some(None)) if evidence.is_empty() => TypeKind::Numeric(k),
            (Some(NumKind::Real), Some(Some(_))) => TypeKind::Numeric(NumKind::Real),
            (Some(NumKind::Int), Some(Some(NumKind::Int))) => TypeKind::Numeric(NumKind::Int),
            (None, Some(Some(k))) => TypeKind::Numeric(k),
            (None, Some(None)) => TypeKind::Symbolic,
            _ => {
                errors.push(err(
                    t.span,
                    format!("elements of type `{}` do not match its declared kind", t.name),
                ));
                TypeKind::Symbolic
            }
        };
        if kind == TypeKind::Symbolic {
            for e in &evidence {
                if let Value::Elem(name) = e {
                    if let Some(other) = voc.elements.get(name) {
                        if other != &t.name {
                            errors.push(err(
                                t.span,
                                format!(
                                    "element `{name}` belongs to both `{other}` and `{}`",
                                    t.name
                                ),
                            ));
                        }
                    } else {
                        voc.elements.insert(name.clone(), t.name.clone());
                    }
                }
            }
        }
        voc.types.insert(
            t.name.clone(),
            TypeInfo {
                name: t.name.clone(),
                kind,
                constructors,
                span: t.span,
            },
        );
    }

    for s in &v.symbols {
        if voc.symbols.contains_key(&s.name) || voc.types.contains_key(&s.name) {
            errors.push(err(s.span, format!("duplicate symbol `{}`", s.name)));
            continue;
        }
        if voc.elements.contains_key(&s.name) {
            errors.push(err(
                s.span,
                format!("symbol `{}` clashes with an element of the same name", s.name),
            ));
        }
        match resolve_sig(&voc, &s.signature) {
            Ok(sig) => {
                voc.symbols.insert(
                    s.name.clone(),
                    SymbolInfo {
                        name: s.name.clone(),
                        sig,
                        span: s.span,
                    },
                );
            }
            Err(m) => errors.push(err(s.span, m)),
        }
    }
    voc
}

fn resolve_type(voc: &Vocab, t: &TypeRef) -> Result<Type, String> {
    match t {
        TypeRef::Named(n) => match n.as_str() {
            "Bool" => Ok(Type::Bool),
            "Int" => Ok(Type::Int),
            "Real" => Ok(Type::Real),
            _ if voc.types.contains_key(n) => Ok(Type::Custom(n.clone())),
            _ => Err(format!("unknown type `{n}`")),
        },
        TypeRef::Concept(None) => Ok(Type::Concept(None)),
        TypeRef::Concept(Some(sig)) => Ok(Type::Concept(Some(Box::new(resolve_sig(voc, sig)?)))),
    }
}

fn resolve_sig(voc: &Vocab, sig: &Signature) -> Result<SymbolSig, String> {
    Ok(SymbolSig {
        args: sig
            .args
            .iter()
            .map(|a| resolve_type(voc, a))
            .collect::<Result<_, _>>()?,
        result: resolve_type(voc, &sig.result)?,
    })
}

fn check_unique_definitions(theories: &[TypedTheory], errors: &mut Vec<TypeError>) {
    let mut defined: IndexMap<(&str, &str), Span> = IndexMap::new();
    for t in theories {
        for d in &t.definitions {
            for s in &d.defined {
                if defined.insert((t.vocabulary.as_str(), s.as_str()), d.span).is_some() {
                    errors.push(err(
                        d.span,
                        format!("symbol `{s}` is defined by more than one definition"),
                    ));
                }
            }
        }
    }
}

/// Resolves an enumeration element against an expected type.
pub(crate) fn resolve_element(voc: &Vocab, e: &EnumElement, ty: &Type) -> Result<Value, String> {
    let v = element_value(e);
    let ok = match (&v, ty) {
        (Value::Bool(_), Type::Bool) => true,
        (Value::Num(n), t) if voc.is_numeric(t) => {
            voc.num_kind(t) == Some(NumKind::Real) || n.is_integer()
        }
        (Value::Elem(name), Type::Custom(t)) => voc.elements.get(name) == Some(t),
        (Value::Elem(name), Type::Concept(Some(sig))) => {
            return match voc.symbol(name) {
                Some(s) if &s.sig == sig.as_ref() => Ok(Value::Concept(name.clone())),
                _ => Err(format!("`{name}` is not a concept of type {ty}")),
            }
        }
        _ => false,
    };
    if ok {
        Ok(v)
    } else {
        Err(format!("`{e}` is not a value of type {ty}"))
    }
}

fn check_structure(voc: &Vocab, s: &StructureBlock, errors: &mut Vec<TypeError>) {
    let mut seen = HashSet::new();
    for e in &s.enumerations {
        if !seen.insert(&e.target) {
            errors.push(err(e.span, format!("`{}` is enumerated twice", e.target)));
        }
        if let Some(info) = voc.types.get(&e.target) {
            let EnumBody::Tuples(ts) = &e.body else {
                errors.push(err(e.span, format!("type `{}` must be enumerated as a set", e.target)));
                continue;
            };
            if info.constructors.is_some() {
                errors.push(err(
                    e.span,
                    format!("type `{}` already has constructors in the vocabulary", e.target),
                ));
            }
            for t in expand_tuples(ts) {
                if t.len() != 1 {
                    errors.push(err(e.span, "type extensions list single elements"));
                }
            }
            continue;
        }
        if BUILTIN.contains(&e.target.as_str()) {
            errors.push(err(e.span, format!("built-in type `{}` cannot be enumerated", e.target)));
            continue;
        }
        let Some(sym) = voc.symbol(&e.target) else {
            errors.push(err(e.span, format!("unknown symbol or type `{}`", e.target)));
            continue;
        };
        let sig = &sym.sig;
        let check_tuple = |args: &[EnumElement], errors: &mut Vec<TypeError>| {
            if args.len() != sig.args.len() {
                errors.push(err(
                    e.span,
                    format!(
                        "`{}` takes {} argument(s), enumeration gives {}",
                        e.target,
                        sig.args.len(),
                        args.len()
                    ),
                ));
                return;
            }
            for (a, t) in args.iter().zip(&sig.args) {
                if let Err(m) = resolve_element(voc, a, t) {
                    errors.push(err(e.span, m));
                }
            }
        };
        match &e.body {
            EnumBody::Tuples(ts) => {
                if sig.result != Type::Bool {
                    errors.push(err(
                        e.span,
                        format!("function `{}` must be enumerated with `->` entries", e.target),
                    ));
                    continue;
                }
                for t in ts {
                    match t {
                        EnumTuple::Tuple(args) => check_tuple(args, errors),
                        EnumTuple::Range(a, b) => {
                            let mut i = a.clone();
                            while &i <= b {
                                check_tuple(&[EnumElement::Int(i.clone())], errors);
                                i += 1;
                            }
                        }
                    }
                }
            }
            EnumBody::Map(entries) => {
                let mut keys = HashSet::new();
                for (args, v) in entries {
                    check_tuple(args, errors);
                    if !keys.insert(args) {
                        errors.push(err(
                            e.span,
                            format!("`{}` maps the same arguments twice", e.target),
                        ));
                    }
                    if let Err(m) = resolve_element(voc, v, &sig.result) {
                        errors.push(err(e.span, m));
                    }
                }
            }
            EnumBody::Constant(v) => {
                if !sig.args.is_empty() {
                    errors.push(err(
                        e.span,
                        format!("`{}` is not nullary; enumerate it as a set", e.target),
                    ));
                } else if let Err(m) = resolve_element(voc, v, &sig.result) {
                    errors.push(err(e.span, m));
                }
            }
        }
    }
}

struct Checker<'a, 'e> {
    voc: &'a Vocab,
    errors: &'e mut Vec<TypeError>,
}

type Env = Vec<(String, Type)>;

impl Checker<'_, '_> {
    fn theory(&mut self, t: &Theory) -> TypedTheory {
        let mut axioms = Vec::new();
        let mut definitions = Vec::new();
        for item in &t.items {
            match item {
                TheoryItem::Axiom(e) => {
                    if let Some(x) = self.expr(e, &mut Vec::new()) {
                        if x.ty != Type::Bool {
                            self.errors.push(mismatch(e.span, Type::Bool, &x.ty));
                        }
                        axioms.push(TAxiom {
                            expr: x,
                            source: format!("{}.", print_expr(e)),
                            span: e.span,
                        });
                    }
                }
                TheoryItem::Definition(d) => definitions.push(self.definition(d)),
            }
        }
        TypedTheory {
            name: t.name.clone(),
            vocabulary: t.vocabulary.clone(),
            axioms,
            definitions,
        }
    }

    fn definition(&mut self, d: &Definition) -> TDefinition {
        let mut rules = Vec::new();
        let mut defined: Vec<String> = Vec::new();
        for r in &d.rules {
            if let Some(rule) = self.rule(r) {
                if !defined.contains(&rule.symbol) {
                    defined.push(rule.symbol.clone());
                }
                rules.push(rule);
            }
        }
        TDefinition {
            rules,
            defined,
            span: d.span,
        }
    }

    fn rule(&mut self, r: &Rule) -> Option<TRule> {
        let Some(sym) = self.voc.symbol(&r.head.symbol) else {
            self.errors.push(err(
                r.head.span,
                format!("rule head uses undeclared symbol `{}`", r.head.symbol),
            ));
            return None;
        };
        let sig = sym.sig.clone();
        if sig.args.len() != r.head.args.len() {
            self.errors.push(err(
                r.head.span,
                format!(
                    "`{}` takes {} argument(s), head gives {}",
                    r.head.symbol,
                    sig.args.len(),
                    r.head.args.len()
                ),
            ));
            return None;
        }
        let mut env: Env = Vec::new();
        for b in &r.vars {
            match resolve_type(self.voc, &b.ty) {
                Ok(t) => env.push((b.name.clone(), t)),
                Err(m) => self.errors.push(err(b.span, m)),
            }
        }
        // bare identifiers in the head that are not elements or symbols are
        // implicitly quantified over the corresponding argument type
        for (a, t) in r.head.args.iter().zip(&sig.args) {
            if let ExprKind::Ident(name) = &a.kind {
                let known = env.iter().any(|(n, _)| n == name)
                    || self.voc.elements.contains_key(name)
                    || self.voc.symbols.contains_key(name);
                if !known {
                    env.push((name.clone(), t.clone()));
                }
            }
        }
        let vars = env.clone();
        let mut args = Vec::new();
        for (a, t) in r.head.args.iter().zip(&sig.args) {
            let x = self.expr(a, &mut env)?;
            if !self.voc.accepts(t, &x.ty) {
                self.errors.push(mismatch(a.span, t, &x.ty));
            }
            args.push(x);
        }
        let value = match (&r.head.value, sig.result == Type::Bool) {
            (None, true) => None,
            (Some(v), false) => {
                let x = self.expr(v, &mut env)?;
                if !self.voc.accepts(&sig.result, &x.ty) {
                    self.errors.push(mismatch(v.span, &sig.result, &x.ty));
                }
                Some(x)
            }
            (None, false) => {
                self.errors.push(err(
                    r.head.span,
                    format!("function `{}` needs a head of the form `f(...) = value`", r.head.symbol),
                ));
                return None;
            }
            (Some(_), true) => {
                self.errors.push(err(
                    r.head.span,
                    format!("predicate `{}` cannot be given a value in a rule head", r.head.symbol),
                ));
                return None;
            }
        };
        let body = match &r.body {
            Some(b) => {
                let x = self.expr(b, &mut env)?;
                if x.ty != Type::Bool {
                    self.errors.push(mismatch(b.span, Type::Bool, &x.ty));
                }
                x
            }
            None => TExpr::constant(Value::Bool(true), Type::Bool),
        };
        Some(TRule {
            vars,
            symbol: r.head.symbol.clone(),
            args,
            value,
            body,
            source: print_rule(r),
            span: r.span,
        })
    }

    fn binders(&mut self, bs: &[Binder], env: &mut Env) -> Option<Vec<Bound>> {
        let mut out = Vec::new();
        for b in bs {
            match resolve_type(self.voc, &b.ty) {
                Ok(t) => out.push((b.name.clone(), t)),
                Err(m) => {
                    self.errors.push(err(b.span, m));
                    return None;
                }
            }
        }
        env.extend(out.iter().cloned());
        Some(out)
    }

    fn bool_operand(&mut self, e: &Expr, env: &mut Env) -> Option<TExpr> {
        let x = self.expr(e, env)?;
        if x.ty != Type::Bool {
            self.errors.push(mismatch(e.span, Type::Bool, &x.ty));
            return None;
        }
        Some(x)
    }

    fn num_operand(&mut self, e: &Expr, env: &mut Env) -> Option<TExpr> {
        let x = self.expr(e, env)?;
        if !self.voc.is_numeric(&x.ty) {
            self.errors.push(mismatch(e.span, "a number", &x.ty));
            return None;
        }
        Some(x)
    }

    fn join_numeric(&self, a: &Type, b: &Type) -> Type {
        match (self.voc.num_kind(a), self.voc.num_kind(b)) {
            (Some(NumKind::Int), Some(NumKind::Int)) => Type::Int,
            _ => Type::Real,
        }
    }

    fn base_numeric(&self, t: &Type) -> Type {
        match self.voc.num_kind(t) {
            Some(NumKind::Int) => Type::Int,
            _ => Type::Real,
        }
    }

    fn expr(&mut self, e: &Expr, env: &mut Env) -> Option<TExpr> {
        let sp = e.span;
        let mk = |kind, ty| Some(TExpr { kind, ty, span: sp });
        match &e.kind {
            ExprKind::Bool(b) => mk(TKind::Const(Value::Bool(*b)), Type::Bool),
            ExprKind::Int(i) => mk(
                TKind::Const(Value::Num(BigRational::from_integer(i.clone()))),
                Type::Int,
            ),
            ExprKind::Real(r) => mk(TKind::Const(Value::Num(r.clone())), Type::Real),
            ExprKind::Ident(name) => {
                if let Some((_, t)) = env.iter().rev().find(|(n, _)| n == name) {
                    return mk(TKind::Var(name.clone()), t.clone());
                }
                if let Some(t) = self.voc.elements.get(name) {
                    return mk(
                        TKind::Const(Value::Elem(name.clone())),
                        Type::Custom(t.clone()),
                    );
                }
                if let Some(s) = self.voc.symbol(name) {
                    if s.sig.args.is_empty() {
                        return mk(TKind::App(name.clone(), Vec::new()), s.sig.result.clone());
                    }
                    self.errors.push(err(
                        sp,
                        format!("`{name}` takes {} argument(s)", s.sig.args.len()),
                    ));
                    return None;
                }
                self.errors.push(err(sp, format!("unknown identifier `{name}`")));
                None
            }
            ExprKind::ConceptLit(name) => match self.voc.symbol(name) {
                Some(s) => mk(
                    TKind::Const(Value::Concept(name.clone())),
                    Type::Concept(Some(Box::new(s.sig.clone()))),
                ),
                None => {
                    self.errors.push(err(sp, format!("unknown symbol `{name}` in concept")));
                    None
                }
            },
            ExprKind::App(name, args) => {
                let Some(s) = self.voc.symbol(name) else {
                    self.errors.push(err(sp, format!("unknown symbol `{name}`")));
                    return None;
                };
                let sig = s.sig.clone();
                let targs = self.args(&sig, args, sp, name, env)?;
                mk(TKind::App(name.clone(), targs), sig.result)
            }
            ExprKind::ConceptApp(c, args) => {
                let tc = self.expr(c, env)?;
                let sig = match &tc.ty {
                    Type::Concept(Some(sig)) => sig.as_ref().clone(),
                    Type::Concept(None) => {
                        self.errors.push(err(
                            c.span,
                            "`$` needs a term of type Concept[signature], not plain Concept",
                        ));
                        return None;
                    }
                    other => {
                        self.errors.push(mismatch(c.span, "a concept", other));
                        return None;
                    }
                };
                let targs = self.args(&sig, args, sp, "$", env)?;
                mk(TKind::ConceptApp(Box::new(tc), targs), sig.result)
            }
            ExprKind::Not(x) => {
                let x = self.bool_operand(x, env)?;
                mk(TKind::Not(Box::new(x)), Type::Bool)
            }
            ExprKind::And(a, b) | ExprKind::Or(a, b) => {
                let ta = self.bool_operand(a, env);
                let tb = self.bool_operand(b, env);
                let (ta, tb) = (ta?, tb?);
                let is_and = matches!(e.kind, ExprKind::And(..));
                let mut items = Vec::new();
                for t in [ta, tb] {
                    match t.kind {
                        TKind::And(xs) if is_and => items.extend(xs),
                        TKind::Or(xs) if !is_and => items.extend(xs),
                        kind => items.push(TExpr { kind, ..t }),
                    }
                }
                mk(
                    if is_and {
                        TKind::And(items)
                    } else {
                        TKind::Or(items)
                    },
                    Type::Bool,
                )
            }
            ExprKind::Implies(a, b) | ExprKind::Iff(a, b) => {
                let ta = self.bool_operand(a, env);
                let tb = self.bool_operand(b, env);
                let (ta, tb) = (Box::new(ta?), Box::new(tb?));
                mk(
                    if matches!(e.kind, ExprKind::Implies(..)) {
                        TKind::Implies(ta, tb)
                    } else {
                        TKind::Iff(ta, tb)
                    },
                    Type::Bool,
                )
            }
            ExprKind::Cmp(first, rest) => {
                let tf = self.expr(first, env);
                let mut trest = Vec::new();
                let mut ok = tf.is_some();
                for (op, x) in rest {
                    match self.expr(x, env) {
                        Some(t) => trest.push((*op, t)),
                        None => ok = false,
                    }
                }
                if !ok {
                    return None;
                }
                let tf = tf?;
                let mut prev = &tf;
                for (op, x) in &trest {
                    let fine = match op {
                        CmpOp::Eq | CmpOp::Ne => self.voc.comparable(&prev.ty, &x.ty),
                        _ => self.voc.is_numeric(&prev.ty) && self.voc.is_numeric(&x.ty),
                    };
                    if !fine {
                        let bad = if self.voc.is_numeric(&prev.ty) || matches!(op, CmpOp::Eq | CmpOp::Ne) {
                            &x.ty
                        } else {
                            &prev.ty
                        };
                        let expected = if matches!(op, CmpOp::Eq | CmpOp::Ne) {
                            prev.ty.to_string()
                        } else {
                            "a number".to_string()
                        };
                        self.errors.push(mismatch(x.span, expected, bad));
                        return None;
                    }
                    prev = x;
                }
                mk(TKind::Cmp(Box::new(tf), trest), Type::Bool)
            }
            ExprKind::Arith(op, a, b) => {
                let ta = self.num_operand(a, env);
                let tb = self.num_operand(b, env);
                let (ta, tb) = (ta?, tb?);
                let ty = if *op == ArithOp::Div {
                    Type::Real
                } else {
                    self.join_numeric(&ta.ty, &tb.ty)
                };
                mk(TKind::Arith(*op, Box::new(ta), Box::new(tb)), ty)
            }
            ExprKind::Neg(x) => {
                let tx = self.num_operand(x, env)?;
                let ty = self.base_numeric(&tx.ty);
                mk(TKind::Neg(Box::new(tx)), ty)
            }
            ExprKind::Quant(q, bs, body) => {
                let mark = env.len();
                let bound = self.binders(bs, env);
                let tb = self.bool_operand(body, env);
                env.truncate(mark);
                mk(TKind::Quant(*q, bound?, Box::new(tb?)), Type::Bool)
            }
            ExprKind::Count(bs, body) => {
                let mark = env.len();
                let bound = self.binders(bs, env);
                let tb = self.bool_operand(body, env);
                env.truncate(mark);
                mk(TKind::Count(bound?, Box::new(tb?)), Type::Int)
            }
            ExprKind::Agg(op, bs, term) => {
                let mark = env.len();
                let bound = self.binders(bs, env);
                let tt = self.num_operand(term, env);
                env.truncate(mark);
                let tt = tt?;
                let ty = self.base_numeric(&tt.ty);
                mk(TKind::Agg(*op, bound?, Box::new(tt)), ty)
            }
            ExprKind::Ite(c, t, f) => {
                let tc = self.bool_operand(c, env);
                let tt = self.expr(t, env);
                let tf = self.expr(f, env);
                let (tc, tt, tf) = (tc?, tt?, tf?);
                let ty = if tt.ty == tf.ty {
                    tt.ty.clone()
                } else if self.voc.is_numeric(&tt.ty) && self.voc.is_numeric(&tf.ty) {
                    self.join_numeric(&tt.ty, &tf.ty)
                } else {
                    self.errors.push(mismatch(f.span, &tt.ty, &tf.ty));
                    return None;
                };
                mk(TKind::Ite(Box::new(tc), Box::new(tt), Box::new(tf)), ty)
            }
        }
    }

    fn args(
        &mut self,
        sig: &SymbolSig,
        args: &[Expr],
        sp: Span,
        name: &str,
        env: &mut Env,
    ) -> Option<Vec<TExpr>> {
        if sig.args.len() != args.len() {
            self.errors.push(err(
                sp,
                format!(
                    "`{name}` takes {} argument(s), {} given",
                    sig.args.len(),
                    args.len()
                ),
            ));
            return None;
        }
        let mut out = Vec::new();
        let mut ok = true;
        for (a, t) in args.iter().zip(&sig.args) {
            match self.expr(a, env) {
                Some(x) => {
                    if !self.voc.accepts(t, &x.ty) {
                        self.errors.push(mismatch(a.span, t, &x.ty));
                        ok = false;
                    }
                    out.push(x);
                }
                None => ok = false,
            }
        }
        ok.then_some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn typed(src: &str) -> Result<TypedKB, TypeErrors> {
        check(&parse_kb(src).unwrap())
    }

    const VOTING: &str =
        "vocabulary V { age: () -> Int  vote: () -> Bool } theory T:V { vote() <=> 18 =< age(). }";

    #[test]
    fn voting_is_well_typed() {
        let t = typed(VOTING).unwrap();
        let TKind::Iff(_, rhs) = &t.theories[0].axioms[0].expr.kind else {
            panic!()
        };
        assert_eq!(rhs.ty, Type::Bool);
        assert!(matches!(rhs.kind, TKind::Cmp(..)));
    }

    #[test]
    fn weight_applied_to_int_is_rejected() {
        let e = typed(
            "vocabulary V { type Person weight: Person -> Real }
             theory T:V { weight(3) > 2. }",
        )
        .unwrap_err();
        assert!(e.0[0].message.contains("expected Person"), "{e}");
        assert_eq!(e.0[0].found.as_deref(), Some("Int"));
    }

    #[test]
    fn concept_cardinality_is_int() {
        let t = typed(
            "vocabulary V { type Person := {p1, p2}
               Fever, Cough: Person -> Bool
               Symptom: Concept[Person->Bool] -> Bool
               n: Person -> Int }
             theory T:V { !p in Person: n(p) = #{x in Concept[Person->Bool]: Symptom(x) & $(x)(p)}. }",
        )
        .unwrap();
        let mut saw_count = false;
        t.theories[0].axioms[0].expr.visit(&mut |e| {
            if let TKind::Count(..) = e.kind {
                assert_eq!(e.ty, Type::Int);
                saw_count = true;
            }
        });
        assert!(saw_count);
    }

    #[test]
    fn dollar_on_plain_concept_is_an_error() {
        let e = typed(
            "vocabulary V { c: () -> Concept  p: () -> Bool } theory T:V { $(c())(). }",
        )
        .unwrap_err();
        assert!(e.0[0].message.contains("Concept[signature]"));
    }

    #[test]
    fn reports_all_errors() {
        let e = typed(
            "vocabulary V { type P p: P -> Bool } theory T:V { p(1). q(). 1 + true > 0. }",
        )
        .unwrap_err();
        assert_eq!(e.0.len(), 3, "{e}");
    }

    #[test]
    fn division_is_real_and_int_widens_to_real() {
        let voc = typed("vocabulary V { x: () -> Int  y: () -> Real }")
            .unwrap()
            .vocabularies["V"]
            .clone();
        let e = check_expr(&voc, &parse_expr("x() / 2").unwrap()).unwrap();
        assert_eq!(e.ty, Type::Real);
        check_expr(&voc, &parse_expr("y() = x()").unwrap()).unwrap();
    }

    #[test]
    fn builtin_types_are_not_redeclarable() {
        let e = typed("vocabulary V { type Int }").unwrap_err();
        assert!(e.0[0].message.contains("built-in"));
    }

    #[test]
    fn rule_head_vars_are_implicit() {
        let t = typed(
            "vocabulary V { type N := {1..3} edge, tc: N * N -> Bool }
             theory T:V { { tc(x, y) <- edge(x, y). tc(x, y) <- ?z in N: tc(x, z) & tc(z, y). } }",
        )
        .unwrap();
        let r = &t.theories[0].definitions[0].rules[1];
        assert_eq!(r.vars.len(), 2);
        assert_eq!(t.theories[0].definitions[0].defined, vec!["tc".to_string()]);
    }

    #[test]
    fn unbound_body_variable_is_an_error() {
        let e = typed(
            "vocabulary V { type N := {1..3} p, q: N -> Bool }
             theory T:V { { p(x) <- q(y). } }",
        )
        .unwrap_err();
        assert!(e.0[0].message.contains("unknown identifier `y`"));
    }

    #[test]
    fn structure_type_extension_marks_numeric_type() {
        let t = typed("vocabulary V { type Age  age: () -> Age } structure S:V { Age := {0..120} }")
            .unwrap();
        assert!(t.vocabularies["V"].is_numeric(&Type::Custom("Age".into())));
    }

    #[test]
    fn structure_checks() {
        let e = typed(
            "vocabulary V { type Person weight: Person -> Real p: Person -> Bool }
             structure S:V { Person := {Bob, Alice} weight := {Bob -> 80, Carol -> 1} p := {(Bob, Alice)} }",
        )
        .unwrap_err();
        assert_eq!(e.0.len(), 2, "{e}");
    }

    #[test]
    fn idempotent() {
        let t = typed(VOTING).unwrap();
        assert_eq!(check(&t.kb).unwrap(), t);
    }
}
