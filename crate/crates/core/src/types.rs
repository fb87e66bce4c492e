//! Resolved types, vocabularies and the typed expression tree.

use std::fmt;

use indexmap::IndexMap;

use crate::lang::{AggOp, ArithOp, CmpOp, Quantifier, Span};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Bool,
    Int,
    Real,
    Custom(String),
    Concept(Option<Box<SymbolSig>>),
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => write!(f, "Bool"),
            Type::Int => write!(f, "Int"),
            Type::Real => write!(f, "Real"),
            Type::Custom(n) => write!(f, "{n}"),
            Type::Concept(None) => write!(f, "Concept"),
            Type::Concept(Some(sig)) => {
                write!(f, "Concept[")?;
                if sig.args.is_empty() {
                    write!(f, "()")?;
                }
                for (i, a) in sig.args.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "->{}]", sig.result)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolSig {
    pub args: Vec<Type>,
    pub result: Type,
}

impl fmt::Display for SymbolSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "()")?;
        }
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, " -> {}", self.result)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NumKind {
    Int,
    Real,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeKind {
    /// Elements are identifiers.
    Symbolic,
    /// A finite subset of Int or Real.
    Numeric(NumKind),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeInfo {
    pub name: String,
    pub kind: TypeKind,
    /// Constructor list given in the vocabulary, if any.
    pub constructors: Option<Vec<Value>>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolInfo {
    pub name: String,
    pub sig: SymbolSig,
    pub span: Span,
}

/// A vocabulary with every type reference resolved.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Vocab {
    pub name: String,
    pub types: IndexMap<String, TypeInfo>,
    pub symbols: IndexMap<String, SymbolInfo>,
    /// Element identifier -> owning custom type, across vocabulary
    /// constructors and structure enumerations.
    pub elements: IndexMap<String, String>,
}

impl Vocab {
    pub fn symbol(&self, name: &str) -> Option<&SymbolInfo> {
        self.symbols.get(name)
    }

    pub fn is_numeric(&self, t: &Type) -> bool {
        self.num_kind(t).is_some()
    }

    pub fn num_kind(&self, t: &Type) -> Option<NumKind> {
        match t {
            Type::Int => Some(NumKind::Int),
            Type::Real => Some(NumKind::Real),
            Type::Custom(n) => match self.types.get(n).map(|i| &i.kind) {
                Some(TypeKind::Numeric(k)) => Some(*k),
                _ => None,
            },
            _ => None,
        }
    }

    /// Whether a value of type `found` may stand where `expected` is required.
    /// Int widens to Real; numeric subtypes mix freely with their base (range
    /// membership is checked against extensions, not types).
    pub fn accepts(&self, expected: &Type, found: &Type) -> bool {
        if expected == found {
            return true;
        }
        matches!(
            (self.num_kind(expected), self.num_kind(found)),
            (Some(NumKind::Real), Some(_)) | (Some(NumKind::Int), Some(NumKind::Int))
        )
    }

    /// Whether two types may be compared with `=`.
    pub fn comparable(&self, a: &Type, b: &Type) -> bool {
        a == b || (self.is_numeric(a) && self.is_numeric(b))
    }

    /// Declared symbols whose signature is exactly `sig`, in declaration order.
    pub fn concepts_with(&self, sig: &SymbolSig) -> Vec<String> {
        self.symbols
            .values()
            .filter(|s| &s.sig == sig)
            .map(|s| s.name.clone())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TExpr {
    pub kind: TKind,
    pub ty: Type,
    pub span: Span,
}

pub type Bound = (String, Type);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TKind {
    Const(Value),
    Var(String),
    App(String, Vec<TExpr>),
    Not(Box<TExpr>),
    And(Vec<TExpr>),
    Or(Vec<TExpr>),
    Implies(Box<TExpr>, Box<TExpr>),
    Iff(Box<TExpr>, Box<TExpr>),
    Cmp(Box<TExpr>, Vec<(CmpOp, TExpr)>),
    Arith(ArithOp, Box<TExpr>, Box<TExpr>),
    Neg(Box<TExpr>),
    Quant(Quantifier, Vec<Bound>, Box<TExpr>),
    Count(Vec<Bound>, Box<TExpr>),
    Agg(AggOp, Vec<Bound>, Box<TExpr>),
    ConceptApp(Box<TExpr>, Vec<TExpr>),
    Ite(Box<TExpr>, Box<TExpr>, Box<TExpr>),
}

impl TExpr {
    pub fn constant(v: Value, ty: Type) -> TExpr {
        TExpr {
            kind: TKind::Const(v),
            ty,
            span: Span::default(),
        }
    }

    /// Calls `f` on every node, parents before children.
    pub fn visit(&self, f: &mut impl FnMut(&TExpr)) {
        f(self);
        match &self.kind {
            TKind::Const(_) | TKind::Var(_) => {}
            TKind::App(_, args) => args.iter().for_each(|a| a.visit(f)),
            TKind::Not(x) | TKind::Neg(x) => x.visit(f),
            TKind::And(xs) | TKind::Or(xs) => xs.iter().for_each(|a| a.visit(f)),
            TKind::Implies(a, b) | TKind::Iff(a, b) | TKind::Arith(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            TKind::Cmp(first, rest) => {
                first.visit(f);
                rest.iter().for_each(|(_, x)| x.visit(f));
            }
            TKind::Quant(_, _, b) | TKind::Count(_, b) | TKind::Agg(_, _, b) => b.visit(f),
            TKind::ConceptApp(c, args) => {
                c.visit(f);
                args.iter().for_each(|a| a.visit(f));
            }
            TKind::Ite(c, t, e) => {
                c.visit(f);
                t.visit(f);
                e.visit(f);
            }
        }
    }
}

/// A named, typed axiom together with its source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TAxiom {
    pub expr: TExpr,
    pub source: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TRule {
    /// Universally quantified variables, explicit or implied by the head.
    pub vars: Vec<Bound>,
    pub symbol: String,
    pub args: Vec<TExpr>,
    /// `Some` for function heads `f(args) = value`.
    pub value: Option<TExpr>,
    pub body: TExpr,
    pub source: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TDefinition {
    pub rules: Vec<TRule>,
    /// Defined symbols, in order of first appearance.
    pub defined: Vec<String>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedTheory {
    pub name: String,
    pub vocabulary: String,
    pub axioms: Vec<TAxiom>,
    pub definitions: Vec<TDefinition>,
}
