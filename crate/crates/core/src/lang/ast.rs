//! Abstract syntax of FO(·) knowledge bases.
//!
//! Every node carries a [`Span`]. Spans never take part in structural
//! equality, so two trees parsed from differently formatted sources compare
//! equal when they differ only in layout.

use std::fmt;

use num::{BigInt, BigRational};

/// Byte range plus the 1-based line/column of its start.
#[derive(Clone, Copy, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span {
            start,
            end,
            line,
            col,
        }
    }

    pub fn to(self, other: Span) -> Span {
        Span {
            start: self.start,
            end: other.end.max(self.end),
            line: self.line,
            col: self.col,
        }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Debug for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    pub vocabularies: Vec<Vocabulary>,
    pub theories: Vec<Theory>,
    pub structures: Vec<StructureBlock>,
}

impl KnowledgeBase {
    pub fn vocabulary(&self, name: &str) -> Option<&Vocabulary> {
        self.vocabularies.iter().find(|v| v.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub name: String,
    pub types: Vec<TypeDecl>,
    pub symbols: Vec<SymbolDecl>,
    pub span: Span,
}

/// `type Name [<: Int|Real] [:= {...}]`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub base: Option<TypeRef>,
    pub constructors: Option<Vec<EnumTuple>>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolDecl {
    pub name: String,
    pub signature: Signature,
    pub span: Span,
}

/// Argument types and result type of a symbol: `A * B -> R`, `() -> R`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub args: Vec<TypeRef>,
    pub result: TypeRef,
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "()")?;
        } else {
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, " * ")?;
                }
                write!(f, "{a}")?;
            }
        }
        write!(f, " -> {}", self.result)
    }
}

/// A type as written in source.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeRef {
    Named(String),
    /// `Concept[σ]`; bare `Concept` when `None`.
    Concept(Option<Box<Signature>>),
}

impl TypeRef {
    pub fn named(name: &str) -> Self {
        TypeRef::Named(name.to_string())
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Named(n) => write!(f, "{n}"),
            TypeRef::Concept(None) => write!(f, "Concept"),
            TypeRef::Concept(Some(sig)) => {
                // compact form, as used in binders: Concept[Person->Bool]
                write!(f, "Concept[")?;
                if sig.args.is_empty() {
                    write!(f, "()")?;
                } else {
                    for (i, a) in sig.args.iter().enumerate() {
                        if i > 0 {
                            write!(f, "*")?;
                        }
                        write!(f, "{a}")?;
                    }
                }
                write!(f, "->{}]", sig.result)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theory {
    pub name: String,
    pub vocabulary: String,
    pub items: Vec<TheoryItem>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TheoryItem {
    Axiom(Expr),
    Definition(Definition),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub rules: Vec<Rule>,
    pub span: Span,
}

/// `[!x in T:] head [= value] [<- body].`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub vars: Vec<Binder>,
    pub head: Head,
    pub body: Option<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Head {
    pub symbol: String,
    pub args: Vec<Expr>,
    /// Present for function heads `f(x) = t`.
    pub value: Option<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureBlock {
    pub name: String,
    pub vocabulary: String,
    pub enumerations: Vec<Enumeration>,
    pub span: Span,
}

/// `Target := {...}` inside a structure (or a type's constructor list).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enumeration {
    pub target: String,
    pub body: EnumBody,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnumBody {
    /// `{a, b}`, `{(1,2), (2,3)}`, `{0..120}`; a type extension or predicate tuples.
    Tuples(Vec<EnumTuple>),
    /// `{Bob -> 80, Alice -> 80}`
    Map(Vec<(Vec<EnumElement>, EnumElement)>),
    /// `f := 20` or `p := true` for nullary symbols.
    Constant(EnumElement),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EnumTuple {
    Tuple(Vec<EnumElement>),
    Range(BigInt, BigInt),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnumElement {
    Ident(String),
    Int(BigInt),
    Real(BigRational),
    Bool(bool),
}

impl fmt::Display for EnumElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnumElement::Ident(s) => write!(f, "{s}"),
            EnumElement::Int(i) => write!(f, "{i}"),
            EnumElement::Real(r) => write!(f, "{}", crate::value::format_decimal(r)),
            EnumElement::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binder {
    pub name: String,
    pub ty: TypeRef,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn boxed(kind: ExprKind, span: Span) -> Box<Self> {
        Box::new(Expr { kind, span })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "~=",
            CmpOp::Lt => "<",
            CmpOp::Le => "=<",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggOp {
    Sum,
    Min,
    Max,
}

impl AggOp {
    pub fn keyword(self) -> &'static str {
        match self {
            AggOp::Sum => "sum",
            AggOp::Min => "min",
            AggOp::Max => "max",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    /// Bare identifier: a variable, a type element, or a nullary symbol.
    Ident(String),
    /// `` `sym ``: a concept literal.
    ConceptLit(String),
    App(String, Vec<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Iff(Box<Expr>, Box<Expr>),
    /// `a op1 b op2 c ...`; a chain means the conjunction of its links.
    Cmp(Box<Expr>, Vec<(CmpOp, Expr)>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Quant(Quantifier, Vec<Binder>, Box<Expr>),
    /// `#{x in T: φ}`
    Count(Vec<Binder>, Box<Expr>),
    /// `sum(lambda x in T: t)`
    Agg(AggOp, Vec<Binder>, Box<Expr>),
    /// `$(t)(args)`
    ConceptApp(Box<Expr>, Vec<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
}
