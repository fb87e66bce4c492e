use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParseErrors};

/// Parses a full knowledge base. Either every block parses or no tree is returned.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, ParseErrors> {
    let tokens = tokenize(text).map_err(|e| ParseErrors(vec![e]))?;
    let mut p = Parser::new(tokens);
    let mut kb = KnowledgeBase::default();
    let mut errors = Vec::new();
    while !p.at(&Tok::Eof) {
        match p.block(&mut kb) {
            Ok(()) => {}
            Err(e) => {
                errors.push(e);
                p.recover_to_block();
            }
        }
    }
    if errors.is_empty() {
        Ok(kb)
    } else {
        Err(ParseErrors(errors))
    }
}

/// Parses a standalone expression, e.g. a term given on the command line.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(tokens);
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

/// Parses a single enumeration element (`Bob`, `17`, `18.5`, `true`).
pub fn parse_element(text: &str) -> Result<EnumElement, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser::new(tokens);
    let e = p.element()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == word)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_expected(&self, expected: &[&str]) -> ParseError {
        let sp = self.span();
        let mut e = ParseError::new(
            sp.line,
            sp.col,
            format!("unexpected {}", self.peek()),
        );
        e.expected = expected.iter().map(|s| s.to_string()).collect();
        e
    }

    fn expect(&mut self, t: Tok) -> Result<Span, ParseError> {
        if self.at(&t) {
            Ok(self.bump().span)
        } else {
            Err(self.error_expected(&[&t.to_string()]))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump().span;
                Ok((s, sp))
            }
            _ => Err(self.error_expected(&["identifier"])),
        }
    }

    fn recover_to_block(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Ident(w)
                    if (w == "vocabulary" || w == "theory" || w == "structure")
                        && self.pos > 0 =>
                {
                    // only resynchronise on a keyword that starts a line of blocks
                    let prev = &self.tokens[self.pos - 1].tok;
                    if matches!(prev, Tok::RBrace) {
                        return;
                    }
                    self.bump();
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn block(&mut self, kb: &mut KnowledgeBase) -> Result<(), ParseError> {
        let start = self.span();
        if self.at_ident("vocabulary") {
            self.bump();
            let (name, _) = self.ident()?;
            self.expect(Tok::LBrace)?;
            let mut voc = Vocabulary {
                name,
                types: Vec::new(),
                symbols: Vec::new(),
                span: start,
            };
            while !self.at(&Tok::RBrace) {
                self.vocab_item(&mut voc)?;
            }
            let end = self.expect(Tok::RBrace)?;
            voc.span = start.to(end);
            kb.vocabularies.push(voc);
        } else if self.at_ident("theory") {
            self.bump();
            let (name, vocabulary) = self.block_header()?;
            self.expect(Tok::LBrace)?;
            let mut items = Vec::new();
            while !self.at(&Tok::RBrace) {
                items.push(self.theory_item()?);
            }
            let end = self.expect(Tok::RBrace)?;
            kb.theories.push(Theory {
                name,
                vocabulary,
                items,
                span: start.to(end),
            });
        } else if self.at_ident("structure") {
            self.bump();
            let (name, vocabulary) = self.block_header()?;
            self.expect(Tok::LBrace)?;
            let mut enumerations = Vec::new();
            while !self.at(&Tok::RBrace) {
                enumerations.push(self.enumeration()?);
            }
            let end = self.expect(Tok::RBrace)?;
            kb.structures.push(StructureBlock {
                name,
                vocabulary,
                enumerations,
                span: start.to(end),
            });
        } else {
            return Err(self.error_expected(&["vocabulary", "theory", "structure"]));
        }
        Ok(())
    }

    /// `Name:Voc`
    fn block_header(&mut self) -> Result<(String, String), ParseError> {
        let (name, _) = self.ident()?;
        self.expect(Tok::Colon)?;
        let (voc, _) = self.ident()?;
        Ok((name, voc))
    }

    fn vocab_item(&mut self, voc: &mut Vocabulary) -> Result<(), ParseError> {
        let start = self.span();
        if self.at_ident("type") {
            self.bump();
            let (name, _) = self.ident()?;
            let base = if self.eat(&Tok::SubType) {
                Some(self.type_ref()?)
            } else {
                None
            };
            let constructors = if self.eat(&Tok::Assign) {
                self.expect(Tok::LBrace)?;
                match self.enum_set()? {
                    EnumBody::Tuples(t) => Some(t),
                    _ => {
                        return Err(ParseError::new(
                            start.line,
                            start.col,
                            "a type's constructor list cannot contain `->` entries",
                        ))
                    }
                }
            } else {
                None
            };
            self.eat(&Tok::Dot);
            voc.types.push(TypeDecl {
                name,
                base,
                constructors,
                span: start.to(self.prev_span()),
            });
            return Ok(());
        }
        let mut names = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            names.push(self.ident()?);
        }
        self.expect(Tok::Colon)?;
        let signature = self.signature()?;
        self.eat(&Tok::Dot);
        for (name, sp) in names {
            voc.symbols.push(SymbolDecl {
                name,
                signature: signature.clone(),
                span: sp.to(self.prev_span()),
            });
        }
        Ok(())
    }

    fn signature(&mut self) -> Result<Signature, ParseError> {
        let mut args = Vec::new();
        if self.at(&Tok::LParen) && self.peek_at(1) == &Tok::RParen {
            self.bump();
            self.bump();
        } else {
            args.push(self.type_ref()?);
            while self.eat(&Tok::Star) {
                args.push(self.type_ref()?);
            }
        }
        self.expect(Tok::Arrow)?;
        let result = self.type_ref()?;
        Ok(Signature { args, result })
    }

    fn type_ref(&mut self) -> Result<TypeRef, ParseError> {
        let (name, _) = self.ident()?;
        if name == "Concept" {
            if self.eat(&Tok::LBracket) {
                let sig = self.signature()?;
                self.expect(Tok::RBracket)?;
                return Ok(TypeRef::Concept(Some(Box::new(sig))));
            }
            return Ok(TypeRef::Concept(None));
        }
        Ok(TypeRef::Named(name))
    }

    fn theory_item(&mut self) -> Result<TheoryItem, ParseError> {
        if self.at(&Tok::LBrace) {
            let start = self.bump().span;
            let mut rules = Vec::new();
            while !self.at(&Tok::RBrace) {
                rules.push(self.rule()?);
            }
            let end = self.expect(Tok::RBrace)?;
            if rules.is_empty() {
                return Err(ParseError::new(
                    start.line,
                    start.col,
                    "a definition needs at least one rule",
                ));
            }
            return Ok(TheoryItem::Definition(Definition {
                rules,
                span: start.to(end),
            }));
        }
        let e = self.expr()?;
        self.expect(Tok::Dot)?;
        Ok(TheoryItem::Axiom(e))
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let start = self.span();
        let mut vars = Vec::new();
        while self.at(&Tok::Forall) {
            self.bump();
            vars.extend(self.binders()?);
            self.expect(Tok::Colon)?;
        }
        let head_expr = self.expr()?;
        let head = self.head_from(head_expr)?;
        let body = if self.eat(&Tok::RuleArrow) {
            Some(self.expr()?)
        } else {
            None
        };
        let end = self.expect(Tok::Dot)?;
        Ok(Rule {
            vars,
            head,
            body,
            span: start.to(end),
        })
    }

    fn head_from(&self, e: Expr) -> Result<Head, ParseError> {
        let span = e.span;
        match e.kind {
            ExprKind::App(symbol, args) => Ok(Head {
                symbol,
                args,
                value: None,
                span,
            }),
            ExprKind::Ident(symbol) => Ok(Head {
                symbol,
                args: Vec::new(),
                value: None,
                span,
            }),
            ExprKind::Cmp(lhs, mut rest) if rest.len() == 1 && rest[0].0 == CmpOp::Eq => {
                let (_, value) = rest.pop().expect("one link");
                let (symbol, args) = match lhs.kind {
                    ExprKind::App(s, a) => (s, a),
                    ExprKind::Ident(s) => (s, Vec::new()),
                    _ => {
                        return Err(ParseError::new(
                            span.line,
                            span.col,
                            "a function rule head must have the form `f(args) = value`",
                        ))
                    }
                };
                Ok(Head {
                    symbol,
                    args,
                    value: Some(value),
                    span,
                })
            }
            ExprKind::Or(..) => Err(ParseError::new(
                span.line,
                span.col,
                "disjunction in a rule head: the head of a rule must be a single atom",
            )),
            _ => Err(ParseError::new(
                span.line,
                span.col,
                "the head of a rule must be a single atom",
            )),
        }
    }

    fn enumeration(&mut self) -> Result<Enumeration, ParseError> {
        let start = self.span();
        let (target, _) = self.ident()?;
        self.expect(Tok::Assign)?;
        let body = if self.at(&Tok::LBrace) {
            self.bump();
            self.enum_set()?
        } else {
            EnumBody::Constant(self.element()?)
        };
        self.eat(&Tok::Dot);
        Ok(Enumeration {
            target,
            body,
            span: start.to(self.prev_span()),
        })
    }

    fn enum_set(&mut self) -> Result<EnumBody, ParseError> {
        let mut tuples = Vec::new();
        let mut map = Vec::new();
        while !self.at(&Tok::RBrace) {
            let sp = self.span();
            let tuple = self.enum_tuple()?;
            if self.eat(&Tok::Arrow) {
                let value = self.element()?;
                let args = match tuple {
                    EnumTuple::Tuple(t) => t,
                    EnumTuple::Range(..) => {
                        return Err(ParseError::new(
                            sp.line,
                            sp.col,
                            "a range cannot be mapped to a value",
                        ))
                    }
                };
                map.push((args, value));
            } else {
                tuples.push(tuple);
            }
            if !tuples.is_empty() && !map.is_empty() {
                return Err(ParseError::new(
                    sp.line,
                    sp.col,
                    "an enumeration cannot mix tuples and `->` entries",
                ));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(if map.is_empty() {
            EnumBody::Tuples(tuples)
        } else {
            EnumBody::Map(map)
        })
    }

    fn enum_tuple(&mut self) -> Result<EnumTuple, ParseError> {
        if self.eat(&Tok::LParen) {
            let mut elems = Vec::new();
            while !self.at(&Tok::RParen) {
                elems.push(self.element()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
            return Ok(EnumTuple::Tuple(elems));
        }
        let sp = self.span();
        let first = self.element()?;
        if self.eat(&Tok::DotDot) {
            let last = self.element()?;
            return match (first, last) {
                (EnumElement::Int(a), EnumElement::Int(b)) => Ok(EnumTuple::Range(a, b)),
                _ => Err(ParseError::new(
                    sp.line,
                    sp.col,
                    "range bounds must be integers",
                )),
            };
        }
        Ok(EnumTuple::Tuple(vec![first]))
    }

    fn element(&mut self) -> Result<EnumElement, ParseError> {
        let negative = self.eat(&Tok::Minus);
        let e = match self.peek().clone() {
            Tok::Int(i) => EnumElement::Int(if negative { -i } else { i }),
            Tok::Real(r) => EnumElement::Real(if negative { -r } else { r }),
            Tok::Ident(s) if !negative => match s.as_str() {
                "true" => EnumElement::Bool(true),
                "false" => EnumElement::Bool(false),
                _ => EnumElement::Ident(s),
            },
            _ => return Err(self.error_expected(&["identifier", "number"])),
        };
        self.bump();
        Ok(e)
    }

    /// `x in T`, `x, y in T`, `x in T, y in U`
    fn binders(&mut self) -> Result<Vec<Binder>, ParseError> {
        let mut out = Vec::new();
        loop {
            let mut names = vec![self.ident()?];
            while self.eat(&Tok::Comma) {
                names.push(self.ident()?);
            }
            self.expect(Tok::In)?;
            let ty = self.type_ref()?;
            for (name, span) in names {
                out.push(Binder {
                    name,
                    ty: ty.clone(),
                    span,
                });
            }
            if self.at(&Tok::Comma) && matches!(self.peek_at(1), Tok::Ident(_)) {
                self.bump();
                continue;
            }
            return Ok(out);
        }
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        self.iff()
    }

    fn iff(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::Iff) {
            let rhs = self.implies()?;
            let sp = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Iff(Box::new(lhs), Box::new(rhs)), sp);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            let sp = lhs.span.to(rhs.span);
            return Ok(Expr::new(
                ExprKind::Implies(Box::new(lhs), Box::new(rhs)),
                sp,
            ));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Or) {
            let rhs = self.and()?;
            let sp = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Or(Box::new(lhs), Box::new(rhs)), sp);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.comparison()?;
        while self.eat(&Tok::And) {
            let rhs = self.comparison()?;
            let sp = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::And(Box::new(lhs), Box::new(rhs)), sp);
        }
        Ok(lhs)
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let first = self.additive()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            self.bump();
            rest.push((op, self.additive()?));
        }
        if rest.is_empty() {
            return Ok(first);
        }
        let sp = first.span.to(rest.last().expect("nonempty").1.span);
        Ok(Expr::new(ExprKind::Cmp(Box::new(first), rest), sp))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            let sp = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Arith(op, Box::new(lhs), Box::new(rhs)), sp);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            let sp = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Arith(op, Box::new(lhs), Box::new(rhs)), sp);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        if self.eat(&Tok::Not) {
            let e = self.unary()?;
            let sp = start.to(e.span);
            return Ok(Expr::new(ExprKind::Not(Box::new(e)), sp));
        }
        if self.eat(&Tok::Minus) {
            let e = self.unary()?;
            let sp = start.to(e.span);
            return Ok(match e.kind {
                ExprKind::Int(i) => Expr::new(ExprKind::Int(-i), sp),
                ExprKind::Real(r) => Expr::new(ExprKind::Real(-r), sp),
                kind => Expr::new(ExprKind::Neg(Box::new(Expr::new(kind, e.span))), sp),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(i), start))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(Expr::new(ExprKind::Real(r), start))
            }
            Tok::Concept(name) => {
                self.bump();
                Ok(Expr::new(ExprKind::ConceptLit(name), start))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Forall | Tok::Exists => {
                let q = if self.bump().tok == Tok::Forall {
                    Quantifier::Forall
                } else {
                    Quantifier::Exists
                };
                let binders = self.binders()?;
                self.expect(Tok::Colon)?;
                let body = self.expr()?;
                let sp = start.to(body.span);
                Ok(Expr::new(ExprKind::Quant(q, binders, Box::new(body)), sp))
            }
            Tok::Hash => {
                self.bump();
                self.expect(Tok::LBrace)?;
                let binders = self.binders()?;
                self.expect(Tok::Colon)?;
                let body = self.expr()?;
                let end = self.expect(Tok::RBrace)?;
                Ok(Expr::new(
                    ExprKind::Count(binders, Box::new(body)),
                    start.to(end),
                ))
            }
            Tok::Dollar => {
                self.bump();
                self.expect(Tok::LParen)?;
                let concept = self.expr()?;
                self.expect(Tok::RParen)?;
                let (args, end) = self.call_args()?;
                Ok(Expr::new(
                    ExprKind::ConceptApp(Box::new(concept), args),
                    start.to(end),
                ))
            }
            Tok::Ident(word) => {
                match word.as_str() {
                    "true" => {
                        self.bump();
                        return Ok(Expr::new(ExprKind::Bool(true), start));
                    }
                    "false" => {
                        self.bump();
                        return Ok(Expr::new(ExprKind::Bool(false), start));
                    }
                    "if" => return self.ite(),
                    "sum" | "min" | "max"
                        if self.peek_at(1) == &Tok::LParen
                            && matches!(self.peek_at(2), Tok::Ident(l) if l == "lambda") =>
                    {
                        let op = match word.as_str() {
                            "sum" => AggOp::Sum,
                            "min" => AggOp::Min,
                            _ => AggOp::Max,
                        };
                        self.bump();
                        self.bump();
                        self.bump();
                        let binders = self.binders()?;
                        self.expect(Tok::Colon)?;
                        let term = self.expr()?;
                        let end = self.expect(Tok::RParen)?;
                        return Ok(Expr::new(
                            ExprKind::Agg(op, binders, Box::new(term)),
                            start.to(end),
                        ));
                    }
                    _ => {}
                }
                self.bump();
                if self.at(&Tok::LParen) {
                    let (args, end) = self.call_args()?;
                    return Ok(Expr::new(ExprKind::App(word, args), start.to(end)));
                }
                Ok(Expr::new(ExprKind::Ident(word), start))
            }
            _ => Err(self.error_expected(&["expression"])),
        }
    }

    fn ite(&mut self) -> Result<Expr, ParseError> {
        let start = self.bump().span;
        let cond = self.expr()?;
        if !self.at_ident("then") {
            return Err(self.error_expected(&["then"]));
        }
        self.bump();
        let then = self.expr()?;
        if !self.at_ident("else") {
            return Err(self.error_expected(&["else"]));
        }
        self.bump();
        let els = self.expr()?;
        let sp = start.to(els.span);
        Ok(Expr::new(
            ExprKind::Ite(Box::new(cond), Box::new(then), Box::new(els)),
            sp,
        ))
    }

    fn call_args(&mut self) -> Result<(Vec<Expr>, Span), ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        while !self.at(&Tok::RParen) {
            args.push(self.expr()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let end = self.expect(Tok::RParen)?;
        Ok((args, end))
    }
}
