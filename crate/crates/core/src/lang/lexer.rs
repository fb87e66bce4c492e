use std::fmt;

use num::{BigInt, BigRational, Num};

use super::ast::Span;
use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    Real(BigRational),
    /// `` `name ``
    Concept(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    DotDot,
    Assign,
    Arrow,
    RuleArrow,
    Iff,
    Implies,
    SubType,
    Not,
    And,
    Or,
    Forall,
    Exists,
    Hash,
    Dollar,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Int(i) => return write!(f, "number `{i}`"),
            Tok::Real(r) => return write!(f, "number `{}`", crate::value::format_decimal(r)),
            Tok::Concept(s) => return write!(f, "concept `` `{s} ``"),
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Assign => ":=",
            Tok::Arrow => "->",
            Tok::RuleArrow => "<-",
            Tok::Iff => "<=>",
            Tok::Implies => "=>",
            Tok::SubType => "<:",
            Tok::Not => "~",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Forall => "!",
            Tok::Exists => "?",
            Tok::Hash => "#",
            Tok::Dollar => "$",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Eq => "=",
            Tok::Ne => "~=",
            Tok::Lt => "<",
            Tok::Le => "=<",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::In => "in",
            Tok::Eof => return write!(f, "end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer::new(src).run()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let (start, line, col) = (self.pos, self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    span: Span::new(start, start, line, col),
                });
                return Ok(out);
            };
            let tok = if c.is_alphabetic() || c == '_' {
                let word = self.take_while(|c| c.is_alphanumeric() || c == '_');
                if word == "in" {
                    Tok::In
                } else {
                    Tok::Ident(word)
                }
            } else if c.is_ascii_digit() {
                self.number()
            } else if c == '`' {
                self.bump();
                let name = self.take_while(|c| c.is_alphanumeric() || c == '_');
                if name.is_empty() {
                    return Err(ParseError::new(line, col, "expected a symbol name after '`'"));
                }
                Tok::Concept(name)
            } else if c == '\\' && self.starts_with("\\in") {
                self.advance(3);
                Tok::In
            } else {
                match self.punct() {
                    Some(t) => t,
                    None => {
                        return Err(ParseError::new(
                            line,
                            col,
                            format!("unexpected character '{c}'"),
                        ))
                    }
                }
            };
            out.push(Token {
                tok,
                span: Span::new(start, self.pos, line, col),
            });
        }
    }

    fn advance(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn number(&mut self) -> Tok {
        let int_part = self.take_while(|c| c.is_ascii_digit());
        let is_decimal =
            self.peek() == Some('.') && self.peek_at(1).is_some_and(|c| c.is_ascii_digit());
        if !is_decimal {
            return Tok::Int(BigInt::from_str_radix(&int_part, 10).expect("digits"));
        }
        self.bump();
        let frac = self.take_while(|c| c.is_ascii_digit());
        let numer = BigInt::from_str_radix(&format!("{int_part}{frac}"), 10).expect("digits");
        let denom = num::pow(BigInt::from(10), frac.len());
        Tok::Real(BigRational::new(numer, denom))
    }

    fn punct(&mut self) -> Option<Tok> {
        const TABLE: &[(&str, Tok)] = &[
            ("<=>", Tok::Iff),
            ("..", Tok::DotDot),
            (":=", Tok::Assign),
            ("->", Tok::Arrow),
            ("<-", Tok::RuleArrow),
            ("=>", Tok::Implies),
            ("=<", Tok::Le),
            (">=", Tok::Ge),
            ("~=", Tok::Ne),
            ("<:", Tok::SubType),
            ("{", Tok::LBrace),
            ("}", Tok::RBrace),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            ("[", Tok::LBracket),
            ("]", Tok::RBracket),
            (",", Tok::Comma),
            (":", Tok::Colon),
            (".", Tok::Dot),
            ("~", Tok::Not),
            ("¬", Tok::Not),
            ("&", Tok::And),
            ("∧", Tok::And),
            ("|", Tok::Or),
            ("∨", Tok::Or),
            ("!", Tok::Forall),
            ("∀", Tok::Forall),
            ("?", Tok::Exists),
            ("∃", Tok::Exists),
            ("#", Tok::Hash),
            ("$", Tok::Dollar),
            ("+", Tok::Plus),
            ("-", Tok::Minus),
            ("*", Tok::Star),
            ("/", Tok::Slash),
            ("=", Tok::Eq),
            ("≠", Tok::Ne),
            ("<", Tok::Lt),
            ("≤", Tok::Le),
            (">", Tok::Gt),
            ("≥", Tok::Ge),
            ("⇒", Tok::Implies),
            ("⇔", Tok::Iff),
            ("∈", Tok::In),
        ];
        for (text, tok) in TABLE {
            if self.starts_with(text) {
                self.advance(text.chars().count());
                return Some(tok.clone());
            }
        }
        None
    }
}
