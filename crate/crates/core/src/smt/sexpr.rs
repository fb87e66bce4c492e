//! S-expressions as printed by SMT-LIB 2 solvers.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    /// A symbol or numeral; `|quoted|` symbols are stored without bars.
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(xs) => Some(xs),
            _ => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) if a.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)) && !a.is_empty() => {
                write!(f, "{a}")
            }
            Sexp::Atom(a) => write!(f, "|{a}|"),
            Sexp::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            Sexp::List(xs) => {
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Incremental reader: feed lines, collect complete top-level expressions.
#[derive(Default)]
pub struct Reader {
    stack: Vec<Vec<Sexp>>,
    token: String,
    state: State,
}

#[derive(Default, PartialEq, Eq)]
enum State {
    #[default]
    Normal,
    Quoted,
    Str,
}

impl Reader {
    pub fn new() -> Reader {
        Reader::default()
    }

    fn finish_token(&mut self, out: &mut Vec<Sexp>) {
        if self.token.is_empty() {
            return;
        }
        let atom = Sexp::Atom(std::mem::take(&mut self.token));
        self.push(atom, out);
    }

    fn push(&mut self, x: Sexp, out: &mut Vec<Sexp>) {
        match self.stack.last_mut() {
            Some(top) => top.push(x),
            None => out.push(x),
        }
    }

    /// Consumes one line of solver output (without the newline).
    pub fn feed(&mut self, line: &str) -> Vec<Sexp> {
        let mut out = Vec::new();
        let mut chars = line.chars().peekable();
        while let Some(c) = chars.next() {
            match self.state {
                State::Quoted => {
                    if c == '|' {
                        self.state = State::Normal;
                        let atom = Sexp::Atom(std::mem::take(&mut self.token));
                        self.push(atom, &mut out);
                    } else {
                        self.token.push(c);
                    }
                }
                State::Str => {
                    if c == '"' {
                        if chars.peek() == Some(&'"') {
                            chars.next();
                            self.token.push('"');
                        } else {
                            self.state = State::Normal;
                            let s = Sexp::Str(std::mem::take(&mut self.token));
                            self.push(s, &mut out);
                        }
                    } else {
                        self.token.push(c);
                    }
                }
                State::Normal => match c {
                    '(' => {
                        self.finish_token(&mut out);
                        self.stack.push(Vec::new());
                    }
                    ')' => {
                        self.finish_token(&mut out);
                        if let Some(items) = self.stack.pop() {
                            self.push(Sexp::List(items), &mut out);
                        }
                    }
                    '|' => {
                        self.finish_token(&mut out);
                        self.state = State::Quoted;
                    }
                    '"' => {
                        self.finish_token(&mut out);
                        self.state = State::Str;
                    }
                    ';' => break,
                    c if c.is_whitespace() => self.finish_token(&mut out),
                    c => self.token.push(c),
                },
            }
        }
        match self.state {
            State::Normal => self.finish_token(&mut out),
            _ => self.token.push('\n'),
        }
        out
    }
}

pub fn parse_all(text: &str) -> Vec<Sexp> {
    let mut r = Reader::new();
    text.lines().flat_map(|l| r.feed(l)).collect()
}

/// Quotes an arbitrary name as an SMT-LIB symbol.
pub fn quote(name: &str) -> String {
    format!("|{}|", name.replace(['|', '\\'], "_"))
}
