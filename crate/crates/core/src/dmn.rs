//! Decision tables with the unique hit policy, read from a plain-text grid.
//!
//! ```text
//! table BMILevel U
//! in: BMI ; out: BMILevel
//! < 18.5      | Underweight
//! [18.5..25)  | Normal
//! ```

use std::fmt;

use thiserror::Error;

use crate::check::TypedKB;
use crate::ground::{ground_theory, Assertion, AssertionKind, GroundError};
use crate::inference::{InferenceError, Reasoner};
use crate::interp::PartialStructure;
use crate::check::check_expr;
use crate::lang::parse_expr;
use crate::smt::SolverConfig;
use crate::types::{Type, Vocab};
use crate::value::{parse_number, Value};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DmnError {
    #[error("line {line}: {message}")]
    MalformedTable { line: usize, message: String },
    #[error("hit policy `{0}` is not supported (only U)")]
    UnknownHitPolicy(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("input `{0}` has no finite range; give bounds")]
    UnboundedInput(String),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Endpoint {
    Open(String),
    Closed(String),
}

/// A cell of an input column.
#[derive(Clone, Debug, PartialEq)]
pub enum Condition {
    Any,
    /// Comparison with the input on the left, e.g. `< 18.5`.
    Compare(String, String),
    Interval(Endpoint, Endpoint),
    /// Equality with one of the listed values.
    OneOf(Vec<String>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTable {
    pub name: String,
    pub hit_policy: String,
    /// Input expressions, in FO(·) syntax.
    pub inputs: Vec<String>,
    /// Output symbols.
    pub outputs: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub conditions: Vec<Condition>,
    /// `None` for a blank output cell.
    pub values: Vec<Option<String>>,
}

const COMPARISONS: [&str; 6] = ["=<", ">=", "~=", "<", ">", "="];

fn malformed(line: usize, message: impl Into<String>) -> DmnError {
    DmnError::MalformedTable {
        line,
        message: message.into(),
    }
}

/// A bare symbol name stands for its nullary application.
fn normalize(expr: &str) -> String {
    let e = expr.trim();
    if !e.is_empty() && e.chars().all(|c| c.is_alphanumeric() || c == '_') && !e.chars().next().unwrap().is_ascii_digit() {
        format!("{e}()")
    } else {
        e.to_string()
    }
}

fn parse_condition(cell: &str, line: usize) -> Result<Condition, DmnError> {
    let c = cell.trim();
    if c == "-" || c.is_empty() {
        return Ok(Condition::Any);
    }
    if (c.starts_with('[') || c.starts_with('(')) && (c.ends_with(']') || c.ends_with(')')) {
        let inner = &c[1..c.len() - 1];
        let (a, b) = inner
            .split_once("..")
            .ok_or_else(|| malformed(line, format!("interval `{c}` needs `..`")))?;
        let (a, b) = (a.trim().to_string(), b.trim().to_string());
        if a.is_empty() || b.is_empty() {
            return Err(malformed(line, format!("interval `{c}` needs two endpoints")));
        }
        let lo = if c.starts_with('[') { Endpoint::Closed(a) } else { Endpoint::Open(a) };
        let hi = if c.ends_with(']') { Endpoint::Closed(b) } else { Endpoint::Open(b) };
        return Ok(Condition::Interval(lo, hi));
    }
    let c = c.replace("<=", "=<");
    for op in COMPARISONS {
        if let Some(rest) = c.strip_prefix(op) {
            let rest = rest.trim();
            if rest.is_empty() {
                return Err(malformed(line, format!("`{op}` needs a value")));
            }
            return Ok(Condition::Compare(op.to_string(), rest.to_string()));
        }
    }
    let values: Vec<String> = c.split(',').map(|v| v.trim().to_string()).collect();
    if values.iter().any(|v| v.is_empty()) {
        return Err(malformed(line, format!("bad value list `{c}`")));
    }
    Ok(Condition::OneOf(values))
}

pub fn parse_table(text: &str) -> Result<DecisionTable, DmnError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split("//").next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty());
    let (n, header) = lines.next().ok_or_else(|| malformed(1, "empty table"))?;
    let words: Vec<&str> = header.split_whitespace().collect();
    let (name, policy) = match words.as_slice() {
        ["table", name, policy] => (name.to_string(), policy.to_string()),
        ["table", name] => (name.to_string(), "U".to_string()),
        _ => return Err(malformed(n, "expected `table <Name> <policy>`")),
    };
    if policy != "U" {
        return Err(DmnError::UnknownHitPolicy(policy));
    }
    let (n, columns) = lines.next().ok_or_else(|| malformed(n + 1, "missing column line"))?;
    let (ins, outs) = columns
        .split_once(';')
        .ok_or_else(|| malformed(n, "expected `in: ... ; out: ...`"))?;
    let ins = ins
        .trim()
        .strip_prefix("in:")
        .ok_or_else(|| malformed(n, "expected `in:`"))?;
    let outs = outs
        .trim()
        .strip_prefix("out:")
        .ok_or_else(|| malformed(n, "expected `out:`"))?;
    let split = |s: &str| -> Vec<String> {
        s.split('|').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
    };
    let inputs: Vec<String> = split(ins).iter().map(|i| normalize(i)).collect();
    let outputs: Vec<String> = split(outs)
        .iter()
        .map(|o| o.trim_end_matches("()").to_string())
        .collect();
    if outputs.is_empty() {
        return Err(malformed(n, "a table needs at least one output"));
    }
    let width = inputs.len() + outputs.len();
    let mut rows = Vec::new();
    for (n, line) in lines {
        let cells: Vec<&str> = line.split('|').collect();
        if cells.len() != width {
            return Err(malformed(
                n,
                format!("expected {width} cells, found {}", cells.len()),
            ));
        }
        let conditions = cells[..inputs.len()]
            .iter()
            .map(|c| parse_condition(c, n))
            .collect::<Result<Vec<_>, _>>()?;
        let values = cells[inputs.len()..]
            .iter()
            .map(|c| match c.trim() {
                "-" | "" => None,
                v => Some(v.to_string()),
            })
            .collect();
        rows.push(Row { conditions, values });
    }
    if rows.is_empty() {
        return Err(malformed(n, "a table needs at least one row"));
    }
    Ok(DecisionTable {
        name,
        hit_policy: policy,
        inputs,
        outputs,
        rows,
    })
}

fn endpoint_text(e: &Endpoint) -> (&str, bool) {
    match e {
        Endpoint::Open(v) => (v, false),
        Endpoint::Closed(v) => (v, true),
    }
}

/// A condition as an FO(·) formula over `input`; `None` for a blank cell.
pub fn condition_formula(input: &str, c: &Condition) -> Option<String> {
    match c {
        Condition::Any => None,
        Condition::Compare(op, v) => Some(format!("{input} {op} {v}")),
        Condition::Interval(lo, hi) => {
            let (a, a_closed) = endpoint_text(lo);
            let (b, b_closed) = endpoint_text(hi);
            Some(format!(
                "{a} {} {input} {} {b}",
                if a_closed { "=<" } else { "<" },
                if b_closed { "=<" } else { "<" }
            ))
        }
        Condition::OneOf(vs) => {
            let parts: Vec<String> = vs.iter().map(|v| format!("{input} = {v}")).collect();
            Some(if parts.len() == 1 {
                parts[0].clone()
            } else {
                format!("({})", parts.join(" | "))
            })
        }
    }
}

impl DecisionTable {
    /// Body of a row's rule.
    pub fn body(&self, row: usize) -> String {
        let parts: Vec<String> = self
            .inputs
            .iter()
            .zip(&self.rows[row].conditions)
            .filter_map(|(i, c)| condition_formula(i, c))
            .collect();
        if parts.is_empty() {
            "true".into()
        } else {
            parts.join(" & ")
        }
    }

    /// Rules, one per row and non-blank output cell.
    pub fn rules(&self, voc: &Vocab) -> Result<Vec<String>, DmnError> {
        let mut out = Vec::new();
        for o in &self.outputs {
            let sym = voc.symbol(o).ok_or_else(|| DmnError::UnknownSymbol(o.clone()))?;
            if !sym.sig.args.is_empty() {
                return Err(DmnError::UnknownSymbol(format!("{o} (outputs must be nullary)")));
            }
        }
        for input in &self.inputs {
            let e = parse_expr(input).map_err(|e| malformed(2, e.to_string()))?;
            check_expr(voc, &e).map_err(|e| DmnError::UnknownSymbol(format!("{input}: {e}")))?;
        }
        for (r, row) in self.rows.iter().enumerate() {
            let body = self.body(r);
            for (o, v) in self.outputs.iter().zip(&row.values) {
                let Some(v) = v else { continue };
                let result = &voc.symbol(o).unwrap().sig.result;
                let head = match (result, v.as_str()) {
                    (Type::Bool, "true") => format!("{o}()"),
                    (Type::Bool, "false") => continue,
                    _ => format!("{o}() = {v}"),
                };
                out.push(format!("{head} <- {body}."));
            }
        }
        Ok(out)
    }

    /// The table as an FO(·) definition.
    pub fn to_definition(&self, voc: &Vocab) -> Result<String, DmnError> {
        let rules = self.rules(voc)?;
        let mut s = String::from("{\n");
        for r in rules {
            s.push_str("    ");
            s.push_str(&r);
            s.push('\n');
        }
        s.push('}');
        Ok(s)
    }
}

impl fmt::Display for DecisionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "table {} {}", self.name, self.hit_policy)?;
        writeln!(f, "in: {} ; out: {}", self.inputs.join(" | "), self.outputs.join(" | "))?;
        for row in &self.rows {
            let mut cells: Vec<String> = row
                .conditions
                .iter()
                .map(|c| match c {
                    Condition::Any => "-".into(),
                    Condition::Compare(op, v) => format!("{op} {v}"),
                    Condition::Interval(lo, hi) => {
                        let (a, ac) = endpoint_text(lo);
                        let (b, bc) = endpoint_text(hi);
                        format!("{}{a}..{b}{}", if ac { "[" } else { "(" }, if bc { "]" } else { ")" })
                    }
                    Condition::OneOf(vs) => vs.join(", "),
                })
                .collect();
            cells.extend(row.values.iter().map(|v| v.clone().unwrap_or_else(|| "-".into())));
            writeln!(f, "{}", cells.join(" | "))?;
        }
        Ok(())
    }
}

/// Inclusive bounds for a numeric input.
#[derive(Clone, Debug, PartialEq)]
pub struct InputBound {
    pub input: String,
    pub lo: Value,
    pub hi: Value,
}

/// Values of the inputs at a witness point.
pub type Witness = Vec<(String, Value)>;

#[derive(Clone, Debug, PartialEq)]
pub struct TableReport {
    /// Inputs matched by no row, if any.
    pub gap: Option<Witness>,
    /// Two rows matching the same input, with the input.
    pub overlap: Option<(usize, usize, Witness)>,
}

impl TableReport {
    pub fn complete(&self) -> bool {
        self.gap.is_none()
    }

    pub fn unique(&self) -> bool {
        self.overlap.is_none()
    }
}

/// Completeness and uniqueness over the input space: finite inputs range
/// over their types, numeric ones over the given bounds.
pub fn check_table(
    t: &DecisionTable,
    tkb: &TypedKB,
    vocab: &str,
    bounds: &[InputBound],
    config: &SolverConfig,
) -> Result<TableReport, DmnError> {
    let mut bare = tkb.clone();
    bare.theories.clear();
    let s = PartialStructure::initial(&bare, vocab).map_err(InferenceError::from)?;
    let voc = s.vocab.clone();
    t.rules(&voc)?;
    let gt = ground_theory(&bare, &s).map_err(InferenceError::from)?;
    let mut r = Reasoner::new(gt, config)?;
    let mut space = Vec::new();
    let mut inputs = Vec::new();
    for input in &t.inputs {
        let (e, ty) = r.gt.parse_ground(input).map_err(InferenceError::from)?;
        let finite = ty == Type::Bool || s.extension(&ty).is_some();
        if !finite {
            let b = bounds
                .iter()
                .find(|b| normalize(&b.input) == *input)
                .ok_or_else(|| DmnError::UnboundedInput(input.clone()))?;
            space.push(format!("{} =< {input} =< {}", b.lo, b.hi));
        }
        inputs.push(e);
    }
    let formula = |r: &mut Reasoner, text: &str| -> Result<_, DmnError> {
        let (e, _) = r.gt.parse_ground(text).map_err(|e| match e {
            GroundError::Invalid(m) => malformed(0, m),
            e => InferenceError::from(e).into(),
        })?;
        Ok(e)
    };
    let mut base = Vec::new();
    for (k, b) in space.iter().enumerate() {
        base.push(Assertion {
            label: format!("S{}", k + 1),
            expr: formula(&mut r, b)?,
            kind: AssertionKind::Fact,
            source: b.clone(),
        });
    }
    let bodies = (0..t.rows.len())
        .map(|i| formula(&mut r, &t.body(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let witness = |m: &crate::smt::Model| -> Witness {
        t.inputs
            .iter()
            .zip(&inputs)
            .map(|(n, e)| (n.clone(), m.eval(e).unwrap_or(Value::Bool(false))))
            .collect()
    };
    let mut gap_check = base.clone();
    gap_check.push(Assertion {
        label: "G".into(),
        expr: crate::ground::expr::not(crate::ground::expr::or(bodies.clone())),
        kind: AssertionKind::Fact,
        source: String::new(),
    });
    let gap = r.sat_under(&gap_check)?.map(|m| witness(&m));
    let mut overlap = None;
    'pairs: for i in 0..bodies.len() {
        for j in i + 1..bodies.len() {
            let mut q = base.clone();
            q.push(Assertion {
                label: "O".into(),
                expr: crate::ground::expr::and(vec![bodies[i].clone(), bodies[j].clone()]),
                kind: AssertionKind::Fact,
                source: String::new(),
            });
            if let Some(m) = r.sat_under(&q)? {
                overlap = Some((i, j, witness(&m)));
                break 'pairs;
            }
        }
    }
    Ok(TableReport { gap, overlap })
}

/// Parses a bound given as `expr=lo..hi`.
pub fn parse_bound(text: &str) -> Option<InputBound> {
    let (input, range) = text.split_once('=')?;
    let (lo, hi) = range.split_once("..")?;
    Some(InputBound {
        input: input.trim().to_string(),
        lo: Value::Num(parse_number(lo)?),
        hi: Value::Num(parse_number(hi)?),
    })
}
