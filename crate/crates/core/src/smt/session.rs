use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use num::{BigInt, BigRational};

use super::emit;
use super::sexpr::{Reader, Sexp};
use super::{Model, SmtError, SolverAnswer, SolverConfig, Status};
use crate::ground::{Assertion, GExpr, GroundTheory, SortKind};
use crate::value::{parse_number, Value};

/// Extra time allowed beyond the solver's own timeout before the process is
/// considered unresponsive.
const GRACE: Duration = Duration::from_secs(10);

/// A live solver process spoken to over SMT-LIB 2.
pub struct SolverSession {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<Sexp>,
    config: SolverConfig,
    depth: usize,
    dead: bool,
    /// Sort-element constants, for mapping abstract model values back.
    elements: Vec<(String, String, Value)>,
    /// Every command sent, when tracing is enabled.
    pub trace: Option<Vec<String>>,
}

impl SolverSession {
    pub fn open(config: &SolverConfig) -> Result<SolverSession, SmtError> {
        let mut parts = config.command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| SmtError::Spawn("empty solver command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Spawn(format!("{}: {e}", config.command)))?;
        let stdin = child.stdin.take().unwrap();
        let stdout = child.stdout.take().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = Reader::new();
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                for x in reader.feed(&line) {
                    if tx.send(x).is_err() {
                        return;
                    }
                }
            }
        });
        let mut s = SolverSession {
            child,
            stdin,
            replies: rx,
            config: config.clone(),
            depth: 0,
            dead: false,
            elements: Vec::new(),
            trace: None,
        };
        s.init()?;
        Ok(s)
    }

    fn init(&mut self) -> Result<(), SmtError> {
        self.write("(set-option :print-success true)")?;
        self.expect_success("(set-option :print-success true)")?;
        self.ok("(set-option :produce-models true)")?;
        self.ok("(set-option :produce-unsat-cores true)")?;
        if self.config.timeout_ms > 0 {
            // not every solver knows this option; an `unsupported` reply is fine
            let cmd = format!("(set-option :timeout {})", self.config.timeout_ms);
            self.command(&cmd)?;
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn write(&mut self, cmd: &str) -> Result<(), SmtError> {
        if self.dead {
            return Err(SmtError::Protocol("solver process is no longer usable".into()));
        }
        if let Some(t) = &mut self.trace {
            t.push(cmd.to_string());
        }
        writeln!(self.stdin, "{cmd}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| {
                self.dead = true;
                SmtError::Protocol(format!("cannot write to solver: {e}"))
            })
    }

    fn read(&mut self, wait: Duration) -> Result<Sexp, SmtError> {
        match self.replies.recv_timeout(wait) {
            Ok(x) => Ok(x),
            Err(RecvTimeoutError::Timeout) => {
                self.dead = true;
                let _ = self.child.kill();
                Err(SmtError::Timeout)
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.dead = true;
                Err(SmtError::Protocol("solver exited".into()))
            }
        }
    }

    fn wait_budget(&self) -> Duration {
        if self.config.timeout_ms > 0 {
            Duration::from_millis(self.config.timeout_ms) + GRACE
        } else {
            Duration::from_secs(24 * 3600)
        }
    }

    /// Sends one command and returns the solver's reply.
    pub fn command(&mut self, cmd: &str) -> Result<Sexp, SmtError> {
        self.write(cmd)?;
        let wait = self.wait_budget();
        let reply = self.read(wait)?;
        if let Some([Sexp::Atom(head), msg, ..]) = reply.list() {
            if head == "error" {
                return Err(SmtError::Protocol(format!("{cmd}: {msg}")));
            }
        }
        Ok(reply)
    }

    fn expect_success(&mut self, cmd: &str) -> Result<(), SmtError> {
        let wait = self.wait_budget();
        match self.read(wait)? {
            Sexp::Atom(a) if a == "success" => Ok(()),
            other => Err(SmtError::Protocol(format!("{cmd}: unexpected reply {other}"))),
        }
    }

    fn ok(&mut self, cmd: &str) -> Result<(), SmtError> {
        match self.command(cmd)? {
            Sexp::Atom(a) if a == "success" => Ok(()),
            other => Err(SmtError::Protocol(format!("{cmd}: unexpected reply {other}"))),
        }
    }

    pub fn push(&mut self) -> Result<(), SmtError> {
        self.ok("(push 1)")?;
        self.depth += 1;
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), SmtError> {
        if self.depth == 0 {
            return Err(SmtError::Protocol("pop on empty stack".into()));
        }
        self.ok("(pop 1)")?;
        self.depth -= 1;
        Ok(())
    }

    /// Clears all declarations and assertions.
    pub fn reset(&mut self) -> Result<(), SmtError> {
        self.ok("(reset)")?;
        self.depth = 0;
        self.elements.clear();
        self.init()
    }

    fn declare(&mut self, gt: &GroundTheory) -> Result<(), SmtError> {
        if self.depth != 0 {
            return Err(SmtError::Protocol("load requires an empty assertion stack".into()));
        }
        let logic = if self.config.datatypes || emit::needs_full_logic(gt) {
            "ALL"
        } else {
            "QF_UFLIRA"
        };
        self.ok(&format!("(set-logic {logic})"))?;
        for cmd in emit::declarations(gt, self.config.datatypes) {
            self.ok(&cmd)?;
        }
        self.elements.clear();
        for (sort, elems) in &gt.sorts {
            for e in elems {
                self.elements
                    .push((sort.clone(), emit::elem_symbol(sort, e), e.clone()));
            }
        }
        Ok(())
    }

    /// Declares everything and asserts the background, the theory and the
    /// structure's user facts, each under its label.
    pub fn load(&mut self, gt: &GroundTheory) -> Result<(), SmtError> {
        self.declare(gt)?;
        for a in gt.assertions.iter().chain(&gt.facts) {
            self.ok(&emit::named_assert(gt, &a.label, &a.expr))?;
        }
        Ok(())
    }

    /// Declarations and background only; theory assertions are then passed
    /// as assumptions.
    pub fn load_background(&mut self, gt: &GroundTheory) -> Result<(), SmtError> {
        self.declare(gt)
    }

    /// Checks satisfiability with extra labeled assertions inside a
    /// push/pop scope; fetches a model when sat and a core when unsat.
    pub fn check_under(
        &mut self,
        gt: &GroundTheory,
        assumptions: &[Assertion],
    ) -> Result<SolverAnswer, SmtError> {
        self.push()?;
        let result = self.check_in_scope(gt, assumptions, true);
        let popped = self.pop();
        let answer = result?;
        popped?;
        Ok(answer)
    }

    /// Like [`check_under`](Self::check_under) but without retrieving a model.
    pub fn check_status(
        &mut self,
        gt: &GroundTheory,
        assumptions: &[Assertion],
    ) -> Result<SolverAnswer, SmtError> {
        self.push()?;
        let result = self.check_in_scope(gt, assumptions, false);
        let popped = self.pop();
        let answer = result?;
        popped?;
        Ok(answer)
    }

    /// Asserts inside the current scope without checking.
    pub fn assert(&mut self, gt: &GroundTheory, label: &str, e: &GExpr) -> Result<(), SmtError> {
        self.ok(&emit::named_assert(gt, label, e))
    }

    pub fn check_in_scope(
        &mut self,
        gt: &GroundTheory,
        assumptions: &[Assertion],
        want_model: bool,
    ) -> Result<SolverAnswer, SmtError> {
        for a in assumptions {
            self.ok(&emit::named_assert(gt, &a.label, &a.expr))?;
        }
        let status = match self.command("(check-sat)")? {
            Sexp::Atom(a) if a == "sat" => Status::Sat,
            Sexp::Atom(a) if a == "unsat" => Status::Unsat,
            Sexp::Atom(a) if a == "unknown" => Status::Unknown,
            other => return Err(SmtError::Protocol(format!("check-sat: unexpected reply {other}"))),
        };
        let mut answer = SolverAnswer {
            status,
            model: None,
            core: None,
        };
        match status {
            Status::Sat if want_model => answer.model = Some(self.model(gt)?),
            Status::Unsat => answer.core = Some(self.core()?),
            _ => {}
        }
        Ok(answer)
    }

    fn core(&mut self) -> Result<Vec<String>, SmtError> {
        let reply = self.command("(get-unsat-core)")?;
        let items = reply
            .list()
            .ok_or_else(|| SmtError::Protocol(format!("get-unsat-core: {reply}")))?;
        Ok(items.iter().filter_map(|x| x.atom().map(str::to_string)).collect())
    }

    /// Values of every term, level and sort element in the current model.
    pub fn model(&mut self, gt: &GroundTheory) -> Result<Model, SmtError> {
        let mut names: Vec<String> = gt.terms.iter().map(|t| t.smt.clone()).collect();
        names.extend((0..gt.levels.len()).map(|l| emit::level_symbol(gt, l)));
        let abstract_sorts = !self.config.datatypes;
        if abstract_sorts {
            names.extend(self.elements.iter().map(|(_, n, _)| n.clone()));
        }
        if names.is_empty() {
            return Ok(Model::default());
        }
        let reply = self.command(&format!("(get-value ({}))", names.join(" ")))?;
        let pairs = reply
            .list()
            .ok_or_else(|| SmtError::Protocol(format!("get-value: {reply}")))?;
        if pairs.len() != names.len() {
            return Err(SmtError::Protocol("get-value returned the wrong number of values".into()));
        }
        let raw: Vec<&Sexp> = pairs
            .iter()
            .map(|p| match p.list() {
                Some([_, v]) => Ok(v),
                _ => Err(SmtError::Protocol(format!("get-value: bad entry {p}"))),
            })
            .collect::<Result<_, _>>()?;
        let n_terms = gt.terms.len();
        let n_levels = gt.levels.len();
        // abstract value text -> element, per sort
        let mut abstract_map: Vec<(String, String, Value)> = Vec::new();
        if abstract_sorts {
            for (k, (sort, _, v)) in self.elements.iter().enumerate() {
                abstract_map.push((sort.clone(), raw[n_terms + n_levels + k].to_string(), v.clone()));
            }
        }
        let decode = |x: &Sexp, sort: &SortKind| -> Result<Value, SmtError> {
            match sort {
                SortKind::Finite(name) => {
                    let text = x.to_string();
                    if abstract_sorts {
                        abstract_map
                            .iter()
                            .find(|(s, t, _)| s == name && *t == text)
                            .map(|(_, _, v)| v.clone())
                            .ok_or_else(|| SmtError::Protocol(format!("unknown element {text}")))
                    } else {
                        let plain = x.atom().unwrap_or_default();
                        let prefix = format!("{name}:");
                        gt.sorts[name]
                            .iter()
                            .find(|v| plain.strip_prefix(&prefix) == Some(&v.to_string()))
                            .cloned()
                            .ok_or_else(|| SmtError::Protocol(format!("unknown element {text}")))
                    }
                }
                _ => parse_value(x),
            }
        };
        let mut m = Model::default();
        for (i, t) in gt.terms.iter().enumerate() {
            m.terms.push(decode(raw[i], &t.sort)?);
        }
        for l in 0..n_levels {
            m.levels.push(decode(raw[n_terms + l], &SortKind::Int)?);
        }
        Ok(m)
    }
}

impl Drop for SolverSession {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "(exit)");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Parses a Bool, Int or Real model value: `true`, `17`, `(- 3)`, `18.5`,
/// `(/ 37.0 2.0)`.
pub fn parse_value(x: &Sexp) -> Result<Value, SmtError> {
    let bad = || SmtError::Protocol(format!("cannot read value {x}"));
    match x {
        Sexp::Atom(a) if a == "true" => Ok(Value::Bool(true)),
        Sexp::Atom(a) if a == "false" => Ok(Value::Bool(false)),
        Sexp::Atom(a) => parse_number(a).map(Value::Num).ok_or_else(bad),
        Sexp::List(xs) => match xs.as_slice() {
            [Sexp::Atom(op), y] if op == "-" => match parse_value(y)? {
                Value::Num(n) => Ok(Value::Num(-n)),
                _ => Err(bad()),
            },
            [Sexp::Atom(op), a, b] if op == "/" => match (parse_value(a)?, parse_value(b)?) {
                (Value::Num(a), Value::Num(b)) if b != BigRational::from_integer(BigInt::from(0)) => {
                    Ok(Value::Num(a / b))
                }
                _ => Err(bad()),
            },
            [Sexp::Atom(op), y] if op == "to_real" => parse_value(y),
            _ => Err(bad()),
        },
        Sexp::Str(_) => Err(bad()),
    }
}
