//! Talking to an external SMT-LIB 2 solver.

pub mod emit;
pub mod session;
pub mod sexpr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground::{GExpr, GroundTheory};
use crate::value::Value;
pub use session::SolverSession;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Executable and arguments, split on whitespace.
    pub command: String,
    /// Per-check timeout in milliseconds; 0 disables it.
    pub timeout_ms: u64,
    /// Encode finite sorts as datatypes rather than uninterpreted sorts.
    pub datatypes: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            command: "z3 -in".into(),
            timeout_ms: 10_000,
            datatypes: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("cannot start solver: {0}")]
    Spawn(String),
    #[error("solver protocol error: {0}")]
    Protocol(String),
    #[error("solver did not answer in time")]
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Sat,
    Unsat,
    Unknown,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    pub terms: Vec<Value>,
    pub levels: Vec<Value>,
}

impl Model {
    pub fn eval(&self, e: &GExpr) -> Option<Value> {
        e.eval(
            &|i| self.terms.get(i).cloned(),
            &|l| self.levels.get(l).cloned(),
        )
    }

    pub fn holds(&self, e: &GExpr) -> bool {
        self.eval(e).and_then(|v| v.as_bool()) == Some(true)
    }

    /// Term values paired with their display text.
    pub fn assignments<'a>(&'a self, gt: &'a GroundTheory) -> impl Iterator<Item = (String, &'a Value)> {
        gt.terms.iter().zip(&self.terms).map(|(t, v)| (t.term.to_string(), v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverAnswer {
    pub status: Status,
    pub model: Option<Model>,
    /// Labels of an unsatisfiable subset of the named assertions.
    pub core: Option<Vec<String>>,
}
