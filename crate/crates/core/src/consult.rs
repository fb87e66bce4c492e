//! Interactive consultation: user facts are added and removed one at a time,
//! and consequences are updated incrementally.

use std::collections::HashSet;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::check::TypedKB;
use crate::ground::AtomKind;
use crate::inference::{Consequences, Direction, Explanation, InferenceError, Reasoner};
use crate::interp::{InterpError, Origin, PartialStructure, Term};
use crate::smt::SolverConfig;
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConsultError {
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error("the knowledge base has no model")]
    InconsistentKB,
    #[error("the assertion contradicts the current state")]
    ConflictingAssert(Explanation),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Edit {
    Assert(Term, Value),
    Retract(Term),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomStatus {
    User,
    PropagatedTrue,
    PropagatedFalse,
    Unknown,
    Irrelevant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AtomState {
    pub atom: String,
    pub kind: &'static str,
    pub terms: Vec<String>,
    pub status: AtomStatus,
    /// Truth value when decided.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TermStatus {
    User,
    Value(Value),
    Unknown,
    Irrelevant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TermState {
    pub term: String,
    pub symbol: String,
    pub status: TermStatus,
    /// Current value, given or propagated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
}

/// The full status table of a consultation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateTable {
    pub atoms: Vec<AtomState>,
    pub terms: Vec<TermState>,
}

impl StateTable {
    pub fn atom(&self, text: &str) -> Option<&AtomState> {
        self.atoms.iter().find(|a| a.atom == text)
    }

    pub fn term(&self, text: &str) -> Option<&TermState> {
        self.terms.iter().find(|t| t.term == text)
    }

    /// Atoms and terms whose status differs from `before`.
    pub fn changes(&self, before: &StateTable) -> Vec<String> {
        let mut out = Vec::new();
        for (a, b) in self.atoms.iter().zip(&before.atoms) {
            if a != b {
                out.push(a.atom.clone());
            }
        }
        for (a, b) in self.terms.iter().zip(&before.terms) {
            if a != b {
                out.push(a.term.clone());
            }
        }
        out
    }
}

pub struct ConsultSession {
    pub tkb: Arc<TypedKB>,
    reasoner: Reasoner,
    consequences: Consequences,
    relevant: Vec<bool>,
    mentioned: HashSet<usize>,
    /// Skip relevance after edits; see [`ConsultSession::refresh_relevance`].
    pub defer_relevance: bool,
}

impl ConsultSession {
    pub fn new(tkb: Arc<TypedKB>, vocab: &str, config: &SolverConfig) -> Result<ConsultSession, ConsultError> {
        let s = PartialStructure::initial(&tkb, vocab)?;
        ConsultSession::with_structure(tkb, s, config)
    }

    pub fn with_structure(
        tkb: Arc<TypedKB>,
        s: PartialStructure,
        config: &SolverConfig,
    ) -> Result<ConsultSession, ConsultError> {
        let mut reasoner = Reasoner::from_kb(&tkb, &s, config)?;
        if !reasoner.satisfiable()? {
            return Err(ConsultError::InconsistentKB);
        }
        let consequences = reasoner.propagate()?;
        let mut st = ConsultSession {
            tkb,
            reasoner,
            consequences,
            relevant: Vec::new(),
            mentioned: HashSet::new(),
            defer_relevance: false,
        };
        st.refresh_relevance();
        Ok(st)
    }

    pub fn structure(&self) -> &PartialStructure {
        &self.reasoner.gt.structure
    }

    pub fn reasoner(&mut self) -> &mut Reasoner {
        &mut self.reasoner
    }

    pub fn consequences(&self) -> &Consequences {
        &self.consequences
    }

    pub fn refresh_relevance(&mut self) {
        self.mentioned = self.reasoner.mentioned(&self.consequences);
        self.relevant = self.reasoner.relevance(&self.consequences);
    }

    pub fn apply(&mut self, edit: Edit) -> Result<(), ConsultError> {
        match edit {
            Edit::Assert(t, v) => self.assert(t, v),
            Edit::Retract(t) => self.retract(&t),
        }
    }

    /// Adds a user fact. Atoms already decided stay decided; only unknown
    /// ones are tested again.
    pub fn assert(&mut self, term: Term, value: Value) -> Result<(), ConsultError> {
        let old = self.structure().lookup(&term).cloned();
        if let Some(a) = &old {
            if a.origin == Origin::User {
                if a.value == value {
                    return Ok(());
                }
                // a changed answer is a retraction followed by an assertion
                self.structure().assert_fact(term.clone(), value.clone())?;
                self.retract(&term)?;
                let r = self.assert(term.clone(), value);
                if r.is_err() {
                    self.assert(term, a.value.clone())?;
                }
                return r;
            }
        }
        let s = self.structure().assert_fact(term.clone(), value.clone())?;
        let fact = self
            .reasoner
            .gt
            .fact(&term, &value)
            .map_err(InferenceError::from)?;
        if self.reasoner.sat_under(std::slice::from_ref(&fact))?.is_none() {
            let e = self
                .reasoner
                .conflict(fact)?
                .ok_or_else(|| InferenceError::SolverUnknown("conflict vanished".into()))?;
            return Err(ConsultError::ConflictingAssert(e));
        }
        self.reasoner.set_structure(s)?;
        let atoms: Vec<usize> = (0..self.consequences.atoms.len())
            .filter(|&i| self.consequences.atoms[i].is_none())
            .collect();
        let terms: Vec<usize> = self
            .value_terms()
            .into_iter()
            .filter(|&t| self.consequences.values[t].is_none())
            .collect();
        self.consequences = self.reasoner.repropagate(&self.consequences, &atoms, &terms)?;
        if !self.defer_relevance {
            self.refresh_relevance();
        }
        Ok(())
    }

    /// Removes a user fact. Unknown atoms stay unknown; propagated atoms
    /// and the retracted term's atoms are tested again.
    pub fn retract(&mut self, term: &Term) -> Result<(), ConsultError> {
        let s = self.structure().retract_fact(term)?;
        self.reasoner.set_structure(s)?;
        let id = self.reasoner.gt.term_ids.get(term).copied();
        let atoms: Vec<usize> = (0..self.consequences.atoms.len())
            .filter(|&i| {
                self.consequences.atoms[i].is_some()
                    && (!self.consequences.given[i]
                        || id.is_some_and(|t| self.reasoner.gt.atoms[i].terms.contains(&t)))
            })
            .collect();
        let terms: Vec<usize> = self
            .value_terms()
            .into_iter()
            .filter(|&t| self.consequences.values[t].is_some())
            .collect();
        self.consequences = self.reasoner.repropagate(&self.consequences, &atoms, &terms)?;
        if !self.defer_relevance {
            self.refresh_relevance();
        }
        Ok(())
    }

    fn value_terms(&self) -> Vec<usize> {
        self.reasoner.value_terms()
    }

    pub fn explain(&mut self, literal: &str) -> Result<Explanation, ConsultError> {
        let lit = self.reasoner.literal(literal)?;
        Ok(self.reasoner.explain(&lit)?)
    }

    pub fn optimize(&mut self, term: &str, dir: Direction) -> Result<(Value, Vec<(Term, Value)>), ConsultError> {
        let (v, m) = self.reasoner.optimize(term, dir)?;
        Ok((v, self.reasoner.assignment(&m)))
    }

    pub fn models(&mut self, max: usize) -> Result<Vec<Vec<(Term, Value)>>, ConsultError> {
        let ms = self.reasoner.models(max)?;
        Ok(ms.iter().map(|m| self.reasoner.assignment(m)).collect())
    }

    pub fn state(&self) -> StateTable {
        let gt = &self.reasoner.gt;
        let c = &self.consequences;
        let atoms = gt
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let status = match (c.given[i], c.atoms[i]) {
                    (true, _) => AtomStatus::User,
                    (false, Some(true)) => AtomStatus::PropagatedTrue,
                    (false, Some(false)) => AtomStatus::PropagatedFalse,
                    (false, None) if self.relevant.get(i) == Some(&false) => AtomStatus::Irrelevant,
                    (false, None) => AtomStatus::Unknown,
                };
                AtomState {
                    atom: a.text.clone(),
                    kind: match a.kind {
                        AtomKind::Propositional => "propositional",
                        AtomKind::Equality => "equality",
                        AtomKind::Comparison => "comparison",
                    },
                    terms: a.terms.iter().map(|&t| gt.term_text(t)).collect(),
                    status,
                    value: c.atoms[i],
                }
            })
            .collect();
        let terms = gt
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let user = gt.structure.lookup(&t.term).is_some();
                let relevant = self.relevant.is_empty()
                    || self.mentioned.contains(&i)
                    || gt.atoms.iter().enumerate().any(|(k, a)| a.terms.contains(&i) && self.relevant[k]);
                let status = match &c.values[i] {
                    _ if user => TermStatus::User,
                    Some(v) => TermStatus::Value(v.clone()),
                    None if !relevant => TermStatus::Irrelevant,
                    None => TermStatus::Unknown,
                };
                TermState {
                    term: t.term.to_string(),
                    symbol: t.term.symbol.clone(),
                    status,
                    value: c.values[i].clone(),
                }
            })
            .collect();
        StateTable { atoms, terms }
    }
}
