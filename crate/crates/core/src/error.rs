//! One error type for front ends.

use thiserror::Error;

use crate::check::{check, TypeErrors, TypedKB};
use crate::config::ConfigError;
use crate::consult::ConsultError;
use crate::dmn::DmnError;
use crate::ground::GroundError;
use crate::inference::InferenceError;
use crate::interp::InterpError;
use crate::lang::{parse_kb, ParseErrors};

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error:\n{0}")]
    Parse(#[from] ParseErrors),
    #[error("type error:\n{0}")]
    Type(#[from] TypeErrors),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Consult(#[from] ConsultError),
    #[error(transparent)]
    Dmn(#[from] DmnError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Parses and type checks a knowledge base.
pub fn compile(source: &str) -> Result<TypedKB, Error> {
    Ok(check(&parse_kb(source)?)?)
}
