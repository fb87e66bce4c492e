//! Knowledge bases in FO(·): parsing, type checking, grounding to SMT and the
//! inference tasks used by interactive consultation.

pub mod check;
pub mod config;
pub mod consult;
pub mod dmn;
pub mod error;
pub mod ground;
pub mod inference;
pub mod interp;
pub mod lang;
pub mod smt;
pub mod types;
pub mod value;

pub use check::{check, check_expr, TypeError, TypeErrors, TypedKB};
pub use error::{compile, Error};
pub use value::Value;
