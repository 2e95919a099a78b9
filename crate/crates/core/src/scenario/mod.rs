//! Scenario description language: parsing, validation, canonical
//! serialization and sweep expansion.

mod expand;
mod lexer;
mod parser;
mod serialize;
mod types;
mod validate;

pub use expand::{expand_sweeps, resolve};
pub use lexer::{tokenize, Tok, Token};
pub use parser::{check_scenario, parse_scenario};
pub use serialize::serialize;
pub use types::*;
pub use validate::{road_length, validate, VarType, SPEED_WARNING};
