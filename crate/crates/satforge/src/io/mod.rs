//! Text formats: DIMACS CNF, ASCII AIGER ("aag"), and a BLIF subset for
//! LUT netlists. All three round-trip losslessly at the semantic level.

pub mod aiger;
pub mod blif;
pub mod dimacs;
