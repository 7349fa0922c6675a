//! Circuit-level SAT preprocessing: CNF-to-AIG recovery, function-preserving
//! synthesis passes selected by a learned agent, cost-aware LUT mapping, and
//! re-encoding to an equisatisfiable CNF solved by a decision-counting CDCL
//! solver.

pub mod aig;
pub mod bench;
pub mod cnf;
pub mod cnf2aig;
pub mod encode;
pub mod io;
pub mod lut;
pub mod lutmap;
pub mod pipeline;
pub mod rl;
pub mod solver;
pub mod truth;
pub mod synth;
#[cfg(test)]
pub(crate) mod testutil;
