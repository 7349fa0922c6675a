//! SAT solving: an internal decision-counting CDCL solver and an adapter
//! for external DIMACS solvers.
//!
//! The internal solver is the measurement instrument for the whole
//! toolkit: its decision counter approximates solving effort, so it is
//! fully deterministic for a fixed (formula, budget, seed) triple.

pub mod cdcl;
pub mod external;

pub use cdcl::solve;
pub use external::{solve_external, ExternalError, DEFAULT_STATS_PATTERN, SOLVER_ENV};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    Unsat,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Satisfying assignment, `model[v - 1]` for variable v. Present iff
    /// status is Sat and the backend reports models.
    pub model: Option<Vec<bool>>,
    /// Branching decisions. The internal solver always reports this; the
    /// external adapter only when the statistics pattern matched.
    pub decisions: Option<u64>,
    pub conflicts: u64,
    pub propagations: u64,
    pub wall_time: f64,
}

/// Solving effort caps. Exhausting either yields Timeout, not an error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub conflict_limit: u64,
    pub time_limit: Option<f64>,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget { conflict_limit: 1_000_000, time_limit: None }
    }
}
