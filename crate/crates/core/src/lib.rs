//! MAX-3SAT to QUBO reductions: clause patterns, pattern search, pruning,
//! classical samplers and an experiment harness.

pub mod error;
pub mod formula;
pub mod harness;
pub mod pattern_search;
pub mod qubo;
pub mod seed;
pub mod solvers;
pub mod transform;

pub use error::{Error, Result};
pub use formula::{Assignment, Clause, CnfFormula, Literal};
pub use qubo::{QuboMatrix, VariableLayout};
pub use solvers::{SolveResult, SolverConfig, SolverKind};
pub use transform::{ClausePattern, Criterion, TransformSpec};
