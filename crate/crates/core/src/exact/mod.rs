//! Exact solving by branch-and-bound on the assignment relaxation, with
//! subtours eliminated by branching only when an assignment contains them.

mod assignment;
mod bnb;

pub use assignment::{cycles, hungarian, ApSolution};
pub use bnb::{
    branch, gap_percent, heuristic_gap_percent, solve_exact, solve_with_warm_start, Arc, BnbNode,
    SolveLimits, SolveReport, SolveStatus,
};
