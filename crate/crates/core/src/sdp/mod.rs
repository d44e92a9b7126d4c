//! Block-diagonal semidefinite programs with free variables, a dense
//! interior-point solver for them, and a sparse text format.

mod problem;
mod solver;
mod text;

pub use problem::{BlockEntry, ConstraintRow, SdpProblem};
pub use solver::{solve, trace_csv, IterationLog, Residuals, SdpSolution, SolveStatus, SolverOptions};
pub use text::{read_sdp, write_sdp};
pub use crate::certify::extract_dual_moments;
