//! Linear programming and Frank-Wolfe kernels.

mod frank_wolfe;
mod lp;
mod simplex;

pub use frank_wolfe::{
    frank_wolfe, maximize_concave, ConcaveFn, FwOptions, FwResult, FwVariant, LinearOracle, LpOracle, VertexOracle,
};
pub use lp::{Bounds, Constraint, LpProblem, LpSolution, LpStatus, Relation};
pub use simplex::{lp_solve, Simplex};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("pivot limit exceeded after {pivots} pivots")]
    NumericalFailure { pivots: usize },
    #[error("feasible region is empty")]
    InfeasibleRegion,
    #[error("objective is not finite at any starting point")]
    NoInteriorPoint,
    #[error("linear oracle is unbounded")]
    UnboundedRegion,
}
