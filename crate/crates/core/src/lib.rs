pub mod net;
pub mod eval;
pub mod pcs;
pub mod scalar;
pub mod learner;
pub mod scenario;
pub mod solve;
pub mod teacher;

pub use scalar::{BigRational, Scalar};

/// Double-precision LP, the instance used by every scenario.
pub type Lp = solve::LpProblem<f64>;
/// Double-precision simplex tableau.
pub type Tableau = solve::Simplex<f64>;
/// Exact rational LP, used to cross-check floating results.
pub type ExactLp = solve::LpProblem<BigRational>;
/// Exact rational simplex tableau.
pub type ExactTableau = solve::Simplex<BigRational>;
