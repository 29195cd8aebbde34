//! Numerical kernels: dense simplex and Frank–Wolfe.

pub mod frank_wolfe;
pub mod lp;

pub use frank_wolfe::{maximize_concave, AffineMap, ConcaveSolution, FwOptions, OptimError, StepRule};
pub use lp::{lp_feasible, lp_solve, LinearSystem, LpError, LpSolution, LpStatus, Sense};
