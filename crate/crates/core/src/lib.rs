//! Worst-case and best-case expectations over optimal-transport balls on
//! finite metric spaces.
//!
//! The primal problem minimises `E_nu f` over all `nu` within transport cost
//! `r` of a baseline `mu`; it is solved exactly as a linear program over
//! transport plans ([`primal`]). The one-dimensional Lagrangian dual
//! ([`dual`]) is solved by enumerating the kinks of a concave piecewise-linear
//! function, a worst-case plan and measure are recovered from the dual
//! ([`recovery`]), and [`lagrangian`] checks the minimax equality that ties
//! the two together.

pub mod cli;
pub mod dual;
pub mod error;
pub mod io;
pub mod lagrangian;
pub mod lp;
pub mod measure;
pub mod primal;
pub mod recovery;
pub mod space;

pub use dual::{solve_dual_min, solve_max, DualSolution, Multiplier};
pub use error::{Error, Result};
pub use measure::{Coupling, Measure};
pub use primal::{solve_primal, PrimalProblem, PrimalSolution};
pub use recovery::{recover_worst_case, verify_certificate, WorstCaseResult};
pub use space::{CostMatrix, FiniteSpace, Metric};
