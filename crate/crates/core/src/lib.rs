//! Finite-difference solver for second-order stationary mean-field games on
//! the flat torus `T^d` (`d <= 3`), driven by homotopy continuation from a
//! trivially solvable Hamiltonian, plus numerical monitors for the a priori
//! integral and Lebesgue-norm estimates satisfied by its solutions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod continuation;
pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod system;

pub use continuation::{
    continuation_solve, continuation_solve_with, initial_solution, newton_solve,
    ContinuationRecord, ContinuationTrace, IterateStats, NewtonOutcome, SolverConfig,
};
pub use coupling::{check_coupling_gate, Coupling, GateResult, M_FLOOR};
pub use diagnostics::{diagnose, DiagnosticsOptions, DiagnosticsReport};
pub use error::{MfgError, Result};
pub use grid::{ScalarField, TorusGrid, VectorField};
pub use hamiltonian::{
    check_assumptions, eval_dx_h_norms, AssumptionReport, HamiltonianSpec, LambdaFamily, SampleBox,
};
pub use system::{
    assemble_jacobian, residual, solve_linear, JacobianMatrix, ResidualVector, Solution,
};
