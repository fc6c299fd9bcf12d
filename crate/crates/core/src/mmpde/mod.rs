//! Moving-mesh PDE: the displacement `δ = x − ξ` of a reference mesh solves
//! `∇_ξ·σ(δ) = ∇_ξ·(ω(x) I)` with P1 elements on the reference mesh, by
//! nodal Jacobi relaxation with lagged coefficients.

mod jacobi;
mod solve;
mod system;

pub use jacobi::{jacobi_sweep, jacobi_sweep_scaled, BoundaryCondition, Constraint, Constraints};
pub use solve::{
    apply_displacement, solve, solve_constrained, Closure, DiagnosticRow, Diagnostics, MonitorSources, Safeguard,
    Solution, SolverConfig,
};
pub use system::{
    assemble_elasticity, assemble_elasticity_with, assemble_laplacian, assemble_laplacian_with, AssembledSystem,
    Pattern,
};
