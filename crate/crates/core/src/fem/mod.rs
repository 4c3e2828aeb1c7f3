//! Conforming P1/P2 Galerkin discretization of the parametric elasticity
//! problem with homogeneous Dirichlet boundary conditions.

mod assembly;
pub mod basis;
pub mod manufactured;
mod post;
mod solver;

pub use assembly::{
    assemble, default_quadrature_degree, AssembledSystem, AssemblyScratch, Discretization,
    ParametricProblem, SparsityPattern,
};
pub use manufactured::{example1_exact_and_forcing, standard_forcing};
pub use post::{
    empirical_rate, functional_mean, l2_error_centroid, CentroidFunctional, DiscreteDisplacement,
};
pub use solver::{
    solve, LinearSolver, SolveInfo, SolverKind, SolverOptions, SolverWorkspace,
    DIRECT_SOLVER_MAX_SUBDIVISIONS,
};
