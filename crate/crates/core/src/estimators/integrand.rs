use std::sync::Arc;

use crate::error::Result;
use crate::fem::{
    AssemblyScratch, CentroidFunctional, LinearSolver, ParametricProblem, SolverKind, SolverOptions,
    SolverWorkspace,
};

use super::Integrand;

/// `(y, z) -> L(u_h(y, z))`: assemble, solve, apply the mean functional.
pub struct ElasticityIntegrand {
    problem: Arc<ParametricProblem>,
    solver: LinearSolver,
    functional: CentroidFunctional,
}

pub struct ElasticityScratch {
    assembly: AssemblyScratch,
    solver: SolverWorkspace,
    values: Vec<f64>,
    solution: Vec<f64>,
}

impl ElasticityIntegrand {
    pub fn new(problem: Arc<ParametricProblem>, kind: SolverKind, options: SolverOptions) -> Result<Self> {
        let disc = problem.discretization();
        let order = (kind == SolverKind::Direct).then(|| disc.dissection_order());
        let solver = LinearSolver::with_ordering(disc.pattern().clone(), kind, options, order.as_deref())?;
        let functional = CentroidFunctional::new(disc);
        Ok(ElasticityIntegrand {
            problem,
            solver,
            functional,
        })
    }

    pub fn problem(&self) -> &ParametricProblem {
        &self.problem
    }

    /// Coefficients of `u_h(y, z)` over the free dofs.
    pub fn solve<'s>(&self, y: &[f64], z: &[f64], scratch: &'s mut ElasticityScratch) -> Result<&'s [f64]> {
        self.problem
            .assemble_into(y, z, &mut scratch.assembly, &mut scratch.values)?;
        self.solver.solve_into(
            &mut scratch.solver,
            &scratch.values,
            self.problem.load(),
            &mut scratch.solution,
        )?;
        Ok(&scratch.solution)
    }
}

impl Integrand for ElasticityIntegrand {
    type Scratch = ElasticityScratch;

    fn scratch(&self) -> ElasticityScratch {
        let disc = self.problem.discretization();
        ElasticityScratch {
            assembly: self.problem.scratch(),
            solver: self.solver.workspace(),
            values: vec![0.0; disc.pattern().nnz()],
            solution: vec![0.0; disc.free_dofs()],
        }
    }

    fn eval(&self, y: &[f64], z: &[f64], scratch: &mut ElasticityScratch) -> Result<f64> {
        self.solve(y, z, scratch)?;
        Ok(self.functional.apply(&scratch.solution))
    }
}
