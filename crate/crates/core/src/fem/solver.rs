use std::sync::Arc;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt::factor::LltRegularization;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::perm::PermRef;
use faer::{Conj, MatMut, Par, Side};

use crate::error::{Error, Result};

use super::assembly::{AssembledSystem, SparsityPattern};

/// Meshes finer than this many subdivisions per side use preconditioned CG.
pub const DIRECT_SOLVER_MAX_SUBDIVISIONS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Sparse Cholesky with a fill-reducing ordering computed once per pattern.
    Direct,
    /// Conjugate gradients with Jacobi preconditioning.
    Cg,
}

impl SolverKind {
    pub fn for_subdivisions(subdivisions: usize) -> Self {
        if subdivisions <= DIRECT_SOLVER_MAX_SUBDIVISIONS {
            SolverKind::Direct
        } else {
            SolverKind::Cg
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on `||A x - b|| / ||b||`.
    pub tol: f64,
    pub max_refinements: usize,
    pub max_cg_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_refinements: 4,
            max_cg_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    /// Refinement steps (direct) or CG iterations.
    pub iterations: usize,
    pub relative_residual: f64,
}

enum Backend {
    Direct(Arc<SymbolicCholesky<usize>>),
    Cg,
}

/// Linear solver bound to one sparsity pattern; shareable across threads,
/// each of which owns a [`SolverWorkspace`].
pub struct LinearSolver {
    pattern: Arc<SparsityPattern>,
    backend: Backend,
    options: SolverOptions,
}

pub struct SolverWorkspace {
    l_values: Vec<f64>,
    stack: MemBuffer,
    residual: Vec<f64>,
    correction: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
}

impl LinearSolver {
    pub fn new(pattern: Arc<SparsityPattern>, kind: SolverKind, options: SolverOptions) -> Result<Self> {
        Self::with_ordering(pattern, kind, options, None)
    }

    /// Like [`LinearSolver::new`] with an explicit elimination order for the
    /// direct solver (`order[k]` is eliminated `k`-th) instead of AMD.
    pub fn with_ordering(
        pattern: Arc<SparsityPattern>,
        kind: SolverKind,
        options: SolverOptions,
        order: Option<&[usize]>,
    ) -> Result<Self> {
        let backend = match kind {
            SolverKind::Direct => {
                let inverse = match order {
                    Some(order) => {
                        let n = pattern.n;
                        let mut inverse = vec![usize::MAX; n];
                        for (k, &i) in order.iter().enumerate() {
                            if i >= n || inverse[i] != usize::MAX {
                                return Err(Error::invalid("elimination order is not a permutation"));
                            }
                            inverse[i] = k;
                        }
                        if order.len() != n {
                            return Err(Error::invalid("elimination order is not a permutation"));
                        }
                        Some(inverse)
                    }
                    None => None,
                };
                let ordering = match (order, &inverse) {
                    (Some(fwd), Some(inv)) => SymmetricOrdering::Custom(PermRef::new_checked(fwd, inv, pattern.n)),
                    _ => SymmetricOrdering::Amd,
                };
                let sym = factorize_symbolic_cholesky(
                    symbolic(&pattern),
                    Side::Lower,
                    ordering,
                    CholeskySymbolicParams::default(),
                )
                .map_err(|e| Error::invalid(format!("symbolic factorization failed: {e:?}")))?;
                Backend::Direct(Arc::new(sym))
            }
            SolverKind::Cg => Backend::Cg,
        };
        Ok(LinearSolver {
            pattern,
            backend,
            options,
        })
    }

    pub fn kind(&self) -> SolverKind {
        match self.backend {
            Backend::Direct(_) => SolverKind::Direct,
            Backend::Cg => SolverKind::Cg,
        }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    /// Stored entries of the Cholesky factor; zero for CG.
    pub fn factor_len(&self) -> usize {
        match &self.backend {
            Backend::Direct(sym) => sym.len_val(),
            Backend::Cg => 0,
        }
    }

    pub fn workspace(&self) -> SolverWorkspace {
        let n = self.pattern.n;
        let (l_values, stack) = match &self.backend {
            Backend::Direct(sym) => {
                let req = sym
                    .factorize_numeric_llt_scratch::<f64>(Par::Seq, Default::default())
                    .or(sym.solve_in_place_scratch::<f64>(1, Par::Seq));
                (vec![0.0; sym.len_val()], MemBuffer::new(req))
            }
            Backend::Cg => (Vec::new(), MemBuffer::new(faer::dyn_stack::StackReq::empty())),
        };
        SolverWorkspace {
            l_values,
            stack,
            residual: vec![0.0; n],
            correction: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
        }
    }

    /// Solves `A x = rhs` for the matrix with the given values on this
    /// solver's pattern.
    pub fn solve_into(
        &self,
        ws: &mut SolverWorkspace,
        values: &[f64],
        rhs: &[f64],
        x: &mut [f64],
    ) -> Result<SolveInfo> {
        let n = self.pattern.n;
        assert_eq!(values.len(), self.pattern.nnz());
        assert_eq!(rhs.len(), n);
        assert_eq!(x.len(), n);
        let rhs_norm = norm(rhs);
        if rhs_norm == 0.0 {
            x.fill(0.0);
            return Ok(SolveInfo {
                iterations: 0,
                relative_residual: 0.0,
            });
        }
        match &self.backend {
            Backend::Direct(sym) => self.solve_direct(sym, ws, values, rhs, rhs_norm, x),
            Backend::Cg => self.solve_cg(ws, values, rhs, rhs_norm, x),
        }
    }

    fn solve_direct(
        &self,
        sym: &SymbolicCholesky<usize>,
        ws: &mut SolverWorkspace,
        values: &[f64],
        rhs: &[f64],
        rhs_norm: f64,
        x: &mut [f64],
    ) -> Result<SolveInfo> {
        let n = self.pattern.n;
        let a = SparseColMatRef::new(symbolic(&self.pattern), values);
        let llt = sym
            .factorize_numeric_llt(
                &mut ws.l_values,
                a,
                Side::Lower,
                LltRegularization::default(),
                Par::Seq,
                MemStack::new(&mut ws.stack),
                Default::default(),
            )
            .map_err(|_| Error::NotPositiveDefinite)?;
        x.copy_from_slice(rhs);
        llt.solve_in_place_with_conj(
            Conj::No,
            MatMut::from_column_major_slice_mut(x, n, 1),
            Par::Seq,
            MemStack::new(&mut ws.stack),
        );
        let mut rel = residual(&self.pattern, values, rhs, x, &mut ws.residual) / rhs_norm;
        let mut steps = 0;
        while !(rel <= self.options.tol) && steps < self.options.max_refinements {
            ws.correction.copy_from_slice(&ws.residual);
            llt.solve_in_place_with_conj(
                Conj::No,
                MatMut::from_column_major_slice_mut(&mut ws.correction, n, 1),
                Par::Seq,
                MemStack::new(&mut ws.stack),
            );
            for (xi, di) in x.iter_mut().zip(&ws.correction) {
                *xi += di;
            }
            rel = residual(&self.pattern, values, rhs, x, &mut ws.residual) / rhs_norm;
            steps += 1;
        }
        if !(rel <= self.options.tol) {
            return Err(self.no_convergence(values, steps, rel));
        }
        Ok(SolveInfo {
            iterations: steps,
            relative_residual: rel,
        })
    }

    fn solve_cg(
        &self,
        ws: &mut SolverWorkspace,
        values: &[f64],
        rhs: &[f64],
        rhs_norm: f64,
        x: &mut [f64],
    ) -> Result<SolveInfo> {
        let n = self.pattern.n;
        let diag = self.pattern.diagonal(values);
        if diag.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        let cap = self.options.max_cg_iterations.unwrap_or((10 * n).max(1000));
        x.fill(0.0);
        let r = &mut ws.residual;
        let zv = &mut ws.correction;
        r.copy_from_slice(rhs);
        for i in 0..n {
            zv[i] = r[i] / diag[i];
        }
        ws.p.copy_from_slice(zv);
        let mut rz = dot(r, zv);
        let mut iterations = 0;
        // Iterate to a slightly tighter recursive residual so the true
        // residual check below passes.
        let target = 0.5 * self.options.tol * rhs_norm;
        while norm(r) > target && iterations < cap {
            self.pattern.matvec(values, &ws.p, &mut ws.ap);
            let pap = dot(&ws.p, &ws.ap);
            if !(pap > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * ws.p[i];
                r[i] -= alpha * ws.ap[i];
                zv[i] = r[i] / diag[i];
            }
            let rz_new = dot(r, zv);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                ws.p[i] = zv[i] + beta * ws.p[i];
            }
            iterations += 1;
        }
        let rel = residual(&self.pattern, values, rhs, x, &mut ws.residual) / rhs_norm;
        if !(rel <= self.options.tol) {
            return Err(self.no_convergence(values, iterations, rel));
        }
        Ok(SolveInfo {
            iterations,
            relative_residual: rel,
        })
    }

    fn no_convergence(&self, values: &[f64], iterations: usize, residual: f64) -> Error {
        let diag = self.pattern.diagonal(values);
        let max = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        Error::NoConvergence {
            iterations,
            residual,
            diag_ratio: max / min,
        }
    }
}

fn symbolic(p: &SparsityPattern) -> SymbolicSparseColMatRef<'_, usize> {
    SymbolicSparseColMatRef::new_checked(p.n, p.n, &p.col_ptr, None, &p.row_idx)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Writes `rhs - A x` into `r` and returns its norm.
fn residual(p: &SparsityPattern, values: &[f64], rhs: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    p.matvec(values, x, r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    norm(r)
}

/// Solves an assembled system with the solver family chosen for its size.
pub fn solve(system: &AssembledSystem, kind: SolverKind, tol: f64) -> Result<Vec<f64>> {
    let solver = LinearSolver::new(
        Arc::clone(&system.pattern),
        kind,
        SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )?;
    let mut ws = solver.workspace();
    let mut x = vec![0.0; system.size()];
    solver.solve_into(&mut ws, &system.values, &system.load, &mut x)?;
    Ok(x)
}
