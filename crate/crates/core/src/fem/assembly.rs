use std::collections::HashMap;
use std::sync::Arc;

use crate::coeff::ParametricField;
use crate::error::{Error, Result};
use crate::mesh::{build_dofmap, triangle_quadrature, DofMap, Mesh, Point, QuadratureRule};

use super::basis;

const NONE: u32 = u32::MAX;

/// Coefficient tables larger than this many entries are evaluated on the fly.
const MAX_TABULATED: usize = 1 << 24;

/// Compressed-column pattern of the free-dof stiffness matrix; every column
/// stores its rows in increasing order and the pattern is structurally
/// symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
}

impl SparsityPattern {
    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Position of `(row, col)` in the value array.
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        self.row_idx[range.clone()]
            .binary_search(&row)
            .ok()
            .map(|k| range.start + k)
    }

    /// `y = A x`
    pub fn matvec(&self, values: &[f64], x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for c in 0..self.n {
            let xc = x[c];
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += values[k] * xc;
            }
        }
    }

    pub fn diagonal(&self, values: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|c| self.find(c, c).map_or(0.0, |k| values[k]))
            .collect()
    }

    /// `max |A_ij - A_ji|`
    pub fn max_asymmetry(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[k];
                let t = self.find(c, r).expect("pattern is structurally symmetric");
                worst = worst.max((values[k] - values[t]).abs());
            }
        }
        worst
    }
}

/// Per-element-shape quadrature data. On a uniform mesh every triangle is a
/// translate of one of two shapes, so this is computed twice.
#[derive(Debug, Clone)]
struct ShapeClass {
    /// `[q][i][j]` with `i = 2a + c`: `w det (delta_cd grad a . grad b + d_d a d_c b)`
    mu_part: Vec<f64>,
    /// `[q][i][j]`: `w det d_c a d_d b`
    lambda_part: Vec<f64>,
    det: f64,
}

#[derive(Debug, Clone)]
enum TermStorage {
    Deterministic,
    /// `values[j * npoints + p]` holds `psi_{j+1}` at quadrature point `p`.
    Tabulated(Vec<f64>),
    OnTheFly,
}

/// A coefficient field sampled at every quadrature point of the mesh.
#[derive(Debug, Clone)]
struct FieldTable {
    field: ParametricField,
    base: Vec<f64>,
    terms: TermStorage,
}

impl FieldTable {
    fn new(field: &ParametricField, points: &[Point]) -> Self {
        let base = points.iter().map(|&x| field.base.value(x)).collect();
        let dim = field.dimension();
        let terms = if dim == 0 {
            TermStorage::Deterministic
        } else if dim.saturating_mul(points.len()) <= MAX_TABULATED {
            let mut v = Vec::with_capacity(dim * points.len());
            for j in 1..=dim {
                v.extend(points.iter().map(|&x| field.term(j, x)));
            }
            TermStorage::Tabulated(v)
        } else {
            TermStorage::OnTheFly
        };
        FieldTable {
            field: field.clone(),
            base,
            terms,
        }
    }

    fn evaluate(&self, params: &[f64], points: &[Point], out: &mut [f64]) -> Result<()> {
        let dim = self.field.dimension();
        if params.len() > dim {
            return Err(Error::invalid(format!(
                "{} parameters supplied to a field truncated at {dim}",
                params.len()
            )));
        }
        if let Some((index, &value)) = params.iter().enumerate().find(|(_, p)| !(p.abs() <= 0.5)) {
            return Err(Error::ParameterOutOfRange { index, value });
        }
        out.copy_from_slice(&self.base);
        let n = self.base.len();
        match &self.terms {
            TermStorage::Deterministic => {}
            TermStorage::Tabulated(v) => {
                for (j, &p) in params.iter().enumerate() {
                    if p != 0.0 {
                        for (o, t) in out.iter_mut().zip(&v[j * n..(j + 1) * n]) {
                            *o += p * t;
                        }
                    }
                }
            }
            TermStorage::OnTheFly => {
                for (o, &x) in out.iter_mut().zip(points) {
                    for (j, &p) in params.iter().enumerate() {
                        if p != 0.0 {
                            *o += p * self.field.term(j + 1, x);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Realization-independent part of the Galerkin discretization: mesh, dof
/// map, quadrature geometry and the sparsity pattern with its scatter map.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    dofmap: DofMap,
    quad: QuadratureRule,
    classes: Vec<ShapeClass>,
    element_class: Vec<u32>,
    /// Element-major quadrature points, `t * nq + q`.
    points: Vec<Point>,
    /// `[t][2a + c]` free vector dof, or `NONE`.
    local_dofs: Vec<u32>,
    /// `[t][i][j]` position in the value array, or `NONE`.
    scatter: Vec<u32>,
    pattern: Arc<SparsityPattern>,
}

impl Discretization {
    pub fn new(mesh: Mesh, degree: usize, quad: QuadratureRule) -> Result<Self> {
        let dofmap = build_dofmap(&mesh, degree)?;
        let nloc = basis::local_count(degree);
        let m = 2 * nloc;
        let nq = quad.points.len();

        let mut classes = Vec::new();
        let mut class_of: HashMap<[u64; 7], u32> = HashMap::new();
        let mut element_class = Vec::with_capacity(mesh.triangles().len());
        let mut points = Vec::with_capacity(mesh.triangles().len() * nq);
        let mut grads = vec![[0.0; 2]; nloc];
        for t in 0..mesh.triangles().len() {
            let verts = mesh.triangle_vertices(t);
            let (dl, det) = basis::barycentric_gradients(&verts);
            if !(det > 0.0) {
                return Err(Error::invalid(format!("triangle {t} is degenerate or inverted")));
            }
            let key = [
                dl[0][0].to_bits(),
                dl[0][1].to_bits(),
                dl[1][0].to_bits(),
                dl[1][1].to_bits(),
                dl[2][0].to_bits(),
                dl[2][1].to_bits(),
                det.to_bits(),
            ];
            let id = *class_of.entry(key).or_insert_with(|| {
                let mut mu_part = vec![0.0; nq * m * m];
                let mut lambda_part = vec![0.0; nq * m * m];
                for (q, &l) in quad.points.iter().enumerate() {
                    basis::gradients(degree, l, &dl, &mut grads);
                    let wdet = quad.weights[q] * det;
                    let base = q * m * m;
                    for a in 0..nloc {
                        for c in 0..2 {
                            for b in 0..nloc {
                                for d in 0..2 {
                                    let (ga, gb) = (grads[a], grads[b]);
                                    let dot = if c == d { ga[0] * gb[0] + ga[1] * gb[1] } else { 0.0 };
                                    let k = base + (2 * a + c) * m + 2 * b + d;
                                    mu_part[k] = wdet * (dot + ga[d] * gb[c]);
                                    lambda_part[k] = wdet * (ga[c] * gb[d]);
                                }
                            }
                        }
                    }
                }
                classes.push(ShapeClass {
                    mu_part,
                    lambda_part,
                    det,
                });
                (classes.len() - 1) as u32
            });
            element_class.push(id);
            points.extend(quad.points.iter().map(|&l| mesh.map_point(t, l)));
        }

        let ntri = mesh.triangles().len();
        let mut local_dofs = Vec::with_capacity(ntri * m);
        for t in 0..ntri {
            for &node in dofmap.element_nodes(t) {
                for c in 0..2 {
                    local_dofs.push(dofmap.vector_dof(node, c).map_or(NONE, |d| d as u32));
                }
            }
        }

        let n = dofmap.total_free_dofs();
        let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
        for t in 0..ntri {
            let dofs = &local_dofs[t * m..(t + 1) * m];
            for &cj in dofs.iter().filter(|&&d| d != NONE) {
                for &ri in dofs.iter().filter(|&&d| d != NONE) {
                    columns[cj as usize].push(ri as usize);
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for col in &mut columns {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        if row_idx.len() >= NONE as usize {
            return Err(Error::invalid("stiffness pattern too large for 32-bit indexing"));
        }
        let pattern = SparsityPattern { n, col_ptr, row_idx };

        let mut scatter = Vec::with_capacity(ntri * m * m);
        for t in 0..ntri {
            let dofs = &local_dofs[t * m..(t + 1) * m];
            for &ri in dofs {
                for &cj in dofs {
                    scatter.push(if ri == NONE || cj == NONE {
                        NONE
                    } else {
                        pattern.find(ri as usize, cj as usize).expect("entry in pattern") as u32
                    });
                }
            }
        }

        Ok(Discretization {
            mesh,
            dofmap,
            quad,
            classes,
            element_class,
            points,
            local_dofs,
            scatter,
            pattern: Arc::new(pattern),
        })
    }

    /// Uniform mesh with `subdivisions` squares per side and the default
    /// assembly quadrature.
    pub fn uniform(subdivisions: usize, degree: usize) -> Result<Self> {
        let mesh = crate::mesh::build_uniform_mesh(subdivisions)?;
        Self::new(mesh, degree, triangle_quadrature(default_quadrature_degree(degree))?)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn degree(&self) -> usize {
        self.dofmap.degree()
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn free_dofs(&self) -> usize {
        self.pattern.n
    }

    pub fn quadrature_points(&self) -> &[Point] {
        &self.points
    }

    fn local_size(&self) -> usize {
        2 * basis::local_count(self.degree())
    }

    /// Nested-dissection elimination order of the free dofs. The square is
    /// split recursively along mesh lines `x_d = i h`; no element crosses such
    /// a line, so the nodes on it separate the two halves and are eliminated
    /// after them.
    pub fn dissection_order(&self) -> Vec<usize> {
        let r = self.degree();
        let side = self.mesh.subdivisions() * r;
        let mut grid = vec![NONE; (side + 1) * (side + 1)];
        for (node, x) in self.dofmap.scalar_node_coords().iter().enumerate() {
            if let Some(k) = self.dofmap.free_scalar_index(node) {
                let ix = (x[0] * side as f64).round() as usize;
                let iy = (x[1] * side as f64).round() as usize;
                grid[iy * (side + 1) + ix] = k as u32;
            }
        }
        let mut order = Vec::with_capacity(self.free_dofs());
        dissect(&grid, side + 1, r, [0, side, 0, side], &mut order);
        order
    }

    /// Free vector dofs of element `t`, `None` for constrained ones.
    pub fn element_dofs(&self, t: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        let m = self.local_size();
        self.local_dofs[t * m..(t + 1) * m]
            .iter()
            .map(|&d| (d != NONE).then_some(d as usize))
    }

    /// `l(v) = int f . v` for every free basis function, under the assembly
    /// quadrature.
    pub fn load_vector(&self, forcing: &dyn Fn(Point) -> [f64; 2]) -> Vec<f64> {
        self.load_vector_with(forcing, &self.quad)
    }

    /// `l(v) = int f . v` under an arbitrary reference rule.
    pub fn load_vector_with(&self, forcing: &dyn Fn(Point) -> [f64; 2], quad: &QuadratureRule) -> Vec<f64> {
        let degree = self.degree();
        let nloc = basis::local_count(degree);
        let m = 2 * nloc;
        let mut phi = vec![0.0; nloc];
        let mut load = vec![0.0; self.free_dofs()];
        for t in 0..self.mesh.triangles().len() {
            let det = self.classes[self.element_class[t] as usize].det;
            for (q, &l) in quad.points.iter().enumerate() {
                basis::values(degree, l, &mut phi);
                let f = forcing(self.mesh.map_point(t, l));
                let wdet = quad.weights[q] * det;
                for a in 0..nloc {
                    for c in 0..2 {
                        let d = self.local_dofs[t * m + 2 * a + c];
                        if d != NONE {
                            load[d as usize] += wdet * f[c] * phi[a];
                        }
                    }
                }
            }
        }
        load
    }

    /// Accumulates the stiffness matrix for coefficient samples `mu`,
    /// `lambda` (one per quadrature point) into `values`.
    ///
    /// With `swap_roles` the local matrices are built as `B(phi_i, phi_j)`
    /// instead of `B(phi_j, phi_i)`.
    fn stiffness_values(&self, mu: &[f64], lambda: &[f64], swap_roles: bool, values: &mut [f64], local: &mut [f64]) {
        let m = self.local_size();
        let mm = m * m;
        let nq = self.quad.points.len();
        values.fill(0.0);
        for t in 0..self.mesh.triangles().len() {
            let class = &self.classes[self.element_class[t] as usize];
            local.fill(0.0);
            for q in 0..nq {
                let (mq, lq) = (mu[t * nq + q], lambda[t * nq + q]);
                let mp = &class.mu_part[q * mm..(q + 1) * mm];
                let lp = &class.lambda_part[q * mm..(q + 1) * mm];
                if swap_roles {
                    for i in 0..m {
                        for j in 0..m {
                            local[i * m + j] += mq * mp[j * m + i] + lq * lp[j * m + i];
                        }
                    }
                } else {
                    for ((o, a), b) in local.iter_mut().zip(mp).zip(lp) {
                        *o += mq * a + lq * b;
                    }
                }
            }
            let sc = &self.scatter[t * mm..(t + 1) * mm];
            for (&k, &v) in sc.iter().zip(local.iter()) {
                if k != NONE {
                    values[k as usize] += v;
                }
            }
        }
    }
}

/// Assembly quadrature used unless configured otherwise: the centroid rule
/// for P1 and the degree-4 rule for P2.
pub fn default_quadrature_degree(degree: usize) -> usize {
    if degree == 1 {
        1
    } else {
        4
    }
}

/// Appends the dofs of the lattice nodes in the inclusive box
/// `[x0, x1] x [y0, y1]` in nested-dissection order; separators lie on
/// lattice lines that are multiples of `step`.
fn dissect(grid: &[u32], width: usize, step: usize, [x0, x1, y0, y1]: [usize; 4], order: &mut Vec<usize>) {
    const LEAF: usize = 8;
    let horizontal = x1 - x0 >= y1 - y0;
    let (lo, hi) = if horizontal { (x0, x1) } else { (y0, y1) };
    let cut = ((lo + hi) / 2 / step) * step;
    if hi - lo <= LEAF || cut <= lo || cut >= hi {
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let k = grid[iy * width + ix];
                if k != NONE {
                    order.extend([2 * k as usize, 2 * k as usize + 1]);
                }
            }
        }
        return;
    }
    let (first, second, sep) = if horizontal {
        ([x0, cut - 1, y0, y1], [cut + 1, x1, y0, y1], [cut, cut, y0, y1])
    } else {
        ([x0, x1, y0, cut - 1], [x0, x1, cut + 1, y1], [x0, x1, cut, cut])
    };
    dissect(grid, width, step, first, order);
    dissect(grid, width, step, second, order);
    dissect(grid, width, step, sep, order);
}

/// Homogeneous-Dirichlet elasticity problem with affine-parametric Lamé
/// coefficients and a fixed body force.
#[derive(Debug, Clone)]
pub struct ParametricProblem {
    disc: Arc<Discretization>,
    mu: FieldTable,
    lambda: FieldTable,
    load: Arc<Vec<f64>>,
    warnings: Vec<String>,
}

/// Scratch buffers reused across assemblies.
#[derive(Debug, Clone, Default)]
pub struct AssemblyScratch {
    mu: Vec<f64>,
    lambda: Vec<f64>,
    local: Vec<f64>,
}

impl ParametricProblem {
    pub fn new(
        disc: Arc<Discretization>,
        mu: &ParametricField,
        lambda: &ParametricField,
        forcing: &dyn Fn(Point) -> [f64; 2],
    ) -> Self {
        let points = disc.quadrature_points();
        let mut warnings = Vec::new();
        let needed = 2 * (disc.degree() - 1) + mu_order(mu).max(mu_order(lambda));
        if disc.quadrature().exact_degree < needed {
            warnings.push(format!(
                "assembly quadrature of degree {} is below the recommended degree {needed}",
                disc.quadrature().exact_degree
            ));
        }
        ParametricProblem {
            mu: FieldTable::new(mu, points),
            lambda: FieldTable::new(lambda, points),
            load: Arc::new(disc.load_vector(forcing)),
            disc,
            warnings,
        }
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn load(&self) -> &Arc<Vec<f64>> {
        &self.load
    }

    /// Replaces the load vector by one integrated with `quad`.
    pub fn with_load_quadrature(mut self, forcing: &dyn Fn(Point) -> [f64; 2], quad: &QuadratureRule) -> Self {
        self.load = Arc::new(self.disc.load_vector_with(forcing, quad));
        self
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn mu_field(&self) -> &ParametricField {
        &self.mu.field
    }

    pub fn lambda_field(&self) -> &ParametricField {
        &self.lambda.field
    }

    pub fn scratch(&self) -> AssemblyScratch {
        let np = self.disc.points.len();
        let m = self.disc.local_size();
        AssemblyScratch {
            mu: vec![0.0; np],
            lambda: vec![0.0; np],
            local: vec![0.0; m * m],
        }
    }

    /// Writes the stiffness values for realization `(y, z)` into `values`,
    /// which must have the pattern's length.
    pub fn assemble_into(&self, y: &[f64], z: &[f64], scratch: &mut AssemblyScratch, values: &mut [f64]) -> Result<()> {
        self.assemble_impl(y, z, false, scratch, values)
    }

    fn assemble_impl(
        &self,
        y: &[f64],
        z: &[f64],
        swap_roles: bool,
        scratch: &mut AssemblyScratch,
        values: &mut [f64],
    ) -> Result<()> {
        let points = &self.disc.points;
        self.mu.evaluate(y, points, &mut scratch.mu)?;
        self.lambda.evaluate(z, points, &mut scratch.lambda)?;
        if let Some(v) = scratch.mu.iter().find(|v| !(**v > 0.0)) {
            return Err(Error::BoundViolation(format!("shear modulus {v:.6e} <= 0 at a quadrature point")));
        }
        if let Some(v) = scratch.lambda.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::BoundViolation(format!("first Lamé parameter {v:.6e} < 0 at a quadrature point")));
        }
        self.disc
            .stiffness_values(&scratch.mu, &scratch.lambda, swap_roles, values, &mut scratch.local);
        Ok(())
    }

    pub fn assemble(&self, y: &[f64], z: &[f64]) -> Result<AssembledSystem> {
        let mut values = vec![0.0; self.disc.pattern.nnz()];
        self.assemble_into(y, z, &mut self.scratch(), &mut values)?;
        Ok(self.system(values, y, z))
    }

    /// Assembles `B(v, u)` with test and trial functions exchanged.
    pub fn assemble_swapped(&self, y: &[f64], z: &[f64]) -> Result<AssembledSystem> {
        let mut values = vec![0.0; self.disc.pattern.nnz()];
        self.assemble_impl(y, z, true, &mut self.scratch(), &mut values)?;
        Ok(self.system(values, y, z))
    }

    fn system(&self, values: Vec<f64>, y: &[f64], z: &[f64]) -> AssembledSystem {
        AssembledSystem {
            pattern: Arc::clone(&self.disc.pattern),
            values,
            load: Arc::clone(&self.load),
            y: y.to_vec(),
            z: z.to_vec(),
            degree: self.disc.degree(),
        }
    }
}

/// Polynomial order used in the quadrature warning; non-polynomial bases
/// count as quadratic.
fn mu_order(f: &ParametricField) -> usize {
    use crate::coeff::BaseFunction;
    let base = match f.base {
        BaseFunction::Constant { .. } => 0,
        BaseFunction::Linear { .. } => 1,
        BaseFunction::SineX1 { .. } => 2,
    };
    if f.dimension() > 0 {
        base.max(2)
    } else {
        base
    }
}

/// Stiffness matrix and load vector of one parameter realization.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub pattern: Arc<SparsityPattern>,
    pub values: Vec<f64>,
    pub load: Arc<Vec<f64>>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub degree: usize,
}

impl AssembledSystem {
    pub fn size(&self) -> usize {
        self.pattern.n
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.pattern.max_asymmetry(&self.values)
    }

    /// `||A x - l|| / ||l||`, or `||A x||` when the load vanishes.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.size()];
        self.pattern.matvec(&self.values, x, &mut ax);
        let r: f64 = ax.iter().zip(self.load.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let nb = self.load.iter().map(|b| b * b).sum::<f64>().sqrt();
        if nb > 0.0 {
            r / nb
        } else {
            r
        }
    }
}

/// One-shot assembly on an existing mesh.
pub fn assemble(
    mesh: &Mesh,
    degree: usize,
    mu: &ParametricField,
    lambda: &ParametricField,
    y: &[f64],
    z: &[f64],
    forcing: &dyn Fn(Point) -> [f64; 2],
    quad: &QuadratureRule,
) -> Result<AssembledSystem> {
    let disc = Arc::new(Discretization::new(mesh.clone(), degree, quad.clone())?);
    ParametricProblem::new(disc, mu, lambda, forcing).assemble(y, z)
}
