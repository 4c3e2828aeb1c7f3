use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::sum::pairwise_sum;

use super::assembly::Discretization;
use super::basis;

const CENTROID: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

/// Finite element displacement given by its free-dof coefficients; the
/// constrained boundary dofs are zero.
#[derive(Debug, Clone)]
pub struct DiscreteDisplacement<'a> {
    disc: &'a Discretization,
    coefficients: Vec<f64>,
}

impl<'a> DiscreteDisplacement<'a> {
    pub fn new(disc: &'a Discretization, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != disc.free_dofs() {
            return Err(Error::invalid(format!(
                "expected {} coefficients, got {}",
                disc.free_dofs(),
                coefficients.len()
            )));
        }
        Ok(DiscreteDisplacement { disc, coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn discretization(&self) -> &Discretization {
        self.disc
    }

    /// Value at barycentric point `bary` of element `t`.
    pub fn value_in_element(&self, t: usize, bary: [f64; 3]) -> [f64; 2] {
        let degree = self.disc.degree();
        let mut phi = [0.0; 6];
        basis::values(degree, bary, &mut phi);
        let mut u = [0.0; 2];
        for (k, dof) in self.disc.element_dofs(t).enumerate() {
            if let Some(d) = dof {
                u[k % 2] += self.coefficients[d] * phi[k / 2];
            }
        }
        u
    }

    pub fn eval(&self, x: Point) -> Option<[f64; 2]> {
        self.disc
            .mesh()
            .locate(x)
            .map(|(t, bary)| self.value_in_element(t, bary))
    }

    /// Value at a scalar node; zero on the boundary.
    pub fn node_value(&self, node: usize) -> [f64; 2] {
        let dm = self.disc.dofmap();
        [0, 1].map(|c| dm.vector_dof(node, c).map_or(0.0, |d| self.coefficients[d]))
    }

    /// `|u|_{H^1} = (int |grad u|^2)^{1/2}` under the assembly quadrature.
    pub fn h1_seminorm(&self) -> f64 {
        let degree = self.disc.degree();
        let mesh = self.disc.mesh();
        let quad = self.disc.quadrature();
        let mut grads = [[0.0; 2]; 6];
        let per_element: Vec<f64> = (0..mesh.triangles().len())
            .map(|t| {
                let (dl, det) = basis::barycentric_gradients(&mesh.triangle_vertices(t));
                let dofs: Vec<Option<usize>> = self.disc.element_dofs(t).collect();
                let mut acc = 0.0;
                for (q, &l) in quad.points.iter().enumerate() {
                    basis::gradients(degree, l, &dl, &mut grads);
                    let mut du = [[0.0; 2]; 2];
                    for (k, dof) in dofs.iter().enumerate() {
                        if let Some(d) = dof {
                            let g = grads[k / 2];
                            du[k % 2][0] += self.coefficients[*d] * g[0];
                            du[k % 2][1] += self.coefficients[*d] * g[1];
                        }
                    }
                    let sq = du[0][0].powi(2) + du[0][1].powi(2) + du[1][0].powi(2) + du[1][1].powi(2);
                    acc += quad.weights[q] * det * sq;
                }
                acc
            })
            .collect();
        pairwise_sum(&per_element).sqrt()
    }
}

/// `L(v) = int (v1 + v2)` evaluated by the centroid rule.
pub fn functional_mean(u: &DiscreteDisplacement<'_>) -> f64 {
    let mesh = u.disc.mesh();
    let parts: Vec<f64> = (0..mesh.triangles().len())
        .map(|t| {
            let v = u.value_in_element(t, CENTROID);
            mesh.signed_area(t) * (v[0] + v[1])
        })
        .collect();
    pairwise_sum(&parts)
}

/// The centroid-rule mean functional as a weight vector over free dofs, so
/// that `L(u_h) = w . c`.
#[derive(Debug, Clone)]
pub struct CentroidFunctional {
    weights: Vec<f64>,
}

impl CentroidFunctional {
    pub fn new(disc: &Discretization) -> Self {
        let mesh = disc.mesh();
        let mut phi = [0.0; 6];
        basis::values(disc.degree(), CENTROID, &mut phi);
        let mut weights = vec![0.0; disc.free_dofs()];
        for t in 0..mesh.triangles().len() {
            let area = mesh.signed_area(t);
            for (k, dof) in disc.element_dofs(t).enumerate() {
                if let Some(d) = dof {
                    weights[d] += area * phi[k / 2];
                }
            }
        }
        CentroidFunctional { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, coefficients: &[f64]) -> f64 {
        let parts: Vec<f64> = self
            .weights
            .iter()
            .zip(coefficients)
            .map(|(w, c)| w * c)
            .collect();
        pairwise_sum(&parts)
    }
}

/// `(sum_K |K| |u_h(c_K) - u(c_K)|^2)^{1/2}` over element centroids `c_K`.
pub fn l2_error_centroid(u: &DiscreteDisplacement<'_>, exact: &dyn Fn(Point) -> [f64; 2]) -> f64 {
    let mesh = u.disc.mesh();
    let parts: Vec<f64> = (0..mesh.triangles().len())
        .map(|t| {
            let v = u.value_in_element(t, CENTROID);
            let e = exact(mesh.centroid(t));
            mesh.signed_area(t) * ((v[0] - e[0]).powi(2) + (v[1] - e[1]).powi(2))
        })
        .collect();
    pairwise_sum(&parts).sqrt()
}

/// `log2(e_{i-1} / e_i)` for consecutive errors under halved resolution.
pub fn empirical_rate(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::invalid("at least two errors are needed for a rate"));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::invalid(format!("errors must be positive and finite, got {e}")));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}
