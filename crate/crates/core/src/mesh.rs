//! Uniform triangulations of the unit square, Lagrange degree-of-freedom
//! maps and reference-triangle quadrature.
//!
//! Every cell square `[i h, (i+1) h] x [j h, (j+1) h]` is cut along the same
//! diagonal, top-left to bottom-right unless requested otherwise. Vertices and Lagrange nodes are numbered
//! lexicographically by `(x2, x1)`, i.e. row by row from the bottom edge.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Which diagonal splits each cell square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagonal {
    /// Triangles `(a, b, c)` and `(a, c, d)` for the cell corners `a, b, c, d`
    /// counter-clockwise from the bottom left.
    Rising,
    /// Triangles `(a, b, d)` and `(b, c, d)`.
    #[default]
    Falling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    subdivisions: usize,
    diagonal: Diagonal,
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

/// Builds the `J x J` uniform mesh with `2 J^2` congruent triangles.
pub fn build_uniform_mesh(subdivisions: usize) -> Result<Mesh> {
    build_uniform_mesh_with(subdivisions, Diagonal::default())
}

pub fn build_uniform_mesh_with(subdivisions: usize, diagonal: Diagonal) -> Result<Mesh> {
    if subdivisions == 0 {
        return Err(Error::invalid("mesh subdivision count must be at least 1"));
    }
    let n = subdivisions;
    let side = n + 1;
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(side * side);
    let mut boundary = Vec::with_capacity(side * side);
    for j in 0..side {
        for i in 0..side {
            vertices.push([i as f64 * h, j as f64 * h]);
            boundary.push(i == 0 || j == 0 || i == n || j == n);
        }
    }
    let vid = |i: usize, j: usize| j * side + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = vid(i, j);
            let b = vid(i + 1, j);
            let c = vid(i + 1, j + 1);
            let d = vid(i, j + 1);
            match diagonal {
                Diagonal::Rising => {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                }
                Diagonal::Falling => {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
    }
    Ok(Mesh {
        subdivisions,
        diagonal,
        vertices,
        triangles,
        boundary,
    })
}

impl Mesh {
    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    pub fn diagonal(&self) -> Diagonal {
        self.diagonal
    }

    pub fn h(&self) -> f64 {
        1.0 / self.subdivisions as f64
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn interior_vertex_count(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area; positive for counter-clockwise triangles.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_vertices(t);
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [p0, p1, p2] = self.triangle_vertices(t);
        [
            (p0[0] + p1[0] + p2[0]) / 3.0,
            (p0[1] + p1[1] + p2[1]) / 3.0,
        ]
    }

    /// Maps barycentric coordinates on triangle `t` to physical coordinates.
    pub fn map_point(&self, t: usize, bary: [f64; 3]) -> Point {
        let [p0, p1, p2] = self.triangle_vertices(t);
        [
            bary[0] * p0[0] + bary[1] * p1[0] + bary[2] * p2[0],
            bary[0] * p0[1] + bary[1] * p1[1] + bary[2] * p2[1],
        ]
    }

    /// Locates the triangle containing `x` together with its barycentric
    /// coordinates. Points on shared edges go to the lower-index triangle.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        if !(0.0..=1.0).contains(&x[0]) || !(0.0..=1.0).contains(&x[1]) {
            return None;
        }
        let n = self.subdivisions;
        let h = self.h();
        let i = ((x[0] / h).floor() as usize).min(n - 1);
        let j = ((x[1] / h).floor() as usize).min(n - 1);
        let u = x[0] / h - i as f64;
        let v = x[1] / h - j as f64;
        let cell = 2 * (j * n + i);
        match self.diagonal {
            // (a, b, c) below the diagonal v = u, (a, c, d) above
            Diagonal::Rising if v <= u => Some((cell, [1.0 - u, u - v, v])),
            Diagonal::Rising => Some((cell + 1, [1.0 - v, u, v - u])),
            // (a, b, d) below u + v = 1, (b, c, d) above
            Diagonal::Falling if u + v <= 1.0 => Some((cell, [1.0 - u - v, u, v])),
            Diagonal::Falling => Some((cell + 1, [1.0 - v, u + v - 1.0, 1.0 - u])),
        }
    }
}

/// Lagrange node layout for continuous vector-valued P1/P2 elements with
/// homogeneous Dirichlet data on the whole boundary.
///
/// Free scalar node `k` carries the two vector dofs `2k` (first component)
/// and `2k + 1` (second component).
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    degree: usize,
    nodes_per_side: usize,
    node_coords: Vec<Point>,
    free_index: Vec<Option<usize>>,
    element_nodes: Vec<Vec<usize>>,
    free_count: usize,
}

pub fn build_dofmap(mesh: &Mesh, degree: usize) -> Result<DofMap> {
    if !(1..=2).contains(&degree) {
        return Err(Error::invalid(format!(
            "unsupported element degree {degree}; expected 1 or 2"
        )));
    }
    let n = mesh.subdivisions();
    let side = degree * n + 1;
    let step = 1.0 / (degree * n) as f64;
    let mut node_coords = Vec::with_capacity(side * side);
    let mut free_index = Vec::with_capacity(side * side);
    let mut next = 0;
    for jj in 0..side {
        for ii in 0..side {
            node_coords.push([ii as f64 * step, jj as f64 * step]);
            let interior = ii > 0 && jj > 0 && ii + 1 < side && jj + 1 < side;
            free_index.push(interior.then(|| {
                next += 1;
                next - 1
            }));
        }
    }
    let vside = n + 1;
    let grid = |v: usize| ((v % vside) * degree, (v / vside) * degree);
    let node = |(ii, jj): (usize, usize)| jj * side + ii;
    let element_nodes = mesh
        .triangles()
        .iter()
        .map(|tri| {
            let g = tri.map(grid);
            let mut nodes: Vec<usize> = g.iter().map(|&p| node(p)).collect();
            if degree == 2 {
                for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                    let mid = ((g[a].0 + g[b].0) / 2, (g[a].1 + g[b].1) / 2);
                    nodes.push(node(mid));
                }
            }
            nodes
        })
        .collect();
    Ok(DofMap {
        degree,
        nodes_per_side: side,
        node_coords,
        free_index,
        element_nodes,
        free_count: next,
    })
}

impl DofMap {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes_per_side(&self) -> usize {
        self.nodes_per_side
    }

    pub fn scalar_node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn local_node_count(&self) -> usize {
        if self.degree == 1 {
            3
        } else {
            6
        }
    }

    /// Global scalar node indices of element `t` (vertices first, then edge
    /// midpoints for P2).
    pub fn element_nodes(&self, t: usize) -> &[usize] {
        &self.element_nodes[t]
    }

    pub fn free_scalar_index(&self, node: usize) -> Option<usize> {
        self.free_index[node]
    }

    pub fn free_scalar_count(&self) -> usize {
        self.free_count
    }

    pub fn total_free_dofs(&self) -> usize {
        2 * self.free_count
    }

    /// Vector dof indices of the given displacement component, in node order.
    pub fn free_dofs(&self, component: usize) -> impl Iterator<Item = usize> + '_ {
        assert!(component < 2);
        (0..self.free_count).map(move |k| 2 * k + component)
    }

    pub fn vector_dof(&self, node: usize, component: usize) -> Option<usize> {
        self.free_index[node].map(|k| 2 * k + component)
    }
}

/// Reference-triangle quadrature; points are barycentric coordinates and the
/// weights sum to the reference area 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

pub fn triangle_quadrature(exact_degree: usize) -> Result<QuadratureRule> {
    let third = 1.0 / 3.0;
    let rule = match exact_degree {
        1 => QuadratureRule {
            points: vec![[third, third, third]],
            weights: vec![0.5],
            exact_degree,
        },
        2 => {
            let a = 1.0 / 6.0;
            let b = 2.0 / 3.0;
            QuadratureRule {
                points: vec![[b, a, a], [a, b, a], [a, a, b]],
                weights: vec![1.0 / 6.0; 3],
                exact_degree,
            }
        }
        4 => {
            // Dunavant degree-4 rule, two orbits of three points.
            let a1 = 0.445_948_490_915_964_886_318_329_253_883;
            let w1 = 0.223_381_589_678_011_465_695_007_008_433;
            let a2 = 0.091_576_213_509_770_743_459_571_463_402_2;
            let w2 = 0.109_951_743_655_321_867_638_326_324_900;
            let b1 = 1.0 - 2.0 * a1;
            let b2 = 1.0 - 2.0 * a2;
            QuadratureRule {
                points: vec![
                    [b1, a1, a1],
                    [a1, b1, a1],
                    [a1, a1, b1],
                    [b2, a2, a2],
                    [a2, b2, a2],
                    [a2, a2, b2],
                ],
                weights: vec![w1 / 2.0, w1 / 2.0, w1 / 2.0, w2 / 2.0, w2 / 2.0, w2 / 2.0],
                exact_degree,
            }
        }
        d => {
            return Err(Error::invalid(format!(
                "no triangle quadrature of exact degree {d}; expected 1, 2 or 4"
            )))
        }
    };
    Ok(rule)
}
