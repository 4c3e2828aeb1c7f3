//! Lagrange shape functions on a triangle in barycentric form.
//!
//! Local order: the three vertices, then for P2 the midpoints of the edges
//! (0,1), (1,2), (2,0).

use crate::mesh::Point;

const P2_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Gradients of the barycentric coordinates of a triangle, and its signed
/// double area.
pub fn barycentric_gradients(v: &[Point; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let grads = [
        [(v[1][1] - v[2][1]) / det, (v[2][0] - v[1][0]) / det],
        [(v[2][1] - v[0][1]) / det, (v[0][0] - v[2][0]) / det],
        [(v[0][1] - v[1][1]) / det, (v[1][0] - v[0][0]) / det],
    ];
    (grads, det)
}

pub fn local_count(degree: usize) -> usize {
    if degree == 1 {
        3
    } else {
        6
    }
}

/// Shape-function values at barycentric point `l`; `out.len() == local_count`.
pub fn values(degree: usize, l: [f64; 3], out: &mut [f64]) {
    if degree == 1 {
        out[..3].copy_from_slice(&l);
        return;
    }
    for i in 0..3 {
        out[i] = l[i] * (2.0 * l[i] - 1.0);
    }
    for (e, &(a, b)) in P2_EDGES.iter().enumerate() {
        out[3 + e] = 4.0 * l[a] * l[b];
    }
}

/// Physical gradients of the shape functions at barycentric point `l`.
pub fn gradients(degree: usize, l: [f64; 3], dl: &[[f64; 2]; 3], out: &mut [[f64; 2]]) {
    if degree == 1 {
        out[..3].copy_from_slice(dl);
        return;
    }
    for i in 0..3 {
        let s = 4.0 * l[i] - 1.0;
        out[i] = [s * dl[i][0], s * dl[i][1]];
    }
    for (e, &(a, b)) in P2_EDGES.iter().enumerate() {
        out[3 + e] = [
            4.0 * (l[b] * dl[a][0] + l[a] * dl[b][0]),
            4.0 * (l[b] * dl[a][1] + l[a] * dl[b][1]),
        ];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_nodality() {
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        for degree in [1, 2] {
            let n = local_count(degree);
            let mut v = vec![0.0; n];
            for (k, node) in nodes[..n].iter().enumerate() {
                values(degree, *node, &mut v);
                for (i, &vi) in v.iter().enumerate() {
                    assert_eq!(vi, if i == k { 1.0 } else { 0.0 });
                }
            }
            values(degree, [0.2, 0.3, 0.5], &mut v);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let tri = [[0.1, 0.2], [0.6, 0.25], [0.3, 0.9]];
        let (dl, det) = barycentric_gradients(&tri);
        assert!(det > 0.0);
        let to_bary = |x: Point| -> [f64; 3] {
            let l1 = dl[1][0] * (x[0] - tri[0][0]) + dl[1][1] * (x[1] - tri[0][1]);
            let l2 = dl[2][0] * (x[0] - tri[0][0]) + dl[2][1] * (x[1] - tri[0][1]);
            [1.0 - l1 - l2, l1, l2]
        };
        let x = [0.35, 0.4];
        let eps = 1e-6;
        let mut g = [[0.0; 2]; 6];
        gradients(2, to_bary(x), &dl, &mut g);
        let (mut vp, mut vm) = ([0.0; 6], [0.0; 6]);
        for d in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += eps;
            xm[d] -= eps;
            values(2, to_bary(xp), &mut vp);
            values(2, to_bary(xm), &mut vm);
            for i in 0..6 {
                let fd = (vp[i] - vm[i]) / (2.0 * eps);
                assert!((fd - g[i][d]).abs() < 1e-8, "basis {i} dir {d}");
            }
        }
    }
}
