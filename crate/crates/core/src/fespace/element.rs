//! Affine triangle geometry with P1 and P2 Lagrange bases in barycentric form.
//!
//! P2 local node order: vertices 0, 1, 2, then midpoints of edges
//! (0,1), (1,2), (2,0).

use crate::scalar::Real;

#[derive(Clone, Copy, Debug)]
pub struct TriangleGeometry<T> {
    pub vertices: [[T; 2]; 3],
    pub area: T,
    /// Constant gradients of the barycentric coordinates (= P1 basis gradients).
    pub grad_bary: [[T; 2]; 3],
}

impl<T: Real> TriangleGeometry<T> {
    pub fn new(vertices: [[T; 2]; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grad_bary = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Self { vertices, area: det * T::lit(0.5), grad_bary }
    }

    pub fn point(&self, bary: [T; 3]) -> [T; 2] {
        let mut p = [T::zero(); 2];
        for (l, v) in bary.iter().zip(&self.vertices) {
            p[0] += *l * v[0];
            p[1] += *l * v[1];
        }
        p
    }
}

pub fn p2_values<T: Real>(l: [T; 3]) -> [T; 6] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    [
        l[0] * (two * l[0] - T::one()),
        l[1] * (two * l[1] - T::one()),
        l[2] * (two * l[2] - T::one()),
        four * l[0] * l[1],
        four * l[1] * l[2],
        four * l[2] * l[0],
    ]
}

pub fn p2_gradients<T: Real>(l: [T; 3], g: &[[T; 2]; 3]) -> [[T; 2]; 6] {
    let four = T::lit(4.0);
    let vertex = |i: usize| {
        let s = four * l[i] - T::one();
        [s * g[i][0], s * g[i][1]]
    };
    let edge = |i: usize, j: usize| {
        [four * (l[i] * g[j][0] + l[j] * g[i][0]), four * (l[i] * g[j][1] + l[j] * g[i][1])]
    };
    [vertex(0), vertex(1), vertex(2), edge(0, 1), edge(1, 2), edge(2, 0)]
}
