use crate::mesh::TriMesh;
use crate::scalar::Real;

use super::element::TriangleGeometry;

/// Taylor-Hood degree-of-freedom layout.
///
/// Scalar P2 nodes are the mesh vertices followed by the edge midpoints.
/// Velocity dofs are component-blocked: all x-components, then all
/// y-components. Pressure (P1) dofs coincide with vertex indices.
#[derive(Clone, Debug)]
pub struct DofMap<T> {
    n_vertices: usize,
    n_edges: usize,
    node_coords: Vec<[T; 2]>,
    triangle_nodes: Vec<[usize; 6]>,
    geometry: Vec<TriangleGeometry<T>>,
}

impl<T: Real> DofMap<T> {
    pub fn new(mesh: &TriMesh<T>) -> Self {
        let n_vertices = mesh.n_vertices();
        let mut node_coords = mesh.vertices().to_vec();
        let half = T::lit(0.5);
        node_coords.extend(mesh.edges().iter().map(|&[a, b]| {
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            [(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]
        }));
        let triangle_nodes = (0..mesh.n_triangles())
            .map(|t| {
                let [a, b, c] = mesh.triangles()[t];
                let [e0, e1, e2] = mesh.triangle_edges(t);
                [a, b, c, n_vertices + e0, n_vertices + e1, n_vertices + e2]
            })
            .collect();
        let geometry = mesh
            .triangles()
            .iter()
            .map(|tri| TriangleGeometry::new(tri.map(|v| mesh.vertices()[v])))
            .collect();
        Self { n_vertices, n_edges: mesh.n_edges(), node_coords, triangle_nodes, geometry }
    }

    /// Scalar P2 nodes per velocity component.
    pub fn n_scalar(&self) -> usize {
        self.n_vertices + self.n_edges
    }

    pub fn n_velocity(&self) -> usize {
        2 * self.n_scalar()
    }

    pub fn n_pressure(&self) -> usize {
        self.n_vertices
    }

    pub fn n_triangles(&self) -> usize {
        self.triangle_nodes.len()
    }

    pub fn velocity_dof(&self, component: usize, node: usize) -> usize {
        component * self.n_scalar() + node
    }

    /// Scalar node of the midpoint of mesh edge `edge`.
    pub fn edge_node(&self, edge: usize) -> usize {
        self.n_vertices + edge
    }

    pub fn node_coords(&self) -> &[[T; 2]] {
        &self.node_coords
    }

    /// Scalar P2 nodes of triangle `t` (vertices, then edge midpoints).
    pub fn triangle_nodes(&self, t: usize) -> [usize; 6] {
        self.triangle_nodes[t]
    }

    /// Pressure nodes of triangle `t`.
    pub fn triangle_pressure_nodes(&self, t: usize) -> [usize; 3] {
        let n = self.triangle_nodes[t];
        [n[0], n[1], n[2]]
    }

    pub fn geometry(&self, t: usize) -> &TriangleGeometry<T> {
        &self.geometry[t]
    }
}
