//! Conforming triangulations with tagged boundary edges.
//!
//! Boundary tag convention for the structured generators:
//!
//! | tag | rectangle | channel with step            |
//! |-----|-----------|------------------------------|
//! | 1   | bottom    | bottom wall and step surface |
//! | 2   | right     | outflow `x = 40`             |
//! | 3   | top       | top wall                     |
//! | 4   | left      | inflow `x = 0`               |
//!
//! Imported meshes carry the physical tags of their line elements.

mod gmsh;

use std::collections::{BTreeSet, HashMap};

use crate::fespace::DofMap;
use crate::scalar::Real;

pub use gmsh::{parse_gmsh, write_gmsh};

pub type BoundaryTag = u32;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("line {line}: {section}: {message}")]
    Parse { line: usize, section: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Triangulated 2D domain. Immutable once constructed.
#[derive(Clone, Debug)]
pub struct TriMesh<T> {
    vertices: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    edges: Vec<[usize; 2]>,
    edge_lookup: HashMap<[usize; 2], usize>,
    triangle_edges: Vec<[usize; 3]>,
    boundary_edge_ids: Vec<usize>,
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b { [a, b] } else { [b, a] }
}

/// Local edges of a triangle: (0,1), (1,2), (2,0).
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

impl<T: Real> TriMesh<T> {
    /// Validates and indexes a triangulation.
    ///
    /// Triangles must be counter-clockwise with strictly positive area; every
    /// edge with a single adjacent triangle must appear exactly once in
    /// `boundary_edges`, and tags must form `1..=max`.
    pub fn new(
        vertices: Vec<[T; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Invalid("mesh has no triangles".into()));
        }
        let nv = vertices.len();
        let mut edges = Vec::new();
        let mut edge_lookup = HashMap::new();
        let mut edge_count: Vec<u8> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(MeshError::Invalid(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Invalid(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(&vertices, tri);
            if !(area > T::zero()) {
                return Err(MeshError::Invalid(format!(
                    "triangle {t} has non-positive signed area {area:e}"
                )));
            }
            let mut local = [0usize; 3];
            for (k, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let key = edge_key(tri[*a], tri[*b]);
                let id = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_count.push(0);
                    edges.len() - 1
                });
                edge_count[id] += 1;
                if edge_count[id] > 2 {
                    return Err(MeshError::Invalid(format!(
                        "edge {key:?} shared by more than two triangles"
                    )));
                }
                local[k] = id;
            }
            triangle_edges.push(local);
        }

        let mut boundary_edge_ids = Vec::with_capacity(boundary_edges.len());
        let mut seen = vec![false; edges.len()];
        for be in &boundary_edges {
            let key = edge_key(be.vertices[0], be.vertices[1]);
            let id = *edge_lookup.get(&key).ok_or_else(|| {
                MeshError::Invalid(format!("boundary edge {key:?} is not a triangle edge"))
            })?;
            if edge_count[id] != 1 {
                return Err(MeshError::Invalid(format!(
                    "boundary edge {key:?} is shared by {} triangles",
                    edge_count[id]
                )));
            }
            if std::mem::replace(&mut seen[id], true) {
                return Err(MeshError::Invalid(format!("boundary edge {key:?} listed twice")));
            }
            if be.tag == 0 {
                return Err(MeshError::Invalid(format!("boundary edge {key:?} has tag 0")));
            }
            boundary_edge_ids.push(id);
        }
        if let Some(id) = (0..edges.len()).find(|&e| edge_count[e] == 1 && !seen[e]) {
            return Err(MeshError::Invalid(format!("boundary edge {:?} is untagged", edges[id])));
        }
        let tags: BTreeSet<BoundaryTag> = boundary_edges.iter().map(|b| b.tag).collect();
        if let Some(&max) = tags.last() {
            if tags.len() != max as usize {
                return Err(MeshError::Invalid(format!(
                    "boundary tags {tags:?} are not contiguous from 1"
                )));
            }
        }

        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            edges,
            edge_lookup,
            triangle_edges,
            boundary_edge_ids,
        })
    }

    /// Builds a mesh whose boundary edges are found topologically and tagged by
    /// `tagger(a, b)` on their endpoint coordinates. Vertices not referenced by
    /// any triangle are dropped.
    pub fn with_boundary_tagger(
        vertices: Vec<[T; 2]>,
        triangles: Vec<[usize; 3]>,
        tagger: impl Fn([T; 2], [T; 2]) -> BoundaryTag,
    ) -> Result<Self, MeshError> {
        let (vertices, triangles) = compact(vertices, triangles);
        let mut count: HashMap<[usize; 2], (usize, [usize; 2])> = HashMap::new();
        let mut order = Vec::new();
        for tri in &triangles {
            for [a, b] in LOCAL_EDGES {
                let key = edge_key(tri[a], tri[b]);
                let entry = count.entry(key).or_insert_with(|| {
                    order.push(key);
                    (0, [tri[a], tri[b]])
                });
                entry.0 += 1;
            }
        }
        let boundary_edges = order
            .iter()
            .filter_map(|key| {
                let (n, oriented) = count[key];
                (n == 1).then(|| BoundaryEdge {
                    vertices: oriented,
                    tag: tagger(vertices[oriented[0]], vertices[oriented[1]]),
                })
            })
            .collect();
        Self::new(vertices, triangles, boundary_edges)
    }

    pub fn vertices(&self) -> &[[T; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Canonical `(min, max)` vertex pairs, one per mesh edge.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Edge index of the (unordered) vertex pair.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_lookup.get(&edge_key(a, b)).copied()
    }

    /// Edge indices of triangle `t` in [`LOCAL_EDGES`] order.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// Edge index of each entry of [`Self::boundary_edges`].
    pub fn boundary_edge_ids(&self) -> &[usize] {
        &self.boundary_edge_ids
    }

    pub fn triangle_area(&self, t: usize) -> T {
        signed_area(&self.vertices, &self.triangles[t])
    }

    pub fn total_area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Sorted distinct boundary tags.
    pub fn tags(&self) -> Vec<BoundaryTag> {
        let set: BTreeSet<_> = self.boundary_edges.iter().map(|b| b.tag).collect();
        set.into_iter().collect()
    }

    /// Number of triangles adjacent to each edge.
    pub fn edge_triangle_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.edges.len()];
        for local in &self.triangle_edges {
            for &e in local {
                counts[e] += 1;
            }
        }
        counts
    }
}

fn signed_area<T: Real>(vertices: &[[T; 2]], tri: &[usize; 3]) -> T {
    let [a, b, c] = tri.map(|i| vertices[i]);
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * T::lit(0.5)
}

/// Drops unreferenced vertices, renumbering in first-use order of the original indices.
fn compact<T: Real>(vertices: Vec<[T; 2]>, triangles: Vec<[usize; 3]>) -> (Vec<[T; 2]>, Vec<[usize; 3]>) {
    let mut used = vec![false; vertices.len()];
    for tri in &triangles {
        for &v in tri {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::new();
    for (i, v) in vertices.into_iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(v);
        }
    }
    let triangles = triangles.into_iter().map(|t| t.map(|v| remap[v])).collect();
    (kept, triangles)
}

fn check_interval<T: Real>(name: &str, range: (T, T)) -> Result<(), MeshError> {
    if !(range.1 > range.0) || !range.0.is_finite() || !range.1.is_finite() {
        return Err(MeshError::InvalidArgument(format!(
            "{name} range [{}, {}] is empty or degenerate",
            range.0, range.1
        )));
    }
    Ok(())
}

/// Structured grid vertices and triangles, each cell split along its
/// lower-left to upper-right diagonal. `keep_cell(i, j)` filters cells.
fn structured_triangles<T: Real>(
    x_range: (T, T),
    y_range: (T, T),
    nx: usize,
    ny: usize,
    keep_cell: impl Fn(usize, usize) -> bool,
) -> (Vec<[T; 2]>, Vec<[usize; 3]>) {
    let hx = (x_range.1 - x_range.0) / T::lit(nx as f64);
    let hy = (y_range.1 - y_range.0) / T::lit(ny as f64);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // pin the far edges exactly to the interval end points
            let x = if i == nx { x_range.1 } else { x_range.0 + hx * T::lit(i as f64) };
            let y = if j == ny { y_range.1 } else { y_range.0 + hy * T::lit(j as f64) };
            vertices.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            if !keep_cell(i, j) {
                continue;
            }
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    (vertices, triangles)
}

/// Rectangle tagged 1 = bottom, 2 = right, 3 = top, 4 = left.
pub fn generate_rect_mesh<T: Real>(
    x_range: (T, T),
    y_range: (T, T),
    nx: usize,
    ny: usize,
) -> Result<TriMesh<T>, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidArgument("nx and ny must be at least 1".into()));
    }
    check_interval("x", x_range)?;
    check_interval("y", y_range)?;
    let (vertices, triangles) = structured_triangles(x_range, y_range, nx, ny, |_, _| true);
    TriMesh::with_boundary_tagger(vertices, triangles, |a, b| {
        if a[1] == y_range.0 && b[1] == y_range.0 {
            1
        } else if a[0] == x_range.1 && b[0] == x_range.1 {
            2
        } else if a[1] == y_range.1 && b[1] == y_range.1 {
            3
        } else {
            4
        }
    })
}

/// Unit square `[0,1]²` with `n × n` cells.
pub fn unit_square<T: Real>(n: usize) -> Result<TriMesh<T>, MeshError> {
    generate_rect_mesh((T::zero(), T::one()), (T::zero(), T::one()), n, n)
}

/// Placement of the rectangular obstacle on the lower channel wall.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepGeometry {
    pub x0: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for StepGeometry {
    fn default() -> Self {
        Self { x0: 5.0, width: 1.0, height: 1.0 }
    }
}

pub const CHANNEL_LENGTH: f64 = 40.0;
pub const CHANNEL_HEIGHT: f64 = 10.0;

/// `[0,40]×[0,10]` channel with the default step removed from the lower wall.
pub fn generate_channel_step_mesh<T: Real>(nx: usize, ny: usize) -> Result<TriMesh<T>, MeshError> {
    generate_channel_step_mesh_with(nx, ny, StepGeometry::default())
}

pub fn generate_channel_step_mesh_with<T: Real>(
    nx: usize,
    ny: usize,
    step: StepGeometry,
) -> Result<TriMesh<T>, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidArgument("nx and ny must be at least 1".into()));
    }
    let hx = CHANNEL_LENGTH / nx as f64;
    let hy = CHANNEL_HEIGHT / ny as f64;
    let cells = |len: f64, h: f64| {
        let c = len / h;
        ((c - c.round()).abs() < 1e-9).then(|| c.round() as usize)
    };
    let (Some(i0), Some(iw), Some(jh)) = (cells(step.x0, hx), cells(step.width, hx), cells(step.height, hy))
    else {
        return Err(MeshError::InvalidArgument(format!(
            "step [{}, {}]x[0, {}] does not align with a {nx}x{ny} grid",
            step.x0,
            step.x0 + step.width,
            step.height
        )));
    };
    if iw == 0 || jh == 0 || i0 == 0 || i0 + iw >= nx || jh >= ny {
        return Err(MeshError::InvalidArgument("step must lie strictly inside the channel".into()));
    }
    let in_step = |i: usize, j: usize| i >= i0 && i < i0 + iw && j < jh;
    let (vertices, triangles) = structured_triangles(
        (T::zero(), T::lit(CHANNEL_LENGTH)),
        (T::zero(), T::lit(CHANNEL_HEIGHT)),
        nx,
        ny,
        |i, j| !in_step(i, j),
    );
    let (x_end, y_top) = (T::lit(CHANNEL_LENGTH), T::lit(CHANNEL_HEIGHT));
    TriMesh::with_boundary_tagger(vertices, triangles, |a, b| {
        if a[0] == T::zero() && b[0] == T::zero() {
            4
        } else if a[0] == x_end && b[0] == x_end {
            2
        } else if a[1] == y_top && b[1] == y_top {
            3
        } else {
            1
        }
    })
}

/// Velocity dof indices (both components, vertex and midpoint nodes) on edges
/// carrying any of `tags`, in ascending order.
pub fn boundary_dofs<T: Real>(
    mesh: &TriMesh<T>,
    dofmap: &DofMap<T>,
    tags: &[BoundaryTag],
) -> Result<Vec<usize>, MeshError> {
    if tags.is_empty() {
        return Err(MeshError::InvalidArgument("tag set is empty".into()));
    }
    let present = mesh.tags();
    if let Some(t) = tags.iter().find(|t| !present.contains(t)) {
        return Err(MeshError::InvalidArgument(format!("unknown boundary tag {t}")));
    }
    let mut nodes = BTreeSet::new();
    for (be, &edge) in mesh.boundary_edges().iter().zip(mesh.boundary_edge_ids()) {
        if tags.contains(&be.tag) {
            nodes.insert(be.vertices[0]);
            nodes.insert(be.vertices[1]);
            nodes.insert(dofmap.edge_node(edge));
        }
    }
    let n = dofmap.n_scalar();
    let mut dofs: Vec<usize> = nodes.iter().copied().collect();
    dofs.extend(nodes.iter().map(|&s| s + n));
    Ok(dofs)
}
