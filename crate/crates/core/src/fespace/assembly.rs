//! Global operator assembly. All loops run over triangles in mesh order, so
//! identical inputs produce bitwise-identical matrices.

use crate::linalg::{CsrMatrix, SolverError, SolverOptions};
use crate::scalar::Real;

use super::element::{p2_gradients, p2_values, TriangleGeometry};
use super::fields::VectorFieldFn;
use super::{DofMap, QuadratureRule};

fn sorted(mut rows: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for row in &mut rows {
        row.sort_unstable();
        row.dedup();
    }
    rows
}

/// Scalar-node adjacency: nodes sharing a triangle.
fn scalar_neighbours<T: Real>(dofmap: &DofMap<T>) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); dofmap.n_scalar()];
    for t in 0..dofmap.n_triangles() {
        let nodes = dofmap.triangle_nodes(t);
        for &i in &nodes {
            rows[i].extend_from_slice(&nodes);
        }
    }
    sorted(rows)
}

/// Full 2×2-block pattern shared by every velocity-velocity operator.
pub fn velocity_pattern<T: Real>(dofmap: &DofMap<T>) -> CsrMatrix<T> {
    let n = dofmap.n_scalar();
    let scalar = scalar_neighbours(dofmap);
    let mut rows = Vec::with_capacity(2 * n);
    for _ in 0..2 {
        for nb in &scalar {
            let mut row = nb.clone();
            row.extend(nb.iter().map(|&j| j + n));
            rows.push(row);
        }
    }
    CsrMatrix::from_pattern(2 * n, &rows)
}

fn pressure_pattern<T: Real>(dofmap: &DofMap<T>) -> CsrMatrix<T> {
    let mut rows = vec![Vec::new(); dofmap.n_pressure()];
    for t in 0..dofmap.n_triangles() {
        let nodes = dofmap.triangle_pressure_nodes(t);
        for &i in &nodes {
            rows[i].extend_from_slice(&nodes);
        }
    }
    CsrMatrix::from_pattern(dofmap.n_pressure(), &sorted(rows))
}

fn divergence_pattern<T: Real>(dofmap: &DofMap<T>) -> CsrMatrix<T> {
    let n = dofmap.n_scalar();
    let mut rows = vec![Vec::new(); dofmap.n_pressure()];
    for t in 0..dofmap.n_triangles() {
        let nodes = dofmap.triangle_nodes(t);
        for &q in &dofmap.triangle_pressure_nodes(t) {
            rows[q].extend_from_slice(&nodes);
            rows[q].extend(nodes.iter().map(|&j| j + n));
        }
    }
    CsrMatrix::from_pattern(2 * n, &sorted(rows))
}

/// Reference-element tables evaluated at the quadrature points.
struct Tables<T> {
    rule: QuadratureRule<T>,
    p2: Vec<[T; 6]>,
}

impl<T: Real> Tables<T> {
    fn new() -> Self {
        let rule = QuadratureRule::degree5();
        let p2 = rule.points.iter().map(|&l| p2_values(l)).collect();
        Self { rule, p2 }
    }

    /// Physical weight `2|T|·wq`.
    fn weight(&self, geo: &TriangleGeometry<T>, q: usize) -> T {
        T::lit(2.0) * geo.area * self.rule.weights[q]
    }
}

/// Adds the same local 6×6 scalar block to both velocity components.
fn add_diagonal_blocks<T: Real>(mat: &mut CsrMatrix<T>, nodes: &[usize; 6], n: usize, local: &[[T; 6]; 6]) {
    for c in 0..2 {
        for (i, &ni) in nodes.iter().enumerate() {
            for (j, &nj) in nodes.iter().enumerate() {
                mat.add_at(ni + c * n, nj + c * n, local[i][j]);
            }
        }
    }
}

/// Velocity mass matrix `M_ij = ∫ φᵢ·φⱼ`.
pub fn assemble_velocity_mass<T: Real>(dofmap: &DofMap<T>) -> CsrMatrix<T> {
    let tables = Tables::new();
    let mut mat = velocity_pattern(dofmap);
    let n = dofmap.n_scalar();
    for t in 0..dofmap.n_triangles() {
        let geo = dofmap.geometry(t);
        let mut local = [[T::zero(); 6]; 6];
        for (q, phi) in tables.p2.iter().enumerate() {
            let w = tables.weight(geo, q);
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += w * phi[i] * phi[j];
                }
            }
        }
        add_diagonal_blocks(&mut mat, &dofmap.triangle_nodes(t), n, &local);
    }
    mat
}

/// Vector Laplacian `A_ij = ∫ ∇φᵢ : ∇φⱼ` (no viscosity factor).
pub fn assemble_stiffness<T: Real>(dofmap: &DofMap<T>) -> CsrMatrix<T> {
    let tables = Tables::new();
    let mut mat = velocity_pattern(dofmap);
    let n = dofmap.n_scalar();
    for t in 0..dofmap.n_triangles() {
        let geo = dofmap.geometry(t);
        let mut local = [[T::zero(); 6]; 6];
        for (q, &l) in tables.rule.points.iter().enumerate() {
            let w = tables.weight(geo, q);
            let g = p2_gradients(l, &geo.grad_bary);
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        add_diagonal_blocks(&mut mat, &dofmap.triangle_nodes(t), n, &local);
    }
    mat
}

/// Divergence operator `B_qv = ∫ ψ_q ∇·φ_v`, rows = pressure, cols = velocity.
pub fn assemble_divergence<T: Real>(dofmap: &DofMap<T>) -> CsrMatrix<T> {
    let tables = Tables::new();
    let mut mat = divergence_pattern(dofmap);
    let n = dofmap.n_scalar();
    for t in 0..dofmap.n_triangles() {
        let geo = dofmap.geometry(t);
        let nodes = dofmap.triangle_nodes(t);
        let pnodes = dofmap.triangle_pressure_nodes(t);
        let mut local = [[[T::zero(); 6]; 2]; 3];
        for (q, &l) in tables.rule.points.iter().enumerate() {
            let w = tables.weight(geo, q);
            let g = p2_gradients(l, &geo.grad_bary);
            for a in 0..3 {
                for c in 0..2 {
                    for j in 0..6 {
                        local[a][c][j] += w * l[a] * g[j][c];
                    }
                }
            }
        }
        for (a, &pa) in pnodes.iter().enumerate() {
            for c in 0..2 {
                for (j, &nj) in nodes.iter().enumerate() {
                    mat.add_at(pa, nj + c * n, local[a][c][j]);
                }
            }
        }
    }
    mat
}

/// Grad-div matrix `G_uv = ∫ (∇·φ_u)(∇·φ_v)`.
pub fn assemble_graddiv<T: Real>(dofmap: &DofMap<T>) -> CsrMatrix<T> {
    let tables = Tables::new();
    let mut mat = velocity_pattern(dofmap);
    let n = dofmap.n_scalar();
    for t in 0..dofmap.n_triangles() {
        let geo = dofmap.geometry(t);
        let nodes = dofmap.triangle_nodes(t);
        let mut local = [[[[T::zero(); 6]; 2]; 6]; 2];
        for (q, &l) in tables.rule.points.iter().enumerate() {
            let w = tables.weight(geo, q);
            let g = p2_gradients(l, &geo.grad_bary);
            for c in 0..2 {
                for i in 0..6 {
                    for d in 0..2 {
                        for j in 0..6 {
                            local[c][i][d][j] += w * g[i][c] * g[j][d];
                        }
                    }
                }
            }
        }
        for c in 0..2 {
            for (i, &ni) in nodes.iter().enumerate() {
                for d in 0..2 {
                    for (j, &nj) in nodes.iter().enumerate() {
                        mat.add_at(ni + c * n, nj + d * n, local[c][i][d][j]);
                    }
                }
            }
        }
    }
    mat
}

fn assemble_p1<T: Real>(dofmap: &DofMap<T>, stiffness: bool) -> CsrMatrix<T> {
    let mut mat = pressure_pattern(dofmap);
    for t in 0..dofmap.n_triangles() {
        let geo = dofmap.geometry(t);
        let nodes = dofmap.triangle_pressure_nodes(t);
        for (a, &na) in nodes.iter().enumerate() {
            for (b, &nb) in nodes.iter().enumerate() {
                let v = if stiffness {
                    let (ga, gb) = (geo.grad_bary[a], geo.grad_bary[b]);
                    geo.area * (ga[0] * gb[0] + ga[1] * gb[1])
                } else if a == b {
                    geo.area / T::lit(6.0)
                } else {
                    geo.area / T::lit(12.0)
                };
                mat.add_at(na, nb, v);
            }
        }
    }
    mat
}

/// Consistent P1 mass matrix `Mp_ab = ∫ ψ_a ψ_b`.
pub fn assemble_pressure_mass<T: Real>(dofmap: &DofMap<T>) -> CsrMatrix<T> {
    assemble_p1(dofmap, false)
}

/// Scalar P1 Laplacian `K_ab = ∫ ∇ψ_a·∇ψ_b` on the pressure space.
pub fn assemble_pressure_stiffness<T: Real>(dofmap: &DofMap<T>) -> CsrMatrix<T> {
    assemble_p1(dofmap, true)
}

/// Skew-symmetrized convection `N(w)_vu = ∫ (w·∇φ_u)·φ_v + ½ (∇·w) φ_u·φ_v`.
pub fn assemble_convection<T: Real>(dofmap: &DofMap<T>, w: &[T]) -> CsrMatrix<T> {
    let mut mat = velocity_pattern(dofmap);
    assemble_convection_into(&mut mat, dofmap, w);
    mat
}

/// [`assemble_convection`] into an existing matrix on the velocity pattern.
pub fn assemble_convection_into<T: Real>(mat: &mut CsrMatrix<T>, dofmap: &DofMap<T>, w: &[T]) {
    assert_eq!(w.len(), dofmap.n_velocity(), "transport field has wrong length");
    mat.values_mut().iter_mut().for_each(|v| *v = T::zero());
    let tables = Tables::new();
    let n = dofmap.n_scalar();
    let half = T::lit(0.5);
    for t in 0..dofmap.n_triangles() {
        let geo = dofmap.geometry(t);
        let nodes = dofmap.triangle_nodes(t);
        let wx: [T; 6] = nodes.map(|s| w[s]);
        let wy: [T; 6] = nodes.map(|s| w[s + n]);
        let mut local = [[T::zero(); 6]; 6];
        for (q, &l) in tables.rule.points.iter().enumerate() {
            let weight = tables.weight(geo, q);
            let phi = &tables.p2[q];
            let g = p2_gradients(l, &geo.grad_bary);
            let (mut ux, mut uy, mut div) = (T::zero(), T::zero(), T::zero());
            for k in 0..6 {
                ux += wx[k] * phi[k];
                uy += wy[k] * phi[k];
                div += wx[k] * g[k][0] + wy[k] * g[k][1];
            }
            for i in 0..6 {
                for j in 0..6 {
                    let transport = ux * g[j][0] + uy * g[j][1];
                    local[i][j] += weight * (transport * phi[i] + half * div * phi[j] * phi[i]);
                }
            }
        }
        add_diagonal_blocks(mat, &nodes, n, &local);
    }
}

/// Load vector `F_v = ∫ f(·, t)·φ_v`.
pub fn assemble_load<T: Real>(dofmap: &DofMap<T>, f: &VectorFieldFn<T>, t: T) -> Vec<T> {
    let tables = Tables::new();
    let n = dofmap.n_scalar();
    let mut out = vec![T::zero(); 2 * n];
    for tri in 0..dofmap.n_triangles() {
        let geo = dofmap.geometry(tri);
        let nodes = dofmap.triangle_nodes(tri);
        for (q, &l) in tables.rule.points.iter().enumerate() {
            let w = tables.weight(geo, q);
            let [fx, fy] = f(geo.point(l), t);
            for (i, &ni) in nodes.iter().enumerate() {
                out[ni] += w * fx * tables.p2[q][i];
                out[ni + n] += w * fy * tables.p2[q][i];
            }
        }
    }
    out
}

/// L² projection onto the pressure space: solves `Mp c = rhs`, where
/// `rhs_i = (r, ψ_i)`. With `rhs = B w` this yields `Π_Q(∇·w)`.
pub fn project_pressure<T: Real>(
    mp: &CsrMatrix<T>,
    rhs: &[T],
    opts: &SolverOptions,
) -> Result<Vec<T>, SolverError> {
    crate::linalg::solve_spd(mp, rhs, opts).map(|(c, _)| c)
}

/// Evaluates the P2 velocity field on triangle `t` at barycentric point `l`.
pub fn eval_velocity<T: Real>(dofmap: &DofMap<T>, w: &[T], t: usize, l: [T; 3]) -> [T; 2] {
    let n = dofmap.n_scalar();
    let phi = p2_values(l);
    let mut u = [T::zero(); 2];
    for (k, &s) in dofmap.triangle_nodes(t).iter().enumerate() {
        u[0] += w[s] * phi[k];
        u[1] += w[s + n] * phi[k];
    }
    u
}

/// Divergence of the P2 velocity field on triangle `t` at barycentric point `l`.
pub fn eval_divergence<T: Real>(dofmap: &DofMap<T>, w: &[T], t: usize, l: [T; 3]) -> T {
    let n = dofmap.n_scalar();
    let g = p2_gradients(l, &dofmap.geometry(t).grad_bary);
    dofmap
        .triangle_nodes(t)
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, &s)| acc + w[s] * g[k][0] + w[s + n] * g[k][1])
}

/// Evaluates the P1 pressure field on triangle `t` at barycentric point `l`.
pub fn eval_pressure<T: Real>(dofmap: &DofMap<T>, p: &[T], t: usize, l: [T; 3]) -> T {
    dofmap.triangle_pressure_nodes(t).iter().zip(l).fold(T::zero(), |acc, (&a, la)| acc + p[a] * la)
}

/// `∫_Ω g` by the degree-5 rule, with `g(triangle, barycentric, point)`.
pub fn integrate<T: Real>(dofmap: &DofMap<T>, g: impl Fn(usize, [T; 3], [T; 2]) -> T) -> T {
    let rule = QuadratureRule::<T>::degree5();
    let mut total = T::zero();
    for t in 0..dofmap.n_triangles() {
        let geo = dofmap.geometry(t);
        for (&l, &w) in rule.points.iter().zip(&rule.weights) {
            total += T::lit(2.0) * geo.area * w * g(t, l, geo.point(l));
        }
    }
    total
}
