use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::fespace::{
    assemble_convection_into, assemble_divergence, assemble_graddiv, assemble_pressure_mass, assemble_stiffness,
    assemble_velocity_mass, project_pressure, velocity_pattern, DofMap,
};
use crate::linalg::{CsrMatrix, EnvelopeCholesky, LinalgError, SolverError, SolverOptions};
use crate::mesh::BoundaryTag;
use crate::problems::ProblemDef;
use crate::scalar::Real;

/// Time-independent matrices and boundary bookkeeping for one problem.
///
/// Velocity-velocity matrices (`mass`, `stiffness`, `graddiv`) share one
/// sparsity pattern, so their linear combinations are cheap value passes.
pub struct Operators<T> {
    pub dofmap: DofMap<T>,
    pub mass: CsrMatrix<T>,
    pub stiffness: CsrMatrix<T>,
    pub graddiv: CsrMatrix<T>,
    /// `B`: pressure rows, velocity columns.
    pub divergence: CsrMatrix<T>,
    /// `Bᵀ` with the rows of Dirichlet velocity dofs zeroed.
    pub divergence_t_interior: CsrMatrix<T>,
    pub pressure_mass: CsrMatrix<T>,
    pattern: CsrMatrix<T>,
    /// Boundary scalar nodes with the tag whose datum they take.
    boundary_nodes: Vec<(usize, BoundaryTag)>,
    boundary_dofs: Vec<usize>,
    pressure_area: T,
    pressure_ones_mass: Vec<T>,
    /// Recently used factorizations of the symmetric velocity operator,
    /// keyed by the bit patterns of its coefficients.
    factors: Mutex<Vec<([u64; 3], Arc<EnvelopeCholesky<T>>)>>,
}

/// Number of symmetric factorizations kept per operator set.
const FACTOR_CACHE_LEN: usize = 4;

impl<T: Real> Operators<T> {
    pub fn new(problem: &ProblemDef<T>) -> Self {
        let mesh = &problem.mesh;
        let dofmap = DofMap::new(mesh);
        // A node shared by edges of different tags takes the smallest tag.
        let mut nodes: BTreeMap<usize, BoundaryTag> = BTreeMap::new();
        for (be, &edge) in mesh.boundary_edges().iter().zip(mesh.boundary_edge_ids()) {
            for s in [be.vertices[0], be.vertices[1], dofmap.edge_node(edge)] {
                nodes.entry(s).and_modify(|t| *t = (*t).min(be.tag)).or_insert(be.tag);
            }
        }
        let boundary_nodes: Vec<(usize, BoundaryTag)> = nodes.into_iter().collect();
        let n = dofmap.n_scalar();
        let mut boundary_dofs: Vec<usize> = boundary_nodes.iter().map(|&(s, _)| s).collect();
        boundary_dofs.extend(boundary_nodes.iter().map(|&(s, _)| s + n));

        let divergence = assemble_divergence(&dofmap);
        let mut divergence_t_interior = divergence.transpose();
        for &i in &boundary_dofs {
            let (start, end) = (divergence_t_interior.row_offsets()[i], divergence_t_interior.row_offsets()[i + 1]);
            divergence_t_interior.values_mut()[start..end].iter_mut().for_each(|v| *v = T::zero());
        }
        let pressure_mass = assemble_pressure_mass(&dofmap);
        let pressure_ones_mass = pressure_mass.mul_vec(&vec![T::one(); dofmap.n_pressure()]);
        let pressure_area = pressure_ones_mass.iter().copied().sum();
        Self {
            mass: assemble_velocity_mass(&dofmap),
            stiffness: assemble_stiffness(&dofmap),
            graddiv: assemble_graddiv(&dofmap),
            pattern: velocity_pattern(&dofmap),
            divergence,
            divergence_t_interior,
            pressure_mass,
            boundary_nodes,
            boundary_dofs,
            pressure_area,
            pressure_ones_mass,
            dofmap,
            factors: Mutex::new(Vec::new()),
        }
    }

    pub fn n_velocity(&self) -> usize {
        self.dofmap.n_velocity()
    }

    pub fn n_pressure(&self) -> usize {
        self.dofmap.n_pressure()
    }

    /// Velocity dofs carrying Dirichlet data, ascending.
    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    /// Skew-symmetrized convection matrix `N(w)` on the shared pattern.
    pub fn convection(&self, w: &[T]) -> CsrMatrix<T> {
        let mut n = self.pattern.clone();
        assemble_convection_into(&mut n, &self.dofmap, w);
        n
    }

    /// Dirichlet values at time `t`, aligned with [`Self::boundary_dofs`].
    pub fn boundary_values(&self, problem: &ProblemDef<T>, t: T) -> Vec<T> {
        let coords = self.dofmap.node_coords();
        let bc = problem.dirichlet();
        let values: Vec<[T; 2]> = self.boundary_nodes.iter().map(|&(s, tag)| bc[&tag](coords[s], t)).collect();
        values.iter().map(|v| v[0]).chain(values.iter().map(|v| v[1])).collect()
    }

    /// Replaces Dirichlet rows of `mat` by identity rows and the matching
    /// right-hand-side entries by `values`.
    pub fn apply_dirichlet(&self, mat: &mut CsrMatrix<T>, rhs: &mut [T], values: &[T]) {
        mat.set_identity_rows(&self.boundary_dofs);
        self.set_boundary(rhs, values);
    }

    /// Overwrites the Dirichlet entries of a velocity vector.
    pub fn set_boundary(&self, v: &mut [T], values: &[T]) {
        for (&i, &g) in self.boundary_dofs.iter().zip(values) {
            v[i] = g;
        }
    }

    /// `Π_Q(∇·w)`.
    pub fn project_divergence(&self, w: &[T], opts: &SolverOptions) -> Result<Vec<T>, SolverError> {
        project_pressure(&self.pressure_mass, &self.divergence.mul_vec(w), opts)
    }

    /// `Mp⁻¹ r` for a pressure-space right-hand side.
    pub fn solve_pressure_mass(&self, r: &[T], opts: &SolverOptions) -> Result<Vec<T>, SolverError> {
        project_pressure(&self.pressure_mass, r, opts)
    }

    /// `(λ, 1) / |Ω|`.
    pub fn pressure_mean(&self, lambda: &[T]) -> T {
        crate::scalar::dot(&self.pressure_ones_mass, lambda) / self.pressure_area
    }

    /// Removes the mean of a pressure vector in place.
    pub fn subtract_pressure_mean(&self, lambda: &mut [T]) {
        let mean = self.pressure_mean(lambda);
        lambda.iter_mut().for_each(|v| *v -= mean);
    }

    /// Cholesky factor of `m·M + a·A + g·G` with identity rows and columns on
    /// the Dirichlet dofs: the symmetric part of every velocity system, used
    /// to precondition it. Factorizations are cached, so repeated steps with
    /// fixed coefficients pay for one.
    pub fn symmetric_factor(&self, m: T, a: T, g: T) -> Result<Arc<EnvelopeCholesky<T>>, LinalgError> {
        let key = [m, a, g].map(|c| c.to_f64_lossy().to_bits());
        if let Some((_, f)) = self.lock_factors().iter().find(|(k, _)| *k == key) {
            return Ok(Arc::clone(f));
        }
        let mut s = CsrMatrix::linear_combination(&[(m, &self.mass), (a, &self.stiffness), (g, &self.graddiv)]);
        let mut fixed = vec![false; s.nrows()];
        self.boundary_dofs.iter().for_each(|&i| fixed[i] = true);
        for i in 0..s.nrows() {
            let (start, end) = (s.row_offsets()[i], s.row_offsets()[i + 1]);
            for idx in start..end {
                let j = s.col_indices()[idx];
                if (fixed[i] || fixed[j]) && i != j {
                    s.values_mut()[idx] = T::zero();
                } else if fixed[i] {
                    s.values_mut()[idx] = T::one();
                }
            }
        }
        let factor = Arc::new(EnvelopeCholesky::new(&s)?);
        let mut cache = self.lock_factors();
        if cache.len() >= FACTOR_CACHE_LEN {
            cache.remove(0);
        }
        cache.push((key, Arc::clone(&factor)));
        Ok(factor)
    }

    fn lock_factors(&self) -> std::sync::MutexGuard<'_, Vec<([u64; 3], Arc<EnvelopeCholesky<T>>)>> {
        self.factors.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}
