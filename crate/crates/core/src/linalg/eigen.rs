//! Smallest eigenvalue of the discrete pressure-space Laplacian and the
//! acoustic overdamping test `α/β < √σ_min`.

use crate::fespace::{assemble_pressure_mass, assemble_pressure_stiffness, DofMap};
use crate::mesh::TriMesh;
use crate::scalar::{dot, Real};

use super::{conjugate_gradient, CsrMatrix, Jacobi, SolverError, SolverOptions};

/// Boundary treatment for the eigenproblem `K c = σ Mp c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenBoundary {
    /// Natural boundary, constant mode removed (smallest nonzero eigenvalue).
    NeumannZeroMean,
    /// Boundary vertices eliminated.
    Dirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenEstimate<T> {
    pub value: T,
    pub iterations: usize,
}

const MAX_OUTER: usize = 2000;

fn submatrix<T: Real>(a: &CsrMatrix<T>, keep: &[usize]) -> CsrMatrix<T> {
    let mut map = vec![usize::MAX; a.nrows()];
    for (new, &old) in keep.iter().enumerate() {
        map[old] = new;
    }
    let mut triplets = Vec::new();
    for (new_i, &i) in keep.iter().enumerate() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if map[j] != usize::MAX {
                triplets.push((new_i, map[j], v));
            }
        }
    }
    CsrMatrix::from_triplets(keep.len(), keep.len(), &triplets)
}

/// Inverse power iteration for the smallest (nonzero) generalized eigenvalue
/// of the P1 Laplacian against the consistent P1 mass matrix.
pub fn smallest_laplacian_eigenvalue<T: Real>(
    mesh: &TriMesh<T>,
    dofmap: &DofMap<T>,
    bc: EigenBoundary,
    rel_tol: f64,
) -> Result<EigenEstimate<T>, SolverError> {
    let mut k = assemble_pressure_stiffness(dofmap);
    let mut mp = assemble_pressure_mass(dofmap);
    if bc == EigenBoundary::Dirichlet {
        let mut on_boundary = vec![false; dofmap.n_pressure()];
        for be in mesh.boundary_edges() {
            on_boundary[be.vertices[0]] = true;
            on_boundary[be.vertices[1]] = true;
        }
        let interior: Vec<usize> = (0..on_boundary.len()).filter(|&i| !on_boundary[i]).collect();
        if interior.is_empty() {
            return Err(SolverError::InvalidArgument("mesh has no interior vertices".into()));
        }
        k = submatrix(&k, &interior);
        mp = submatrix(&mp, &interior);
    }
    let n = k.nrows();
    let neumann = bc == EigenBoundary::NeumannZeroMean;
    let ones = vec![T::one(); n];
    let mp_ones = mp.mul_vec(&ones);
    let total_mass = dot(&ones, &mp_ones);

    let remove_mean = |x: &mut [T]| {
        let c = dot(x, &mp_ones) / total_mass;
        x.iter_mut().for_each(|v| *v -= c);
    };
    let normalize = |x: &mut [T]| {
        let s = mp.quadratic_form(x).sqrt();
        x.iter_mut().for_each(|v| *v /= s);
    };

    // deterministic start with content in every low mode
    let mut x: Vec<T> = (0..n).map(|i| T::lit(((i * 7919) % 101) as f64 / 101.0 - 0.5 + 1e-3 * i as f64)).collect();
    if neumann {
        remove_mean(&mut x);
    }
    normalize(&mut x);

    let inner = SolverOptions { tol: 1e-12, max_iter: Some(20 * n.max(10)), restart: 50 };
    let pc = Jacobi::new(&k);
    let tol = T::lit(rel_tol);
    let mut sigma = k.quadratic_form(&x);
    let mut last_change = f64::INFINITY;
    for iteration in 1..=MAX_OUTER {
        let mut y = mp.mul_vec(&x);
        if neumann {
            // make the right-hand side consistent with the constant null space
            let mean = y.iter().copied().sum::<T>() / T::lit(n as f64);
            y.iter_mut().for_each(|v| *v -= mean);
        }
        let (mut z, _) = conjugate_gradient(&k, &pc, &y, &inner)?;
        if neumann {
            remove_mean(&mut z);
        }
        normalize(&mut z);
        let next = k.quadratic_form(&z);
        let change = ((next - sigma) / next).abs();
        last_change = change.to_f64_lossy();
        sigma = next;
        x = z;
        if change <= tol {
            return Ok(EigenEstimate { value: sigma, iterations: iteration });
        }
    }
    Err(SolverError::EigenStagnation { iterations: MAX_OUTER, last_change })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DampingVerdict {
    Overdamped,
    NotOverdamped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverdampingCheck<T> {
    pub verdict: DampingVerdict,
    pub ratio: T,
    /// `√σ_min − α/β`; positive exactly when overdamped.
    pub margin: T,
}

/// Overdamped iff `α/β < √σ_min` (strict).
pub fn check_overdamping<T: Real>(alpha: T, beta: T, sigma_min: T) -> Result<OverdampingCheck<T>, SolverError> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("sigma_min", sigma_min)] {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(SolverError::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    let ratio = alpha / beta;
    let root = sigma_min.sqrt();
    let verdict = if ratio < root { DampingVerdict::Overdamped } else { DampingVerdict::NotOverdamped };
    Ok(OverdampingCheck { verdict, ratio, margin: root - ratio })
}
