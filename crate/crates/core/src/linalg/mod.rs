//! Sparse storage, Krylov solvers and the discrete-Laplacian eigenvalue
//! estimate behind the overdamping criterion.

mod csr;
mod eigen;
mod envelope;
mod krylov;
mod precond;

use std::fmt;

use crate::scalar::Real;

pub use csr::CsrMatrix;
pub use eigen::{
    check_overdamping, smallest_laplacian_eigenvalue, DampingVerdict, EigenBoundary, EigenEstimate,
    OverdampingCheck,
};
pub use envelope::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use krylov::{conjugate_gradient, gmres};
pub use precond::{IdentityPreconditioner, Ilu0, Jacobi};

/// Square linear map `y = A x`.
pub trait LinearOperator<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

/// Approximate inverse `z ≈ P⁻¹ r`.
pub trait Preconditioner<T> {
    fn apply(&self, r: &[T], z: &mut [T]);
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    /// Iteration cap; `None` means `10·n`.
    pub max_iter: Option<usize>,
    /// GMRES restart length.
    pub restart: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None, restart: 50 }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Outcome of one iterative solve. `converged` holds iff the final relative
/// residual met the requested tolerance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

impl fmt::Display for SolverReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, relative residual {:.3e}",
            self.iterations, self.relative_residual
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LinalgError {
    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero pivot in row {0}")]
    ZeroPivot(usize),
    #[error("matrix is not positive definite (pivot at row {0})")]
    NotPositiveDefinite(usize),
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("iterative solve did not converge ({0})")]
    NotConverged(SolverReport),
    #[error("iterative solve broke down ({0})")]
    Breakdown(SolverReport),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("eigenvalue iteration stagnated after {iterations} steps (last relative change {last_change:.3e})")]
    EigenStagnation { iterations: usize, last_change: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl SolverError {
    pub fn report(&self) -> Option<&SolverReport> {
        match self {
            Self::NotConverged(r) | Self::Breakdown(r) => Some(r),
            _ => None,
        }
    }
}

/// ILU(0) when the factorization succeeds, Jacobi otherwise.
pub fn default_preconditioner<T: Real>(a: &CsrMatrix<T>) -> Box<dyn Preconditioner<T>> {
    match Ilu0::new(a) {
        Ok(ilu) => Box::new(ilu),
        Err(_) => Box::new(Jacobi::new(a)),
    }
}

/// Solves a general square sparse system with ILU(0)-preconditioned GMRES.
pub fn solve_nonsymmetric<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    opts: &SolverOptions,
) -> Result<(Vec<T>, SolverReport), SolverError> {
    if a.nrows() != a.ncols() {
        return Err(SolverError::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    let pc = default_preconditioner(a);
    gmres(a, pc.as_ref(), b, opts)
}

/// Solves a symmetric positive definite system with Jacobi-preconditioned CG.
pub fn solve_spd<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    opts: &SolverOptions,
) -> Result<(Vec<T>, SolverReport), SolverError> {
    if a.nrows() != a.ncols() {
        return Err(SolverError::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    conjugate_gradient(a, &Jacobi::new(a), b, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solves_in_one_iteration() {
        let a = CsrMatrix::<f64>::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, report) = solve_nonsymmetric(&a, &b, &SolverOptions::default()).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() < 1e-14);
        }
        let (x, _) = solve_spd(&a, &b, &SolverOptions::default()).unwrap();
        assert_eq!(x, b.to_vec());
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = CsrMatrix::<f64>::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let opts = SolverOptions::default();
        let (x, report) = solve_nonsymmetric(&a, &[1.0, 2.0], &opts).unwrap();
        assert!(report.converged && report.relative_residual <= opts.tol);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-10);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-10);
        let (x, _) = solve_spd(&a, &[1.0, 2.0], &opts).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-10);
    }

    #[test]
    fn diagonal_spd() {
        let a = CsrMatrix::<f64>::from_dense(&[vec![2.0, 0.0], vec![0.0, 5.0]]);
        let (x, _) = solve_spd(&a, &[2.0, 10.0], &SolverOptions::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_system_reports_failure() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let err = solve_nonsymmetric(&a, &[1.0, 1.0], &SolverOptions::default()).unwrap_err();
        let report = err.report().expect("failure carries a report");
        assert!(!report.converged);
        assert!(report.relative_residual > 1e-10);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = CsrMatrix::<f64>::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let (x, report) = solve_nonsymmetric(&a, &[0.0, 0.0], &SolverOptions::default()).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn single_precision_solve() {
        let a = CsrMatrix::from_dense(&[vec![4.0f32, 1.0], vec![1.0, 3.0]]);
        let (x, _) = solve_nonsymmetric(&a, &[1.0, 2.0], &SolverOptions::with_tol(1e-5)).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-5);
    }
}
