//! Preconditioners for the Krylov solvers.

use crate::scalar::Real;

use super::{CsrMatrix, LinalgError, Preconditioner};

/// No-op preconditioner.
pub struct IdentityPreconditioner;

impl<T: Real> Preconditioner<T> for IdentityPreconditioner {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal scaling. Zero diagonal entries are treated as one.
pub struct Jacobi<T> {
    inv_diag: Vec<T>,
}

impl<T: Real> Jacobi<T> {
    pub fn new(a: &CsrMatrix<T>) -> Self {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .map(|d| if d == T::zero() || !d.is_finite() { T::one() } else { T::one() / d })
            .collect();
        Self { inv_diag }
    }
}

impl<T: Real> Preconditioner<T> for Jacobi<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for ((zi, &ri), &d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

/// Incomplete LU factorization with zero fill-in.
///
/// `L` (unit diagonal) is stored strictly below the diagonal and `U` on and
/// above it, both on the sparsity pattern of the input matrix.
pub struct Ilu0<T> {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    lu: Vec<T>,
    diag: Vec<usize>,
}

impl<T: Real> Ilu0<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(LinalgError::DimensionMismatch { expected: n, found: a.ncols() });
        }
        let row_offsets = a.row_offsets().to_vec();
        let col_indices = a.col_indices().to_vec();
        let mut lu = a.values().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            diag[i] = a.position(i, i).ok_or(LinalgError::ZeroPivot(i))?;
        }

        // work[j] = storage position of (i, j) in the current row, or MAX
        let mut work = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_offsets[i], row_offsets[i + 1]);
            for k in start..end {
                work[col_indices[k]] = k;
            }
            for k in start..end {
                let col = col_indices[k];
                if col >= i {
                    break;
                }
                let pivot = lu[diag[col]];
                let factor = lu[k] / pivot;
                lu[k] = factor;
                for kk in (diag[col] + 1)..row_offsets[col + 1] {
                    let pos = work[col_indices[kk]];
                    if pos != usize::MAX {
                        let update = factor * lu[kk];
                        lu[pos] -= update;
                    }
                }
            }
            for k in start..end {
                work[col_indices[k]] = usize::MAX;
            }
            let d = lu[diag[i]];
            if d == T::zero() || !d.is_finite() {
                return Err(LinalgError::ZeroPivot(i));
            }
        }
        Ok(Self { row_offsets, col_indices, lu, diag })
    }
}

impl<T: Real> Preconditioner<T> for Ilu0<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut acc = r[i];
            for k in self.row_offsets[i]..self.diag[i] {
                acc -= self.lu[k] * z[self.col_indices[k]];
            }
            z[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = z[i];
            for k in (self.diag[i] + 1)..self.row_offsets[i + 1] {
                acc -= self.lu[k] * z[self.col_indices[k]];
            }
            z[i] = acc / self.lu[self.diag[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ilu0_is_exact_for_tridiagonal() {
        // no fill-in for tridiagonal matrices, so ILU(0) = LU
        let a = CsrMatrix::<f64>::from_dense(&[
            vec![4.0, -1.0, 0.0],
            vec![-1.0, 4.0, -1.0],
            vec![0.0, -1.0, 4.0],
        ]);
        let ilu = Ilu0::new(&a).unwrap();
        let x = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let mut z = [0.0; 3];
        ilu.apply(&b, &mut z);
        for (zi, xi) in z.iter().zip(&x) {
            assert!((zi - xi).abs() < 1e-14);
        }
    }

    #[test]
    fn ilu0_reports_zero_pivot() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        // the (1,1) entry is not stored at all
        assert!(matches!(Ilu0::new(&a), Err(LinalgError::ZeroPivot(1))));
        let b = CsrMatrix::try_from_csr(2, 2, vec![0, 1, 2], vec![0, 1], vec![1.0, 0.0]).unwrap();
        assert!(matches!(Ilu0::new(&b), Err(LinalgError::ZeroPivot(1))));
    }

    #[test]
    fn jacobi_guards_zero_diagonal() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 0.0]]);
        let mut z = [0.0; 2];
        Jacobi::new(&a).apply(&[4.0, 3.0], &mut z);
        assert_eq!(z, [2.0, 3.0]);
    }
}
