//! Restarted GMRES and preconditioned conjugate gradients.
//!
//! Both solvers start from the zero vector, measure convergence by the true
//! relative residual `‖b − Ax‖ / ‖b‖`, and return an explicit error carrying
//! the report when the tolerance is not met.

use crate::scalar::{axpy, dot, norm2, Real};

use super::{LinearOperator, Preconditioner, SolverError, SolverOptions, SolverReport};

fn residual<T: Real>(op: &dyn LinearOperator<T>, b: &[T], x: &[T], r: &mut [T]) -> T {
    op.apply(x, r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(r)
}

fn trivial_rhs<T: Real>(n: usize) -> (Vec<T>, SolverReport) {
    (vec![T::zero(); n], SolverReport { iterations: 0, relative_residual: 0.0, converged: true })
}

/// Right-preconditioned restarted GMRES with modified Gram-Schmidt.
pub fn gmres<T: Real>(
    op: &dyn LinearOperator<T>,
    pc: &dyn Preconditioner<T>,
    b: &[T],
    opts: &SolverOptions,
) -> Result<(Vec<T>, SolverReport), SolverError> {
    let n = op.dim();
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { expected: n, found: b.len() });
    }
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        return Ok(trivial_rhs(n));
    }
    let tol = T::lit(opts.tol);
    let max_iter = opts.max_iter.unwrap_or(10 * n).max(1);
    let m = opts.restart.clamp(1, n.max(1));

    let mut x = vec![T::zero(); n];
    let mut r = vec![T::zero(); n];
    let mut beta = residual(op, b, &x, &mut r);
    let mut iterations = 0usize;

    let mut basis: Vec<Vec<T>> = vec![vec![T::zero(); n]; m + 1];
    let mut precond: Vec<Vec<T>> = vec![vec![T::zero(); n]; m];
    let mut h = vec![vec![T::zero(); m]; m + 1];
    let mut cs = vec![T::zero(); m];
    let mut sn = vec![T::zero(); m];
    let mut g = vec![T::zero(); m + 1];
    let mut w = vec![T::zero(); n];

    loop {
        let rel = beta / bnorm;
        let report = SolverReport {
            iterations,
            relative_residual: rel.to_f64_lossy(),
            converged: rel <= tol,
        };
        if report.converged {
            return Ok((x, report));
        }
        if iterations >= max_iter || !rel.is_finite() {
            return Err(SolverError::NotConverged(report));
        }

        for (vi, &ri) in basis[0].iter_mut().zip(&r) {
            *vi = ri / beta;
        }
        g.iter_mut().for_each(|v| *v = T::zero());
        g[0] = beta;
        let mut cols = 0;
        for j in 0..m {
            iterations += 1;
            cols = j + 1;
            pc.apply(&basis[j], &mut precond[j]);
            op.apply(&precond[j], &mut w);
            for i in 0..=j {
                let hij = dot(&w, &basis[i]);
                h[i][j] = hij;
                axpy(-hij, &basis[i], &mut w);
            }
            let hnext = norm2(&w);
            h[j + 1][j] = hnext;
            for i in 0..j {
                let (a, bb) = (h[i][j], h[i + 1][j]);
                h[i][j] = cs[i] * a + sn[i] * bb;
                h[i + 1][j] = -sn[i] * a + cs[i] * bb;
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let denom = a.hypot(bb);
            if denom == T::zero() {
                cs[j] = T::one();
                sn[j] = T::zero();
            } else {
                cs[j] = a / denom;
                sn[j] = bb / denom;
            }
            h[j][j] = cs[j] * a + sn[j] * bb;
            h[j + 1][j] = T::zero();
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];

            let breakdown = hnext <= T::epsilon() * beta;
            if breakdown || g[j + 1].abs() / bnorm <= tol || iterations >= max_iter {
                break;
            }
            for (vi, &wi) in basis[j + 1].iter_mut().zip(&w) {
                *vi = wi / hnext;
            }
        }

        // back substitution on the rotated Hessenberg system
        let mut y = vec![T::zero(); cols];
        for i in (0..cols).rev() {
            let mut acc = g[i];
            for k in (i + 1)..cols {
                acc -= h[i][k] * y[k];
            }
            y[i] = if h[i][i] == T::zero() { T::zero() } else { acc / h[i][i] };
        }
        for (k, &yk) in y.iter().enumerate() {
            axpy(yk, &precond[k], &mut x);
        }
        let new_beta = residual(op, b, &x, &mut r);
        if !(new_beta < beta * (T::one() - T::lit(1e-12))) && new_beta / bnorm > tol {
            // a full cycle made no progress: restarting would repeat it
            let report = SolverReport {
                iterations,
                relative_residual: (new_beta / bnorm).to_f64_lossy(),
                converged: false,
            };
            return Err(SolverError::NotConverged(report));
        }
        beta = new_beta;
    }
}

/// Preconditioned conjugate gradients for symmetric positive (semi)definite operators.
pub fn conjugate_gradient<T: Real>(
    op: &dyn LinearOperator<T>,
    pc: &dyn Preconditioner<T>,
    b: &[T],
    opts: &SolverOptions,
) -> Result<(Vec<T>, SolverReport), SolverError> {
    let n = op.dim();
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { expected: n, found: b.len() });
    }
    let bnorm = norm2(b);
    if bnorm == T::zero() {
        return Ok(trivial_rhs(n));
    }
    let tol = T::lit(opts.tol);
    let max_iter = opts.max_iter.unwrap_or(10 * n).max(1);

    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z = vec![T::zero(); n];
    pc.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let mut restarts = 0;

    loop {
        let rel = norm2(&r) / bnorm;
        if rel <= tol || iterations >= max_iter || !rel.is_finite() {
            // confirm against the true residual before reporting success
            let true_rel = residual(op, b, &x, &mut ap) / bnorm;
            let report = SolverReport {
                iterations,
                relative_residual: true_rel.to_f64_lossy(),
                converged: true_rel <= tol,
            };
            if report.converged {
                return Ok((x, report));
            }
            if iterations >= max_iter || !rel.is_finite() || restarts >= 3 {
                return Err(SolverError::NotConverged(report));
            }
            // recursive residual drifted from the true one: restart from it
            restarts += 1;
            r.copy_from_slice(&ap);
            pc.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        iterations += 1;
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            let report =
                SolverReport { iterations, relative_residual: rel.to_f64_lossy(), converged: false };
            return Err(SolverError::Breakdown(report));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        pc.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
}
