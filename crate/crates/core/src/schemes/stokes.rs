use super::{Operators, State};
use crate::fespace::assemble_load;
use crate::linalg::{gmres, CsrMatrix, Ilu0, Preconditioner, SolverError, SolverOptions, SolverReport};
use crate::problems::{InitialCondition, ProblemDef};
use crate::scalar::Real;

/// Block upper-triangular preconditioner for the bordered, scaled Stokes
/// system with unknowns `(u, p, μ)`: ILU(0) for the viscous block, the
/// lumped pressure mass `s²Mp/ν` for the pressure Schur complement, and
/// `−ν|Ω|` for the Schur complement of the mean multiplier `μ`.
struct StokesPreconditioner<'a, T> {
    viscous: Ilu0<T>,
    divergence_t: &'a CsrMatrix<T>,
    /// Lumped pressure mass; scaled by `s` it is the mean-constraint row.
    lumped: &'a [T],
    nu: T,
    area: T,
    /// Constraint scaling `s`.
    scale: T,
    nv: usize,
}

impl<T: Real> Preconditioner<T> for StokesPreconditioner<'_, T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        let (nv, np, s) = (self.nv, self.lumped.len(), self.scale);
        let mu = -r[nv + np] / (self.nu * self.area);
        z[nv + np] = mu;
        for (i, zi) in z[nv..nv + np].iter_mut().enumerate() {
            *zi = self.nu * (r[nv + i] - s * self.lumped[i] * mu) / (s * s * self.lumped[i]);
        }
        let mut ru = self.divergence_t.mul_vec(&z[nv..nv + np]);
        for (a, &b) in ru.iter_mut().zip(&r[..nv]) {
            *a = s * *a + b;
        }
        self.viscous.apply(&ru, &mut z[..nv]);
    }
}

/// Steady Stokes problem `νA u − Bᵀp = F(0)`, `B u = 0` with the problem's
/// Dirichlet data at `t = 0`. `ν` is the viscosity requested by a
/// [`InitialCondition::StokesSolve`] initial condition, else the problem's.
/// The pressure mean is fixed to zero by a Lagrange multiplier bordering the
/// saddle-point system, which keeps it as well conditioned as the
/// underlying Stokes operator.
pub fn solve_steady_stokes<T: Real>(
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
    opts: &SolverOptions,
) -> Result<(State<T>, SolverReport), SolverError> {
    let nu = match problem.initial {
        InitialCondition::StokesSolve { viscosity: Some(v) } => v,
        _ => problem.nu(),
    };
    let nv = ops.n_velocity();
    let mut a = ops.stiffness.clone();
    a.scale(nu);
    let mut ru = assemble_load(&ops.dofmap, &problem.force, T::zero());
    let bc = ops.boundary_values(problem, T::zero());
    ops.apply_dirichlet(&mut a, &mut ru, &bc);

    let np = ops.n_pressure();
    let ones = vec![T::one(); np];
    let lumped = ops.pressure_mass.mul_vec(&ones);
    let area: T = lumped.iter().copied().sum();
    // Scale the constraint rows and the pressure columns by ‖νA‖_F / ‖B‖_F
    // so that both blocks carry comparable weight in the residual norm; this
    // keeps the error of the iterate close to its residual.
    let frobenius = |m: &CsrMatrix<T>| m.values().iter().map(|&v| v * v).sum::<T>().sqrt();
    let scale = frobenius(&a) / frobenius(&ops.divergence);
    let mut upper = Vec::new();
    for i in 0..nv {
        let (cols, vals) = ops.divergence_t_interior.row(i);
        upper.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, -v * scale)));
    }
    let mut lower = Vec::new();
    for i in 0..np {
        let (cols, vals) = ops.divergence.row(i);
        lower.extend(cols.iter().zip(vals).map(|(&j, &v)| (i, j, v * scale)));
    }
    let corner: Vec<(usize, usize, T)> =
        lumped.iter().enumerate().flat_map(|(i, &m)| [(i, np, scale * m), (np, i, scale * m)]).collect();
    let system = CsrMatrix::block_2x2(
        &a,
        Some(&CsrMatrix::from_triplets(nv, np + 1, &upper)),
        Some(&CsrMatrix::from_triplets(np + 1, nv, &lower)),
        Some(&CsrMatrix::from_triplets(np + 1, np + 1, &corner)),
    );

    let viscous = Ilu0::new(&a).map_err(|e| SolverError::InvalidArgument(e.to_string()))?;
    let pc = StokesPreconditioner {
        viscous,
        divergence_t: &ops.divergence_t_interior,
        lumped: &lumped,
        nu,
        area,
        scale,
        nv,
    };

    let mut rhs = ru;
    rhs.resize(nv + np + 1, T::zero());
    let (x, report) = gmres(&system, &pc, &rhs, opts)?;
    let mut lambda: Vec<T> = x[nv..nv + np].iter().map(|&v| v * scale).collect();
    ops.subtract_pressure_mean(&mut lambda);
    Ok((State::new(x[..nv].to_vec(), lambda, T::zero()), report))
}
