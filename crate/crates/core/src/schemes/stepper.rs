use std::cell::RefCell;
use std::sync::Arc;

use super::{apply_time_filter, Method, Operators, Relaxation, SchemeConfig, SchemeError, State, StepDiagnostics};
use crate::diagnostics::{div_norm, l2_norm};
use crate::fespace::assemble_load;
use crate::linalg::{
    default_preconditioner, gmres, solve_nonsymmetric, CsrMatrix, EnvelopeCholesky, LinearOperator, Preconditioner,
    SolverError, SolverOptions, SolverReport,
};
use crate::problems::ProblemDef;
use crate::scalar::{axpy, dot, Real};

type StepResult<T> = Result<(State<T>, StepDiagnostics<T>), SchemeError>;

/// Advances one step with the method selected in `config`, including the
/// time filter for the filtered variants (skipped on the first step, which
/// has no earlier level).
pub fn step<T: Real>(state: &State<T>, config: &SchemeConfig<T>, problem: &ProblemDef<T>, ops: &Operators<T>) -> StepResult<T> {
    let (mut next, mut diag) = match config.method {
        Method::HybridBeCoupled => step_hybrid_be_coupled(state, config, problem, ops)?,
        Method::HybridBeDecoupledProj => step_hybrid_be_decoupled_proj(state, config, problem, ops)?,
        Method::HybridBeDecoupled | Method::HybridBeFiltered => step_hybrid_be_decoupled(state, config, problem, ops)?,
        Method::HybridTrapezoidal => step_hybrid_trapezoidal(state, config, problem, ops)?,
        Method::PpBe | Method::PpBeFiltered => step_pp_be(state, config, problem, ops)?,
        Method::AcBe | Method::AcBeFiltered => step_ac_be(state, config, problem, ops)?,
        Method::PpTrapezoidal => step_pp_trapezoidal(state, config, problem, ops)?,
        Method::AcTrapezoidal => step_ac_trapezoidal(state, config, problem, ops)?,
    };
    if config.method.time_discretization() == super::TimeDiscretization::FilteredBackwardEuler {
        if let (Some(wp), Some(lp)) = (&state.w_prev, &state.lambda_prev) {
            next.w = apply_time_filter(wp, &state.w, &next.w, config.mu);
            next.lambda = apply_time_filter(lp, &state.lambda, &next.lambda, config.mu);
            let step = next.step;
            let energy = diag.energy_identity_residual;
            let mut reports = std::mem::take(&mut diag.solver_reports);
            diag = measure(ops, config, &next.w, &next.lambda).map_err(SchemeError::at(step))?;
            reports.append(&mut diag.solver_reports);
            diag.solver_reports = reports;
            diag.energy_identity_residual = energy;
        }
    }
    Ok((next, diag))
}

fn time_next<T: Real>(state: &State<T>, config: &SchemeConfig<T>) -> T {
    state.t + config.dt
}

fn bc_time<T: Real>(config: &SchemeConfig<T>, t: T) -> T {
    if config.bc_time_frozen {
        T::zero()
    } else {
        t
    }
}

fn effective_beta<T: Real>(config: &SchemeConfig<T>) -> T {
    match config.method.relaxation() {
        Relaxation::ArtificialCompression => T::zero(),
        _ => config.beta,
    }
}

/// Norms and the modified-pressure energy at one level.
pub(super) fn measure<T: Real>(
    ops: &Operators<T>,
    config: &SchemeConfig<T>,
    w: &[T],
    lambda: &[T],
) -> Result<StepDiagnostics<T>, SolverError> {
    let (d, report) = crate::linalg::solve_spd(&ops.pressure_mass, &ops.divergence.mul_vec(w), &config.inner)?;
    let norm_w = l2_norm(w, &ops.mass);
    let two_beta = T::lit(2.0) * effective_beta(config);
    let modified: Vec<T> = lambda.iter().zip(&d).map(|(&l, &di)| l + two_beta * di).collect();
    let stability_energy = norm_w * norm_w + ops.pressure_mass.quadratic_form(&modified) / config.alpha2;
    Ok(StepDiagnostics {
        energy_identity_residual: T::zero(),
        solver_reports: vec![report],
        norm_w,
        norm_grad_w: l2_norm(w, &ops.stiffness),
        norm_div_w: div_norm(w, &ops.dofmap),
        norm_lambda: l2_norm(lambda, &ops.pressure_mass),
        stability_energy,
        projected_div: d,
    })
}

/// Relative residual of the discrete energy balance of one hybrid
/// backward-Euler step (exact for homogeneous Dirichlet data):
///
/// `½‖w₁‖² − ½‖w₀‖² + ½‖w₁−w₀‖² + (1/2α²)(‖Λ₁‖² − ‖Λ₀‖² + ‖Λ₁−Λ₀‖²)
///  + 2βk‖d₁‖² + kν‖∇w₁‖² − k(f, w₁)`
///
/// with `dᵢ = Π_Q ∇·wᵢ` and `Λᵢ = λᵢ + 2β dᵢ`, divided by the largest term.
#[allow(clippy::too_many_arguments)]
pub fn energy_identity_residual<T: Real>(
    ops: &Operators<T>,
    config: &SchemeConfig<T>,
    w0: &[T],
    lambda0: &[T],
    d0: &[T],
    w1: &[T],
    lambda1: &[T],
    d1: &[T],
    load: &[T],
) -> T {
    let half = T::lit(0.5);
    let k = config.dt;
    let two_beta = T::lit(2.0) * effective_beta(config);
    let m = |v: &[T]| ops.mass.quadratic_form(v);
    let mp = |v: &[T]| ops.pressure_mass.quadratic_form(v);
    let diff = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x - y).collect::<Vec<T>>();
    let modified = |l: &[T], d: &[T]| l.iter().zip(d).map(|(&x, &y)| x + two_beta * y).collect::<Vec<T>>();
    let (cap0, cap1) = (modified(lambda0, d0), modified(lambda1, d1));
    let inv = half / config.alpha2;
    let terms = [
        half * m(w1),
        -half * m(w0),
        half * m(&diff(w1, w0)),
        inv * mp(&cap1),
        -inv * mp(&cap0),
        inv * mp(&diff(&cap1, &cap0)),
        k * two_beta * mp(d1),
        k * config.nu * ops.stiffness.quadratic_form(w1),
        -k * dot(load, w1),
    ];
    let sum: T = terms.iter().copied().sum();
    let scale = terms.iter().fold(T::zero(), |acc, t| acc.max(t.abs()));
    if scale == T::zero() {
        T::zero()
    } else {
        sum.abs() / scale
    }
}

/// Gauge, measure, and assemble the new state.
#[allow(clippy::too_many_arguments)]
fn finish<T: Real>(
    state: &State<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
    w1: Vec<T>,
    mut lambda1: Vec<T>,
    mut reports: Vec<SolverReport>,
    load: &[T],
) -> StepResult<T> {
    let step = state.step + 1;
    if problem.pressure_gauge {
        ops.subtract_pressure_mean(&mut lambda1);
    }
    let at = SchemeError::at(step);
    let mut diag = measure(ops, config, &w1, &lambda1).map_err(at)?;
    let (d0, r0) = crate::linalg::solve_spd(&ops.pressure_mass, &ops.divergence.mul_vec(&state.w), &config.inner)
        .map_err(SchemeError::at(step))?;
    diag.energy_identity_residual =
        energy_identity_residual(ops, config, &state.w, &state.lambda, &d0, &w1, &lambda1, &diag.projected_div, load);
    reports.append(&mut diag.solver_reports);
    reports.push(r0);
    diag.solver_reports = reports;
    let next = State {
        w: w1,
        lambda: lambda1,
        w_prev: Some(state.w.clone()),
        lambda_prev: Some(state.lambda.clone()),
        t: time_next(state, config),
        step,
    };
    Ok((next, diag))
}

/// Coefficients `(m, a, g)` of the symmetric part `m·M + a·A + g·G` of a
/// velocity system.
type SymmetricPart<T> = (T, T, T);

/// Preconditioner for a velocity system: the Cholesky factor of its
/// symmetric part, or ILU(0) of `mat` should that factorization fail.
fn velocity_preconditioner<T: Real>(
    ops: &Operators<T>,
    mat: &CsrMatrix<T>,
    sym: SymmetricPart<T>,
) -> Box<dyn Preconditioner<T>> {
    match ops.symmetric_factor(sym.0, sym.1, sym.2) {
        Ok(f) => Box::new(SharedFactor(f)),
        Err(_) => default_preconditioner(mat),
    }
}

struct SharedFactor<T>(Arc<EnvelopeCholesky<T>>);

impl<T: Real> Preconditioner<T> for SharedFactor<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        self.0.apply(r, z);
    }
}

/// Replaces Dirichlet rows and solves `mat · x = rhs` with GMRES,
/// preconditioned by the symmetric part `sym` of `mat`.
fn solve_velocity<T: Real>(
    ops: &Operators<T>,
    mut mat: CsrMatrix<T>,
    mut rhs: Vec<T>,
    bc: &[T],
    sym: SymmetricPart<T>,
    opts: &SolverOptions,
) -> Result<(Vec<T>, SolverReport), SolverError> {
    ops.apply_dirichlet(&mut mat, &mut rhs, bc);
    let pc = velocity_preconditioner(ops, &mat, sym);
    gmres(&mat, pc.as_ref(), &rhs, opts)
}

/// `Mp⁻¹ r`, keeping the solver report.
fn pressure_solve<T: Real>(
    ops: &Operators<T>,
    r: &[T],
    config: &SchemeConfig<T>,
    reports: &mut Vec<SolverReport>,
) -> Result<Vec<T>, SolverError> {
    let (x, rep) = crate::linalg::solve_spd(&ops.pressure_mass, r, &config.inner)?;
    reports.push(rep);
    Ok(x)
}

fn scaled<T: Real>(c: T, v: &[T]) -> Vec<T> {
    v.iter().map(|&x| c * x).collect()
}

/// Backward-Euler velocity system `M/k + N(wₙ) + νA + c·G` without boundary rows.
pub(super) fn be_matrix<T: Real>(ops: &Operators<T>, config: &SchemeConfig<T>, w: &[T], graddiv: T) -> CsrMatrix<T> {
    let n = ops.convection(w);
    let inv_k = T::one() / config.dt;
    if graddiv == T::zero() {
        CsrMatrix::linear_combination(&[(inv_k, &ops.mass), (T::one(), &n), (config.nu, &ops.stiffness)])
    } else {
        CsrMatrix::linear_combination(&[
            (inv_k, &ops.mass),
            (T::one(), &n),
            (config.nu, &ops.stiffness),
            (graddiv, &ops.graddiv),
        ])
    }
}

/// `M wₙ/k + F(t_{n+1})`.
fn be_rhs<T: Real>(ops: &Operators<T>, config: &SchemeConfig<T>, problem: &ProblemDef<T>, state: &State<T>) -> (Vec<T>, Vec<T>) {
    let load = assemble_load(&ops.dofmap, &problem.force, time_next(state, config));
    let mut rhs = scaled(T::one() / config.dt, &ops.mass.mul_vec(&state.w));
    axpy(T::one(), &load, &mut rhs);
    (rhs, load)
}

/// Hybrid decoupled backward Euler with the plain grad-div matrix:
///
/// `[M/k + N(wₙ) + νA + (kα²+2β)G] w_{n+1} = M wₙ/k + F + Bᵀλₙ + 2β G wₙ`,
/// `Mp λ_{n+1} = Mp λₙ − (kα²+2β) B w_{n+1} + 2β B wₙ`.
///
/// With `β = 0` this is exactly [`step_ac_be`].
pub fn step_hybrid_be_decoupled<T: Real>(
    state: &State<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
) -> StepResult<T> {
    let at = SchemeError::at(state.step + 1);
    let k = config.dt;
    let two_beta = T::lit(2.0) * effective_beta(config);
    let c = k * config.alpha2 + two_beta;
    let mat = be_matrix(ops, config, &state.w, c);
    let (mut rhs, load) = be_rhs(ops, config, problem, state);
    axpy(T::one(), &ops.divergence.mul_vec_transpose(&state.lambda), &mut rhs);
    if two_beta != T::zero() {
        axpy(two_beta, &ops.graddiv.mul_vec(&state.w), &mut rhs);
    }
    let bc = ops.boundary_values(problem, bc_time(config, time_next(state, config)));
    let sym = (T::one() / k, config.nu, c);
    let (w1, rep) = solve_velocity(ops, mat, rhs, &bc, sym, &config.solver).map_err(at)?;
    let mut reports = vec![rep];

    let mut r = ops.pressure_mass.mul_vec(&state.lambda);
    axpy(-c, &ops.divergence.mul_vec(&w1), &mut r);
    if two_beta != T::zero() {
        axpy(two_beta, &ops.divergence.mul_vec(&state.w), &mut r);
    }
    let lambda1 = pressure_solve(ops, &r, config, &mut reports).map_err(at)?;
    finish(state, config, problem, ops, w1, lambda1, reports, &load)
}

/// Artificial compression backward Euler:
/// `[M/k + N(wₙ) + νA + kα²G] w_{n+1} = M wₙ/k + F + Bᵀλₙ`,
/// `Mp λ_{n+1} = Mp λₙ − kα² B w_{n+1}`.
pub fn step_ac_be<T: Real>(
    state: &State<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
) -> StepResult<T> {
    let ac = SchemeConfig { beta: T::zero(), ..config.clone() };
    step_hybrid_be_decoupled(state, &ac, problem, ops)
}

/// Penalty backward Euler:
/// `[M/k + N(wₙ) + νA + 2βG] w_{n+1} = M wₙ/k + F`, `λ_{n+1} = −2β Π_Q ∇·w_{n+1}`.
pub fn step_pp_be<T: Real>(
    state: &State<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
) -> StepResult<T> {
    let at = SchemeError::at(state.step + 1);
    let two_beta = T::lit(2.0) * config.beta;
    let mat = be_matrix(ops, config, &state.w, two_beta);
    let (rhs, load) = be_rhs(ops, config, problem, state);
    let bc = ops.boundary_values(problem, bc_time(config, time_next(state, config)));
    let sym = (T::one() / config.dt, config.nu, two_beta);
    let (w1, rep) = solve_velocity(ops, mat, rhs, &bc, sym, &config.solver).map_err(at)?;
    let mut reports = vec![rep];
    let r = scaled(-two_beta, &ops.divergence.mul_vec(&w1));
    let lambda1 = pressure_solve(ops, &r, config, &mut reports).map_err(at)?;
    finish(state, config, problem, ops, w1, lambda1, reports, &load)
}

/// Hybrid coupled backward Euler: the monolithic system
///
/// ```text
/// [ M/k + N(wₙ) + νA        −Bᵀ  ] [w_{n+1}]   [ M wₙ/k + F            ]
/// [ (2β/k + α²) B          Mp/k  ] [λ_{n+1}] = [ Mp λₙ/k + (2β/k) B wₙ ]
/// ```
///
/// with Dirichlet rows replaced in the momentum block.
pub fn step_hybrid_be_coupled<T: Real>(
    state: &State<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
) -> StepResult<T> {
    let at = SchemeError::at(state.step + 1);
    let k = config.dt;
    let inv_k = T::one() / k;
    let two_beta = T::lit(2.0) * config.beta;
    let mut a = be_matrix(ops, config, &state.w, T::zero());
    let (mut ru, load) = be_rhs(ops, config, problem, state);
    let bc = ops.boundary_values(problem, bc_time(config, time_next(state, config)));
    ops.apply_dirichlet(&mut a, &mut ru, &bc);

    let mut upper = ops.divergence_t_interior.clone();
    upper.scale(-T::one());
    let mut lower = ops.divergence.clone();
    lower.scale(two_beta * inv_k + config.alpha2);
    let mut corner = ops.pressure_mass.clone();
    corner.scale(inv_k);
    let system = CsrMatrix::block_2x2(&a, Some(&upper), Some(&lower), Some(&corner));

    let mut rp = scaled(inv_k, &ops.pressure_mass.mul_vec(&state.lambda));
    axpy(two_beta * inv_k, &ops.divergence.mul_vec(&state.w), &mut rp);
    let nv = ops.n_velocity();
    let mut rhs = ru;
    rhs.extend_from_slice(&rp);

    let (x, rep) = solve_nonsymmetric(&system, &rhs, &config.solver).map_err(at)?;
    let (w1, lambda1) = (x[..nv].to_vec(), x[nv..].to_vec());
    finish(state, config, problem, ops, w1, lambda1, vec![rep], &load)
}

/// `base + c·Bᵀ Mp⁻¹ B` on interior rows, realised matrix-free with inner
/// pressure-mass solves; `base` already carries identity Dirichlet rows.
struct ProjectedGradDiv<'a, T> {
    base: &'a CsrMatrix<T>,
    ops: &'a Operators<T>,
    coefficient: T,
    inner: &'a SolverOptions,
    failure: RefCell<Option<SolverError>>,
}

impl<T: Real> LinearOperator<T> for ProjectedGradDiv<'_, T> {
    fn dim(&self) -> usize {
        self.base.nrows()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.base.mul_vec_into(x, y);
        match self.ops.solve_pressure_mass(&self.ops.divergence.mul_vec(x), self.inner) {
            Ok(s) => {
                axpy(self.coefficient, &self.ops.divergence_t_interior.mul_vec(&s), y);
            }
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
            }
        }
    }
}

/// Hybrid decoupled backward Euler in projected form:
///
/// `[M/k + N(wₙ) + νA + (kα²+2β) BᵀMp⁻¹B] w_{n+1} = M wₙ/k + F + Bᵀλₙ + 2β BᵀMp⁻¹B wₙ`,
/// `λ_{n+1} = Mp⁻¹(Mp λₙ − (kα²+2β) B w_{n+1} + 2β B wₙ)`.
///
/// Algebraically identical to [`step_hybrid_be_coupled`]. The Krylov solve
/// is preconditioned with the Cholesky factor of the symmetric part of the
/// plain grad-div system.
pub fn step_hybrid_be_decoupled_proj<T: Real>(
    state: &State<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
) -> StepResult<T> {
    let at = SchemeError::at(state.step + 1);
    let k = config.dt;
    let two_beta = T::lit(2.0) * config.beta;
    let c = k * config.alpha2 + two_beta;
    let mut reports = Vec::new();

    let mut base = be_matrix(ops, config, &state.w, T::zero());
    let (mut rhs, load) = be_rhs(ops, config, problem, state);
    axpy(T::one(), &ops.divergence.mul_vec_transpose(&state.lambda), &mut rhs);
    let bw0 = ops.divergence.mul_vec(&state.w);
    let s0 = pressure_solve(ops, &bw0, config, &mut reports).map_err(at)?;
    axpy(two_beta, &ops.divergence.mul_vec_transpose(&s0), &mut rhs);
    let bc = ops.boundary_values(problem, bc_time(config, time_next(state, config)));
    ops.apply_dirichlet(&mut base, &mut rhs, &bc);

    let pc = match ops.symmetric_factor(T::one() / k, config.nu, c) {
        Ok(f) => Box::new(SharedFactor(f)) as Box<dyn Preconditioner<T>>,
        Err(_) => {
            let mut pc_matrix = CsrMatrix::linear_combination(&[(T::one(), &base), (c, &ops.graddiv)]);
            pc_matrix.set_identity_rows(ops.boundary_dofs());
            default_preconditioner(&pc_matrix)
        }
    };
    let op = ProjectedGradDiv {
        base: &base,
        ops,
        coefficient: c,
        inner: &config.inner,
        failure: RefCell::new(None),
    };
    let result = gmres(&op, pc.as_ref(), &rhs, &config.solver);
    if let Some(e) = op.failure.into_inner() {
        return Err(at(e));
    }
    let (w1, rep) = result.map_err(at)?;
    reports.push(rep);

    let mut r = ops.pressure_mass.mul_vec(&state.lambda);
    axpy(-c, &ops.divergence.mul_vec(&w1), &mut r);
    axpy(two_beta, &bw0, &mut r);
    let lambda1 = pressure_solve(ops, &r, config, &mut reports).map_err(at)?;
    finish(state, config, problem, ops, w1, lambda1, reports, &load)
}

/// Trapezoidal velocity system around the extrapolated transport field
/// `w* = (3/2)wₙ − (1/2)w_{n−1}` (with `w_{−1} = w₀`):
/// matrix `M/k + ½N(w*) + ½νA + c_imp·G`,
/// rhs `M wₙ/k − ½N(w*)wₙ − ½νA wₙ + F(t_{n+½}) + c_exp·G wₙ`.
fn trapezoidal_system<T: Real>(
    ops: &Operators<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    state: &State<T>,
    implicit: T,
    explicit: T,
) -> (CsrMatrix<T>, Vec<T>, Vec<T>) {
    let half = T::lit(0.5);
    let k = config.dt;
    let w_star: Vec<T> = match &state.w_prev {
        Some(prev) => state.w.iter().zip(prev).map(|(&a, &b)| T::lit(1.5) * a - half * b).collect(),
        None => state.w.clone(),
    };
    let n = ops.convection(&w_star);
    let mat = CsrMatrix::linear_combination(&[
        (T::one() / k, &ops.mass),
        (half, &n),
        (half * config.nu, &ops.stiffness),
        (implicit, &ops.graddiv),
    ]);
    let load = assemble_load(&ops.dofmap, &problem.force, state.t + half * k);
    let mut rhs = scaled(T::one() / k, &ops.mass.mul_vec(&state.w));
    axpy(-half, &n.mul_vec(&state.w), &mut rhs);
    axpy(-half * config.nu, &ops.stiffness.mul_vec(&state.w), &mut rhs);
    axpy(T::one(), &load, &mut rhs);
    if explicit != T::zero() {
        axpy(explicit, &ops.graddiv.mul_vec(&state.w), &mut rhs);
    }
    (mat, rhs, load)
}

/// Hybrid trapezoidal scheme. With `w_{n+½} = (wₙ + w_{n+1})/2` and the
/// pressure at `λ_{n+½}`, the decoupled velocity system is
///
/// `[M/k + ½N(w*) + ½νA + (kα²/4 + β)G] w_{n+1}
///    = M wₙ/k − ½N(w*)wₙ − ½νA wₙ + F(t_{n+½}) + Bᵀλₙ + (β − kα²/4) G wₙ`,
///
/// followed by `Mp λ_{n+1} = Mp λₙ − (kα²/2) B(wₙ + w_{n+1}) − 2β B(w_{n+1} − wₙ)`.
/// Boundary data for `w_{n+1}` are taken at `t_{n+1}`.
pub fn step_hybrid_trapezoidal<T: Real>(
    state: &State<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
) -> StepResult<T> {
    let at = SchemeError::at(state.step + 1);
    let quarter = T::lit(0.25) * config.dt * config.alpha2;
    let beta = effective_beta(config);
    let (mat, mut rhs, load) = trapezoidal_system(ops, config, problem, state, quarter + beta, beta - quarter);
    axpy(T::one(), &ops.divergence.mul_vec_transpose(&state.lambda), &mut rhs);
    let bc = ops.boundary_values(problem, bc_time(config, time_next(state, config)));
    let sym = (T::one() / config.dt, T::lit(0.5) * config.nu, quarter + beta);
    let (w1, rep) = solve_velocity(ops, mat, rhs, &bc, sym, &config.solver).map_err(at)?;
    let mut reports = vec![rep];

    let two = T::lit(2.0);
    let (bw0, bw1) = (ops.divergence.mul_vec(&state.w), ops.divergence.mul_vec(&w1));
    let mut r = ops.pressure_mass.mul_vec(&state.lambda);
    for i in 0..r.len() {
        r[i] -= two * quarter * (bw0[i] + bw1[i]);
        if beta != T::zero() {
            r[i] -= two * beta * (bw1[i] - bw0[i]);
        }
    }
    let lambda1 = pressure_solve(ops, &r, config, &mut reports).map_err(at)?;
    finish(state, config, problem, ops, w1, lambda1, reports, &load)
}

/// Artificial compression trapezoidal scheme: [`step_hybrid_trapezoidal`]
/// with `β = 0`.
pub fn step_ac_trapezoidal<T: Real>(
    state: &State<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
) -> StepResult<T> {
    let ac = SchemeConfig { beta: T::zero(), ..config.clone() };
    step_hybrid_trapezoidal(state, &ac, problem, ops)
}

/// Penalty trapezoidal scheme with `λ = −2β Π_Q ∇·w` at both levels:
///
/// `[M/k + ½N(w*) + ½νA + βG] w_{n+1} = M wₙ/k − ½N(w*)wₙ − ½νA wₙ − βG wₙ + F(t_{n+½})`.
pub fn step_pp_trapezoidal<T: Real>(
    state: &State<T>,
    config: &SchemeConfig<T>,
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
) -> StepResult<T> {
    let at = SchemeError::at(state.step + 1);
    let beta = config.beta;
    let (mat, rhs, load) = trapezoidal_system(ops, config, problem, state, beta, -beta);
    let bc = ops.boundary_values(problem, bc_time(config, time_next(state, config)));
    let sym = (T::one() / config.dt, T::lit(0.5) * config.nu, beta);
    let (w1, rep) = solve_velocity(ops, mat, rhs, &bc, sym, &config.solver).map_err(at)?;
    let mut reports = vec![rep];
    let r = scaled(-T::lit(2.0) * beta, &ops.divergence.mul_vec(&w1));
    let lambda1 = pressure_solve(ops, &r, config, &mut reports).map_err(at)?;
    finish(state, config, problem, ops, w1, lambda1, reports, &load)
}
