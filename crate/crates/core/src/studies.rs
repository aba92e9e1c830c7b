//! Parameter studies built on [`crate::schemes::run_simulation`]: temporal
//! convergence, pressure-oscillation damping, parameter-coupling stability,
//! the overdamping check, and the channel recirculation indicator.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::diagnostics::{
    convergence_rates, pressure_l2_error, spacetime_l2, velocity_l2_error, DiagnosticsError, TimeSeriesRecord,
};
use crate::fespace::DofMap;
use crate::linalg::{check_overdamping, smallest_laplacian_eigenvalue, DampingVerdict, EigenBoundary, SolverError};
use crate::mesh::{self, MeshError, StepGeometry, TriMesh};
use crate::problems::{manufactured_problem, ProblemDef, ProblemError};
use crate::schemes::{
    run_simulation_with, Method, Operators, Relaxation, SchemeConfig, SimulationError, State, StepDiagnostics,
    TimeDiscretization,
};
use crate::scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("{label}: {message}")]
    Simulation { label: String, step: usize, message: String, solver_failure: bool },
    #[error(transparent)]
    Eigen(#[from] SolverError),
    #[error("invalid study input: {0}")]
    Invalid(String),
}

impl StudyError {
    fn simulation<T: Real>(label: impl Into<String>, e: SimulationError<T>) -> Self {
        let solver_failure = matches!(e.source, crate::schemes::SchemeError::Solver { .. });
        Self::Simulation { label: label.into(), step: e.step, message: e.to_string(), solver_failure }
    }
}

/// How `α²` and `β` follow from the time step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParameterCoupling {
    Explicit { alpha2: f64, beta: f64 },
    /// `α² = β = 1/Δt`.
    ReciprocalDt,
    /// `α² = β = 1/Δt²`.
    ReciprocalDt2,
    /// `α² = β = Δt`.
    ProportionalDt,
}

impl ParameterCoupling {
    /// `(α², β)` for step `dt`.
    pub fn parameters<T: Real>(self, dt: T) -> (T, T) {
        match self {
            Self::Explicit { alpha2, beta } => (T::lit(alpha2), T::lit(beta)),
            Self::ReciprocalDt => (dt.recip(), dt.recip()),
            Self::ReciprocalDt2 => ((dt * dt).recip(), (dt * dt).recip()),
            Self::ProportionalDt => (dt, dt),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Explicit { .. } => "explicit",
            Self::ReciprocalDt => "reciprocal_dt",
            Self::ReciprocalDt2 => "reciprocal_dt2",
            Self::ProportionalDt => "proportional_dt",
        }
    }

    /// Default coupling for a time discretization: `1/Δt` for the
    /// backward-Euler family, `1/Δt²` for the trapezoidal rule.
    pub fn default_for(time: TimeDiscretization) -> Self {
        match time {
            TimeDiscretization::Trapezoidal => Self::ReciprocalDt2,
            _ => Self::ReciprocalDt,
        }
    }
}

impl FromStr for ParameterCoupling {
    type Err = String;

    /// Parses the named couplings; explicit values are built directly.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reciprocal_dt" => Ok(Self::ReciprocalDt),
            "reciprocal_dt2" => Ok(Self::ReciprocalDt2),
            "proportional_dt" => Ok(Self::ProportionalDt),
            other => Err(format!(
                "unknown parameter coupling `{other}` (expected reciprocal_dt, reciprocal_dt2 or proportional_dt)"
            )),
        }
    }
}

/// Scheme configuration for `problem` with `(α², β)` from `coupling`.
pub fn scheme_for<T: Real>(problem: &ProblemDef<T>, method: Method, dt: T, coupling: ParameterCoupling) -> SchemeConfig<T> {
    let (alpha2, beta) = coupling.parameters(dt);
    SchemeConfig::new(method, alpha2, beta, problem.nu(), dt)
}

/// Time steps of the temporal convergence table.
pub const CONVERGENCE_DTS: [f64; 5] = [0.5, 0.25, 0.125, 0.0625, 0.03125];

/// One row of the convergence table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow<T> {
    pub dt: T,
    /// `‖u − w‖` in `L²(0,T; L²)`.
    pub err_u: T,
    pub rate_u: Option<T>,
    /// `‖p − λ‖` in `L²(0,T; L²)`.
    pub err_p: T,
    pub rate_p: Option<T>,
    /// `‖∇·w‖` in `L²(0,T; L²)`.
    pub div_norm: T,
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy<T> {
    /// Cells per side of the unit-square mesh.
    pub mesh_n: usize,
    pub dts: Vec<T>,
    pub method: Method,
    pub coupling: ParameterCoupling,
    pub t_final: T,
}

impl<T: Real> Default for ConvergenceStudy<T> {
    fn default() -> Self {
        Self {
            mesh_n: 32,
            dts: CONVERGENCE_DTS.iter().map(|&d| T::lit(d)).collect(),
            method: Method::HybridBeDecoupled,
            coupling: ParameterCoupling::ReciprocalDt,
            t_final: T::one(),
        }
    }
}

/// Runs the manufactured problem for every time step and tabulates
/// space-time errors and observed rates.
pub fn convergence_study<T: Real>(study: &ConvergenceStudy<T>) -> Result<Vec<ConvergenceRow<T>>, StudyError> {
    if study.dts.is_empty() {
        return Err(StudyError::Invalid("no time steps given".into()));
    }
    let problem = manufactured_problem(mesh::unit_square(study.mesh_n)?)?;
    let exact = problem.exact.clone().expect("manufactured problem has an exact solution");
    let ops = Operators::new(&problem);
    let mut rows = Vec::with_capacity(study.dts.len());
    for &dt in &study.dts {
        let config = scheme_for(&problem, study.method, dt, study.coupling);
        let (mut eu, mut ep, mut ed) = (Vec::new(), Vec::new(), Vec::new());
        let mut observe = |s: &State<T>, d: &StepDiagnostics<T>| {
            eu.push(velocity_l2_error(&ops.dofmap, &s.w, &exact.velocity, s.t));
            ep.push(pressure_l2_error(&ops.dofmap, &s.lambda, &exact.pressure, s.t));
            ed.push(d.norm_div_w);
        };
        run_simulation_with(&problem, &ops, &config, study.t_final, Some(&mut observe))
            .map_err(|e| StudyError::simulation(format!("convergence run dt = {dt}"), e))?;
        rows.push(ConvergenceRow {
            dt,
            err_u: spacetime_l2(&eu, dt),
            rate_u: None,
            err_p: spacetime_l2(&ep, dt),
            rate_p: None,
            div_norm: spacetime_l2(&ed, dt),
        });
    }
    let dts: Vec<T> = rows.iter().map(|r| r.dt).collect();
    let ru = convergence_rates(&rows.iter().map(|r| r.err_u).collect::<Vec<_>>(), &dts)?;
    let rp = convergence_rates(&rows.iter().map(|r| r.err_p).collect::<Vec<_>>(), &dts)?;
    for (i, row) in rows.iter_mut().enumerate().skip(1) {
        row.rate_u = Some(ru[i - 1]);
        row.rate_p = Some(rp[i - 1]);
    }
    Ok(rows)
}

pub const CONVERGENCE_HEADER: &str = "dt,err_u,rate_u,err_p,rate_p,div_norm";

/// Convergence table as CSV; the first row has empty rate fields.
pub fn format_convergence_csv<T: Real>(rows: &[ConvergenceRow<T>]) -> String {
    let f = |x: T| format!("{:.16e}", x.to_f64_lossy());
    let opt = |x: Option<T>| x.map(f).unwrap_or_default();
    let mut out = format!("{CONVERGENCE_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", f(r.dt), f(r.err_u), opt(r.rate_u), f(r.err_p), opt(r.rate_p), f(r.div_norm));
    }
    out
}

/// The three relaxations compared in the damping study.
pub const DAMPING_RELAXATIONS: [Relaxation; 3] =
    [Relaxation::Hybrid, Relaxation::Penalty, Relaxation::ArtificialCompression];

pub fn relaxation_name(r: Relaxation) -> &'static str {
    match r {
        Relaxation::Hybrid => "hybrid",
        Relaxation::Penalty => "pp",
        Relaxation::ArtificialCompression => "ac",
    }
}

#[derive(Clone, Debug)]
pub struct DampingStudy<T> {
    pub time: TimeDiscretization,
    pub dt: T,
    pub t_final: T,
    pub coupling: ParameterCoupling,
    pub mu: T,
}

/// Time series of one method in a damping study.
#[derive(Clone, Debug)]
pub struct DampingRun<T> {
    pub method: Method,
    pub records: Vec<TimeSeriesRecord<T>>,
}

impl<T: Real> DampingRun<T> {
    /// Mean of the curvature over the steps where it is defined.
    pub fn mean_kappa(&self) -> T {
        mean(self.records.iter().filter_map(|r| r.kappa))
    }

    /// Mean of `‖∇·w‖` over all recorded levels after the initial one.
    pub fn mean_div(&self) -> T {
        mean(self.records.iter().skip(1).map(|r| r.norm_div_w))
    }
}

fn mean<T: Real>(values: impl Iterator<Item = T>) -> T {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_usize(n).unwrap()
    }
}

/// Runs the hybrid, penalty and artificial-compression methods with the
/// same time discretization on `problem`, concurrently, sharing operators.
pub fn damping_study<T: Real>(problem: &ProblemDef<T>, study: &DampingStudy<T>) -> Result<Vec<DampingRun<T>>, StudyError> {
    let ops = Operators::new(problem);
    let results: Vec<Result<DampingRun<T>, StudyError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = DAMPING_RELAXATIONS
            .iter()
            .map(|&relaxation| {
                let ops = &ops;
                scope.spawn(move || {
                    let method = Method::from_parts(relaxation, study.time);
                    let mut config = scheme_for(problem, method, study.dt, study.coupling);
                    config.mu = study.mu;
                    run_simulation_with(problem, ops, &config, study.t_final, None)
                        .map(|out| DampingRun { method, records: out.records })
                        .map_err(|e| StudyError::simulation(method.name(), e))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("damping run panicked")).collect()
    });
    results.into_iter().collect()
}

#[derive(Clone, Debug)]
pub struct StabilityStudy<T> {
    pub mesh_n: usize,
    pub dt: T,
    pub t_final: T,
    pub method: Method,
    pub reynolds: T,
}

impl<T: Real> Default for StabilityStudy<T> {
    fn default() -> Self {
        Self { mesh_n: 16, dt: T::lit(0.1), t_final: T::lit(10.0), method: Method::HybridBeDecoupled, reynolds: T::one() }
    }
}

/// Couplings compared in the stability study.
pub const STABILITY_COUPLINGS: [ParameterCoupling; 2] = [ParameterCoupling::ReciprocalDt, ParameterCoupling::ProportionalDt];

/// Taylor-Green runs with large (`1/Δt`) and small (`Δt`) parameters.
pub fn stability_study<T: Real>(
    study: &StabilityStudy<T>,
) -> Result<Vec<(ParameterCoupling, Vec<TimeSeriesRecord<T>>)>, StudyError> {
    let problem = crate::problems::taylor_green_problem(study.reynolds, mesh::unit_square(study.mesh_n)?)?;
    let ops = Operators::new(&problem);
    STABILITY_COUPLINGS
        .iter()
        .map(|&coupling| {
            let config = scheme_for(&problem, study.method, study.dt, coupling);
            run_simulation_with(&problem, &ops, &config, study.t_final, None)
                .map(|out| (coupling, out.records))
                .map_err(|e| StudyError::simulation(coupling.name(), e))
        })
        .collect()
}

/// Smallest eigenvalue of the discrete Laplacian and the overdamping verdict
/// for the parameters implied by `dt` and `coupling`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenReport {
    pub sigma_min: f64,
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub ratio: f64,
    pub verdict: DampingVerdict,
    pub margin: f64,
}

pub fn eigen_check<T: Real>(
    mesh: &TriMesh<T>,
    boundary: EigenBoundary,
    alpha2: f64,
    beta: f64,
    rel_tol: f64,
) -> Result<EigenReport, StudyError> {
    let dofmap = DofMap::new(mesh);
    let est = smallest_laplacian_eigenvalue(mesh, &dofmap, boundary, rel_tol)?;
    let sigma = est.value.to_f64_lossy();
    let alpha = alpha2.sqrt();
    let check = check_overdamping(alpha, beta, sigma)?;
    Ok(EigenReport {
        sigma_min: sigma,
        iterations: est.iterations,
        alpha,
        beta,
        ratio: check.ratio,
        verdict: check.verdict,
        margin: check.margin,
    })
}

/// Minimum streamwise velocity at velocity nodes strictly inside the box one
/// unit downstream of the step and below its top; negative values indicate
/// reversed flow behind the step.
pub fn recirculation_indicator<T: Real>(dofmap: &DofMap<T>, w: &[T], step: &StepGeometry) -> Option<T> {
    let x_start = T::lit(step.x0 + step.width);
    let x_end = x_start + T::one();
    let height = T::lit(step.height);
    let eps = T::lit(1e-12);
    dofmap
        .node_coords()
        .iter()
        .enumerate()
        .filter(|(_, p)| p[0] > x_start + eps && p[0] < x_end - eps && p[1] > eps && p[1] < height - eps)
        .map(|(s, _)| w[s])
        .reduce(|a, b| a.min(b))
}
