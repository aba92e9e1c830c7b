use super::{solve_steady_stokes, step, Operators, SchemeConfig, SchemeError, State, StepDiagnostics};
use crate::diagnostics::{discrete_curvature, discrete_curvature_quadrature, TimeSeriesRecord};
use crate::fespace::{interpolate_pressure, interpolate_velocity};
use crate::problems::{InitialCondition, ProblemDef};
use crate::scalar::Real;

/// Result of a completed run.
#[derive(Clone, Debug)]
pub struct SimulationOutput<T> {
    /// One record for the initial state and one per step.
    pub records: Vec<TimeSeriesRecord<T>>,
    pub final_state: State<T>,
}

/// A run aborted at `step`; `partial` holds the records produced before.
#[derive(Debug, thiserror::Error)]
#[error("simulation aborted at step {step}: {source}")]
pub struct SimulationError<T: std::fmt::Debug> {
    pub step: usize,
    #[source]
    pub source: SchemeError,
    pub partial: Vec<TimeSeriesRecord<T>>,
}

/// Builds the initial state: the interpolated initial fields with the
/// boundary data imposed, or the steady Stokes solution. The pressure mean
/// is removed when the problem asks for a gauge.
pub fn initial_state<T: Real>(
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
    config: &SchemeConfig<T>,
) -> Result<(State<T>, usize), SchemeError> {
    let (mut state, iterations) = match &problem.initial {
        InitialCondition::Fields { velocity, pressure } => {
            let mut w = interpolate_velocity(&ops.dofmap, velocity, T::zero());
            ops.set_boundary(&mut w, &ops.boundary_values(problem, T::zero()));
            (State::new(w, interpolate_pressure(&ops.dofmap, pressure, T::zero()), T::zero()), 0)
        }
        InitialCondition::StokesSolve { .. } => {
            let (s, report) = solve_steady_stokes(problem, ops, &config.solver).map_err(SchemeError::at(0))?;
            (s, report.iterations)
        }
    };
    if problem.pressure_gauge {
        ops.subtract_pressure_mean(&mut state.lambda);
    }
    Ok((state, iterations))
}

/// Observer invoked with the initial state and after every step.
pub type StepObserver<'a, T> = &'a mut dyn FnMut(&State<T>, &StepDiagnostics<T>);

/// [`run_simulation_with`] on freshly assembled operators.
pub fn run_simulation<T: Real>(
    problem: &ProblemDef<T>,
    config: &SchemeConfig<T>,
    t_final: T,
    observer: Option<StepObserver<'_, T>>,
) -> Result<SimulationOutput<T>, SimulationError<T>> {
    let ops = Operators::new(problem);
    run_simulation_with(problem, &ops, config, t_final, observer)
}

struct CurvatureHistory<T> {
    modified: Vec<Vec<T>>,
    lambda: Vec<Vec<T>>,
    w: Vec<Vec<T>>,
}

impl<T: Real> CurvatureHistory<T> {
    fn push(&mut self, state: &State<T>, diag: &StepDiagnostics<T>, beta: T) {
        let two_beta = T::lit(2.0) * beta;
        let modified = state.lambda.iter().zip(&diag.projected_div).map(|(&l, &d)| l + two_beta * d).collect();
        for (levels, v) in [
            (&mut self.modified, modified),
            (&mut self.lambda, state.lambda.clone()),
            (&mut self.w, state.w.clone()),
        ] {
            levels.push(v);
            if levels.len() > 3 {
                levels.remove(0);
            }
        }
    }

    fn kappa(&self, ops: &Operators<T>, beta: T) -> (Option<T>, Option<T>) {
        if self.modified.len() < 3 {
            return (None, None);
        }
        let m = &self.modified;
        let k = discrete_curvature(&m[0], &m[1], &m[2], &ops.pressure_mass);
        let l = &self.lambda;
        let w = &self.w;
        let kq = discrete_curvature_quadrature(&ops.dofmap, [&l[0], &l[1], &l[2]], [&w[0], &w[1], &w[2]], beta);
        (Some(k), Some(kq))
    }
}

fn record<T: Real>(state: &State<T>, diag: &StepDiagnostics<T>, kappa: (Option<T>, Option<T>)) -> TimeSeriesRecord<T> {
    TimeSeriesRecord {
        t: state.t,
        norm_w: diag.norm_w,
        norm_grad_w: diag.norm_grad_w,
        norm_div_w: diag.norm_div_w,
        norm_lambda: diag.norm_lambda,
        kappa: kappa.0,
        kappa_quadrature: kappa.1,
        energy_residual: diag.energy_identity_residual,
        solver_iterations: diag.solver_iterations(),
    }
}

/// Number of steps of size `dt` reaching `t_final`, which must be a
/// nonnegative multiple of `dt` (to a relative `1e-9`).
pub fn step_count<T: Real>(t_final: T, dt: T) -> Result<usize, SchemeError> {
    let ratio = t_final / dt;
    let n_steps = ratio.round();
    if !(t_final >= T::zero()) || !(dt > T::zero()) || (ratio - n_steps).abs() > T::lit(1e-9) * n_steps.max(T::one()) {
        let msg = format!("final time {t_final} is not a nonnegative multiple of dt = {dt}");
        return Err(SchemeError::InvalidConfig(msg));
    }
    Ok(n_steps.to_usize().unwrap_or(0))
}

/// Initializes from the problem and advances to `t_final`, which must be a
/// multiple of `dt`. Records the initial state and every step; the
/// curvature of the modified pressure is available from the third level on.
pub fn run_simulation_with<T: Real>(
    problem: &ProblemDef<T>,
    ops: &Operators<T>,
    config: &SchemeConfig<T>,
    t_final: T,
    mut observer: Option<StepObserver<'_, T>>,
) -> Result<SimulationOutput<T>, SimulationError<T>> {
    let fail = |step, source, partial| SimulationError { step, source, partial };
    config.validate().map_err(|e| fail(0, e, Vec::new()))?;
    let n_steps = step_count(t_final, config.dt).map_err(|e| fail(0, e, Vec::new()))?;
    let beta = config.method.modified_pressure_beta(config.beta);

    let (mut state, iterations) = initial_state(problem, ops, config).map_err(|e| fail(0, e, Vec::new()))?;
    let mut diag = super::stepper::measure(ops, config, &state.w, &state.lambda)
        .map_err(|e| fail(0, SchemeError::at(0)(e), Vec::new()))?;
    diag.solver_reports[0].iterations += iterations;
    let mut history = CurvatureHistory { modified: Vec::new(), lambda: Vec::new(), w: Vec::new() };
    history.push(&state, &diag, beta);
    let mut records = vec![record(&state, &diag, (None, None))];
    if let Some(obs) = observer.as_mut() {
        obs(&state, &diag);
    }

    for n in 1..=n_steps {
        let (mut next, diag) = match step(&state, config, problem, ops) {
            Ok(v) => v,
            Err(e) => return Err(fail(n, e, records)),
        };
        // Pin the clock to n·dt so long runs do not accumulate drift.
        next.t = T::from_usize(n).expect("step count fits the scalar type") * config.dt;
        history.push(&next, &diag, beta);
        records.push(record(&next, &diag, history.kappa(ops, beta)));
        if let Some(obs) = observer.as_mut() {
            obs(&next, &diag);
        }
        state = next;
    }
    Ok(SimulationOutput { records, final_state: state })
}
