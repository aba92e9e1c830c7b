//! Time steppers for the relaxed Navier-Stokes system and the steady Stokes
//! solve used for initial data.
//!
//! Every method shares the velocity operator `M/k + N(w) + νA + c·G` and
//! differs in the grad-div coefficient `c`, the explicit right-hand-side
//! terms, and how the pressure is advanced.

mod filter;
mod operators;
mod simulate;
mod stepper;
mod stokes;

use std::fmt;
use std::str::FromStr;

pub use filter::apply_time_filter;
pub use operators::Operators;
pub use simulate::{
    initial_state, run_simulation, run_simulation_with, step_count, SimulationError, SimulationOutput, StepObserver,
};
pub use stepper::{
    energy_identity_residual, step, step_ac_be, step_ac_trapezoidal, step_hybrid_be_coupled,
    step_hybrid_be_decoupled, step_hybrid_be_decoupled_proj, step_hybrid_trapezoidal, step_pp_be,
    step_pp_trapezoidal,
};
pub use stokes::solve_steady_stokes;

use crate::linalg::{SolverError, SolverOptions, SolverReport};
use crate::scalar::Real;

/// Treatment of the incompressibility constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relaxation {
    /// `p_t + 2β ∇·u_t + α² ∇·u = 0`.
    Hybrid,
    /// `2β ∇·u + p = 0`.
    Penalty,
    /// `p_t + α² ∇·u = 0`.
    ArtificialCompression,
}

/// Time discretization family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TimeDiscretization {
    BackwardEuler,
    /// Backward Euler followed by the `μ` second-difference filter.
    FilteredBackwardEuler,
    /// Second-order trapezoidal rule with extrapolated transport velocity.
    Trapezoidal,
}

impl TimeDiscretization {
    pub const ALL: [Self; 3] = [Self::BackwardEuler, Self::FilteredBackwardEuler, Self::Trapezoidal];

    pub fn name(self) -> &'static str {
        match self {
            Self::BackwardEuler => "be",
            Self::FilteredBackwardEuler => "be_filtered",
            Self::Trapezoidal => "trapezoidal",
        }
    }
}

impl FromStr for TimeDiscretization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown time discretization `{s}` (expected be, be_filtered or trapezoidal)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    HybridBeCoupled,
    HybridBeDecoupledProj,
    HybridBeDecoupled,
    HybridBeFiltered,
    HybridTrapezoidal,
    PpBe,
    AcBe,
    PpBeFiltered,
    AcBeFiltered,
    PpTrapezoidal,
    AcTrapezoidal,
}

impl Method {
    pub const ALL: [Self; 11] = [
        Self::HybridBeCoupled,
        Self::HybridBeDecoupledProj,
        Self::HybridBeDecoupled,
        Self::HybridBeFiltered,
        Self::HybridTrapezoidal,
        Self::PpBe,
        Self::AcBe,
        Self::PpBeFiltered,
        Self::AcBeFiltered,
        Self::PpTrapezoidal,
        Self::AcTrapezoidal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::HybridBeCoupled => "hybrid_be_coupled",
            Self::HybridBeDecoupledProj => "hybrid_be_decoupled_proj",
            Self::HybridBeDecoupled => "hybrid_be_decoupled",
            Self::HybridBeFiltered => "hybrid_be_filtered",
            Self::HybridTrapezoidal => "hybrid_trapezoidal",
            Self::PpBe => "pp_be",
            Self::AcBe => "ac_be",
            Self::PpBeFiltered => "pp_be_filtered",
            Self::AcBeFiltered => "ac_be_filtered",
            Self::PpTrapezoidal => "pp_trapezoidal",
            Self::AcTrapezoidal => "ac_trapezoidal",
        }
    }

    pub fn relaxation(self) -> Relaxation {
        match self {
            Self::HybridBeCoupled
            | Self::HybridBeDecoupledProj
            | Self::HybridBeDecoupled
            | Self::HybridBeFiltered
            | Self::HybridTrapezoidal => Relaxation::Hybrid,
            Self::PpBe | Self::PpBeFiltered | Self::PpTrapezoidal => Relaxation::Penalty,
            Self::AcBe | Self::AcBeFiltered | Self::AcTrapezoidal => Relaxation::ArtificialCompression,
        }
    }

    pub fn time_discretization(self) -> TimeDiscretization {
        match self {
            Self::HybridBeFiltered | Self::PpBeFiltered | Self::AcBeFiltered => TimeDiscretization::FilteredBackwardEuler,
            Self::HybridTrapezoidal | Self::PpTrapezoidal | Self::AcTrapezoidal => TimeDiscretization::Trapezoidal,
            _ => TimeDiscretization::BackwardEuler,
        }
    }

    /// The method with the given relaxation and time discretization; the
    /// hybrid backward-Euler choice is the alternate decoupled form.
    pub fn from_parts(relaxation: Relaxation, time: TimeDiscretization) -> Self {
        use Relaxation::*;
        use TimeDiscretization::*;
        match (relaxation, time) {
            (Hybrid, BackwardEuler) => Self::HybridBeDecoupled,
            (Hybrid, FilteredBackwardEuler) => Self::HybridBeFiltered,
            (Hybrid, Trapezoidal) => Self::HybridTrapezoidal,
            (Penalty, BackwardEuler) => Self::PpBe,
            (Penalty, FilteredBackwardEuler) => Self::PpBeFiltered,
            (Penalty, Trapezoidal) => Self::PpTrapezoidal,
            (ArtificialCompression, BackwardEuler) => Self::AcBe,
            (ArtificialCompression, FilteredBackwardEuler) => Self::AcBeFiltered,
            (ArtificialCompression, Trapezoidal) => Self::AcTrapezoidal,
        }
    }

    /// `β` entering the modified pressure `λ + 2β Π_Q ∇·w` for this method.
    /// Artificial compression has no penalty term; for the penalty method the
    /// modified pressure vanishes identically, so the plain pressure is used.
    pub fn modified_pressure_beta<T: Real>(self, beta: T) -> T {
        match self.relaxation() {
            Relaxation::Hybrid => beta,
            Relaxation::Penalty | Relaxation::ArtificialCompression => T::zero(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|m| m.name()).collect();
            format!("unknown method `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Parameters of one time-stepping run.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig<T> {
    pub method: Method,
    /// `α²`, squared pressure-wave speed.
    pub alpha2: T,
    /// `β`, penalty coefficient.
    pub beta: T,
    pub nu: T,
    /// Time step `k`.
    pub dt: T,
    /// Filter strength `μ`.
    pub mu: T,
    /// Outer (velocity / saddle-point) Krylov solves.
    pub solver: SolverOptions,
    /// Pressure-mass solves nested inside other operations.
    pub inner: SolverOptions,
    /// Impose boundary data at the initial time for every step.
    pub bc_time_frozen: bool,
}

pub const DEFAULT_MU: f64 = 0.1;
pub const DEFAULT_INNER_TOL: f64 = 1e-12;

impl<T: Real> SchemeConfig<T> {
    pub fn new(method: Method, alpha2: T, beta: T, nu: T, dt: T) -> Self {
        Self {
            method,
            alpha2,
            beta,
            nu,
            dt,
            mu: T::lit(DEFAULT_MU),
            solver: SolverOptions::default(),
            inner: SolverOptions::with_tol(DEFAULT_INNER_TOL),
            bc_time_frozen: false,
        }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let positive = [("alpha2", self.alpha2), ("beta", self.beta), ("nu", self.nu), ("dt", self.dt)];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(SchemeError::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.mu >= T::zero() && self.mu < T::one()) {
            return Err(SchemeError::InvalidConfig(format!("mu must lie in [0, 1), got {}", self.mu)));
        }
        for (name, o) in [("solver", &self.solver), ("inner", &self.inner)] {
            if !(o.tol > 0.0 && o.tol < 1.0) || o.restart == 0 {
                return Err(SchemeError::InvalidConfig(format!(
                    "{name} tolerance must lie in (0, 1) with a positive restart length"
                )));
            }
        }
        Ok(())
    }
}

/// Discrete solution at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    pub w: Vec<T>,
    pub lambda: Vec<T>,
    /// Velocity one level back (trapezoidal extrapolation, filter).
    pub w_prev: Option<Vec<T>>,
    /// Pressure one level back (filter).
    pub lambda_prev: Option<Vec<T>>,
    pub t: T,
    /// Number of steps taken since the initial state.
    pub step: usize,
}

impl<T: Real> State<T> {
    pub fn new(w: Vec<T>, lambda: Vec<T>, t: T) -> Self {
        Self { w, lambda, w_prev: None, lambda_prev: None, t, step: 0 }
    }

    pub fn zeros(ops: &Operators<T>) -> Self {
        Self::new(vec![T::zero(); ops.n_velocity()], vec![T::zero(); ops.n_pressure()], T::zero())
    }
}

/// Measurements taken after every step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics<T> {
    /// Relative residual of the discrete energy identity of the hybrid
    /// backward-Euler scheme, evaluated on the step just taken.
    pub energy_identity_residual: T,
    pub solver_reports: Vec<SolverReport>,
    pub norm_w: T,
    pub norm_grad_w: T,
    pub norm_div_w: T,
    pub norm_lambda: T,
    /// `‖w‖² + α⁻²‖λ + 2β Π_Q ∇·w‖²`.
    pub stability_energy: T,
    /// `Π_Q(∇·w)` at the new level.
    pub projected_div: Vec<T>,
}

impl<T> StepDiagnostics<T> {
    pub fn solver_iterations(&self) -> usize {
        self.solver_reports.iter().map(|r| r.iterations).sum()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SchemeError {
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("solver failure at step {step}: {source}")]
    Solver { step: usize, source: SolverError },
}

impl SchemeError {
    pub(crate) fn at(step: usize) -> impl Fn(SolverError) -> Self + Copy {
        move |source| Self::Solver { step, source }
    }
}
