//! Norms, curvature, space-time errors, convergence rates and CSV/VTK output.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::fespace::{eval_divergence, eval_pressure, eval_velocity, integrate, DofMap, ScalarFieldFn, VectorFieldFn};
use crate::linalg::CsrMatrix;
use crate::mesh::TriMesh;
use crate::scalar::Real;
use crate::schemes::State;

#[derive(Debug, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Column header of every time-series CSV.
pub const CSV_HEADER: &str = "t,norm_w,norm_grad_w,norm_div_w,norm_lambda,kappa,energy_residual,solver_iterations";

/// One row of a simulation time series.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesRecord<T> {
    pub t: T,
    pub norm_w: T,
    pub norm_grad_w: T,
    pub norm_div_w: T,
    pub norm_lambda: T,
    /// Pressure-space curvature of the modified pressure; `None` until three
    /// levels exist.
    pub kappa: Option<T>,
    /// Same second difference measured by direct quadrature of
    /// `λ + 2β ∇·w` without projection.
    pub kappa_quadrature: Option<T>,
    pub energy_residual: T,
    pub solver_iterations: usize,
}

/// `sqrt(cᵀ M c)`.
pub fn l2_norm<T: Real>(c: &[T], mass: &CsrMatrix<T>) -> T {
    mass.quadratic_form(c).max(T::zero()).sqrt()
}

/// `‖∇·w_h‖` by elementwise quadrature (no projection).
pub fn div_norm<T: Real>(w: &[T], dofmap: &DofMap<T>) -> T {
    integrate(dofmap, |t, l, _| {
        let d = eval_divergence(dofmap, w, t, l);
        d * d
    })
    .sqrt()
}

/// `‖x_{n+1} − 2xₙ + x_{n−1}‖` in the norm induced by `mass`.
pub fn discrete_curvature<T: Real>(prev: &[T], curr: &[T], next: &[T], mass: &CsrMatrix<T>) -> T {
    let d: Vec<T> = second_difference(prev, curr, next);
    l2_norm(&d, mass)
}

fn second_difference<T: Real>(prev: &[T], curr: &[T], next: &[T]) -> Vec<T> {
    let two = T::lit(2.0);
    next.iter().zip(curr).zip(prev).map(|((&a, &b), &c)| a - two * b + c).collect()
}

/// Curvature of `λ + 2β ∇·w` evaluated pointwise by quadrature; the
/// levels are ordered `[prev, curr, next]`.
pub fn discrete_curvature_quadrature<T: Real>(
    dofmap: &DofMap<T>,
    lambda: [&[T]; 3],
    w: [&[T]; 3],
    beta: T,
) -> T {
    let dl = second_difference(lambda[0], lambda[1], lambda[2]);
    let dw = second_difference(w[0], w[1], w[2]);
    let two_beta = T::lit(2.0) * beta;
    integrate(dofmap, |t, l, _| {
        let v = eval_pressure(dofmap, &dl, t, l) + two_beta * eval_divergence(dofmap, &dw, t, l);
        v * v
    })
    .sqrt()
}

/// `(∫₀ᵀ e(t)² dt)^{1/2}` by the composite trapezoidal rule over equally
/// spaced samples `e(0), e(dt), …`.
pub fn spacetime_l2<T: Real>(errors: &[T], dt: T) -> T {
    if errors.len() < 2 {
        return T::zero();
    }
    let half = T::lit(0.5);
    let last = errors.len() - 1;
    let sum = errors.iter().enumerate().fold(T::zero(), |acc, (i, &e)| {
        let w = if i == 0 || i == last { half } else { T::one() };
        acc + w * e * e
    });
    (dt * sum).sqrt()
}

/// `log₂(eᵢ / eᵢ₊₁)` for step sizes halving between successive entries.
pub fn convergence_rates<T: Real>(errors: &[T], dts: &[T]) -> Result<Vec<T>, DiagnosticsError> {
    if errors.len() != dts.len() {
        return Err(DiagnosticsError::Invalid(format!(
            "{} errors for {} step sizes",
            errors.len(),
            dts.len()
        )));
    }
    for pair in dts.windows(2) {
        let ratio = pair[0] / pair[1];
        if (ratio - T::lit(2.0)).abs() > T::lit(1e-9) {
            return Err(DiagnosticsError::Invalid(format!(
                "step sizes must halve: {} -> {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(errors.windows(2).map(|e| (e[0] / e[1]).log2()).collect())
}

/// `‖u(·, t) − w_h‖` by quadrature.
pub fn velocity_l2_error<T: Real>(dofmap: &DofMap<T>, w: &[T], exact: &VectorFieldFn<T>, t: T) -> T {
    integrate(dofmap, |tri, l, x| {
        let u = exact(x, t);
        let wh = eval_velocity(dofmap, w, tri, l);
        let (a, b) = (u[0] - wh[0], u[1] - wh[1]);
        a * a + b * b
    })
    .sqrt()
}

/// `‖p(·, t) − λ_h‖` by quadrature.
pub fn pressure_l2_error<T: Real>(dofmap: &DofMap<T>, lambda: &[T], exact: &ScalarFieldFn<T>, t: T) -> T {
    integrate(dofmap, |tri, l, x| {
        let d = exact(x, t) - eval_pressure(dofmap, lambda, tri, l);
        d * d
    })
    .sqrt()
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> DiagnosticsError + '_ {
    move |source| DiagnosticsError::Io { path: path.to_path_buf(), source }
}

fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.to_f64_lossy())
}

/// Renders a series as CSV text with [`CSV_HEADER`]; numbers use 17
/// significant digits in scientific notation.
pub fn format_csv<T: Real>(series: &[TimeSeriesRecord<T>]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in series {
        let kappa = r.kappa.map(fmt_real).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_real(r.t),
            fmt_real(r.norm_w),
            fmt_real(r.norm_grad_w),
            fmt_real(r.norm_div_w),
            fmt_real(r.norm_lambda),
            kappa,
            fmt_real(r.energy_residual),
            r.solver_iterations
        );
    }
    out
}

/// Writes [`format_csv`] to `path`.
pub fn write_csv<T: Real>(series: &[TimeSeriesRecord<T>], path: impl AsRef<Path>) -> Result<(), DiagnosticsError> {
    let path = path.as_ref();
    std::fs::write(path, format_csv(series)).map_err(io_error(path))
}

/// Writes a legacy VTK 2.0 ASCII unstructured grid with the velocity at the
/// mesh vertices and the pressure.
pub fn write_vtk_snapshot<T: Real>(
    mesh: &TriMesh<T>,
    state: &State<T>,
    path: impl AsRef<Path>,
) -> Result<(), DiagnosticsError> {
    let path = path.as_ref();
    let nv = mesh.n_vertices();
    let n_scalar = nv + mesh.n_edges();
    if state.w.len() != 2 * n_scalar || state.lambda.len() != nv {
        return Err(DiagnosticsError::Invalid("state does not match the mesh".into()));
    }
    let file = File::create(path).map_err(io_error(path))?;
    let mut out = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        let out = &mut out;
        writeln!(out, "# vtk DataFile Version 2.0")?;
        writeln!(out, "hybrid-ns snapshot t={}", fmt_real(state.t))?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(out, "POINTS {nv} double")?;
        for v in mesh.vertices() {
            writeln!(out, "{} {} 0", fmt_real(v[0]), fmt_real(v[1]))?;
        }
        let nt = mesh.n_triangles();
        writeln!(out, "CELLS {nt} {}", 4 * nt)?;
        for t in mesh.triangles() {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(out, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(out, "5")?;
        }
        writeln!(out, "POINT_DATA {nv}")?;
        writeln!(out, "VECTORS velocity double")?;
        for v in 0..nv {
            writeln!(out, "{} {} 0", fmt_real(state.w[v]), fmt_real(state.w[v + n_scalar]))?;
        }
        writeln!(out, "SCALARS pressure double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for &p in &state.lambda {
            writeln!(out, "{}", fmt_real(p))?;
        }
        out.flush()
    };
    body().map_err(io_error(path))
}
