//! Closed-form benchmark definitions: domains, data and exact solutions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::fespace::{scalar_field, vector_field, zero_scalar_field, zero_vector_field, ScalarFieldFn, VectorFieldFn};
use crate::mesh::{self, BoundaryTag, MeshError, TriMesh};
use crate::scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("mesh asset {path}: {source}")]
    Asset { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// How the initial state is obtained.
#[derive(Clone)]
pub enum InitialCondition<T> {
    Fields { velocity: VectorFieldFn<T>, pressure: ScalarFieldFn<T> },
    /// Steady Stokes solution with the problem's force and boundary data at
    /// `t = 0`, and the given viscosity (the problem's own when `None`).
    StokesSolve { viscosity: Option<T> },
}

#[derive(Clone)]
pub struct ExactSolution<T> {
    pub velocity: VectorFieldFn<T>,
    pub pressure: ScalarFieldFn<T>,
}

/// A fully specified benchmark. Every boundary tag of the mesh carries a
/// Dirichlet velocity datum.
#[derive(Clone)]
pub struct ProblemDef<T> {
    pub name: String,
    pub mesh: TriMesh<T>,
    pub reynolds: T,
    pub initial: InitialCondition<T>,
    pub force: VectorFieldFn<T>,
    pub exact: Option<ExactSolution<T>>,
    /// Subtract the pressure mean after every step (fully enclosed domains).
    pub pressure_gauge: bool,
    dirichlet: BTreeMap<BoundaryTag, VectorFieldFn<T>>,
}

impl<T: Real> ProblemDef<T> {
    pub fn new(
        name: impl Into<String>,
        mesh: TriMesh<T>,
        reynolds: T,
        initial: InitialCondition<T>,
        dirichlet: BTreeMap<BoundaryTag, VectorFieldFn<T>>,
        force: VectorFieldFn<T>,
        exact: Option<ExactSolution<T>>,
    ) -> Result<Self, ProblemError> {
        if !(reynolds > T::zero()) {
            return Err(ProblemError::Invalid(format!("Reynolds number must be positive, got {reynolds}")));
        }
        if let Some(tag) = mesh.tags().into_iter().find(|t| !dirichlet.contains_key(t)) {
            return Err(ProblemError::Invalid(format!("boundary tag {tag} has no boundary condition")));
        }
        Ok(Self { name: name.into(), mesh, reynolds, initial, force, exact, pressure_gauge: true, dirichlet })
    }

    /// Kinematic viscosity `ν = 1/Re`.
    pub fn nu(&self) -> T {
        T::one() / self.reynolds
    }

    pub fn dirichlet(&self) -> &BTreeMap<BoundaryTag, VectorFieldFn<T>> {
        &self.dirichlet
    }

    /// Same problem with homogeneous Dirichlet data on every tag. The exact
    /// solution no longer applies and is dropped.
    pub fn with_no_slip(mut self) -> Self {
        for bc in self.dirichlet.values_mut() {
            *bc = zero_vector_field();
        }
        self.exact = None;
        self.name.push_str("_no_slip");
        self
    }
}

fn uniform_bc<T: Real>(mesh: &TriMesh<T>, g: &VectorFieldFn<T>) -> BTreeMap<BoundaryTag, VectorFieldFn<T>> {
    mesh.tags().into_iter().map(|t| (t, g.clone())).collect()
}

/// Taylor-Green velocity `e^{−2t/Re}(cos x sin y, −cos y sin x)`.
pub fn taylor_green_velocity<T: Real>(re: T) -> VectorFieldFn<T> {
    vector_field(move |x: [T; 2], t: T| {
        let decay = (-T::lit(2.0) * t / re).exp();
        [decay * x[0].cos() * x[1].sin(), -decay * x[1].cos() * x[0].sin()]
    })
}

/// Taylor-Green pressure `−¼ e^{−4t/Re}(cos 2x + cos 2y)`.
pub fn taylor_green_pressure<T: Real>(re: T) -> ScalarFieldFn<T> {
    scalar_field(move |x: [T; 2], t: T| {
        let two = T::lit(2.0);
        -T::lit(0.25) * (-T::lit(4.0) * t / re).exp() * ((two * x[0]).cos() + (two * x[1]).cos())
    })
}

/// Taylor-Green vortex on the given mesh: zero force, exact initial and
/// time-dependent boundary data.
pub fn taylor_green_problem<T: Real>(re: T, mesh: TriMesh<T>) -> Result<ProblemDef<T>, ProblemError> {
    let u = taylor_green_velocity(re);
    let p = taylor_green_pressure(re);
    let bc = uniform_bc(&mesh, &u);
    ProblemDef::new(
        "taylor_green",
        mesh,
        re,
        InitialCondition::Fields { velocity: u.clone(), pressure: p.clone() },
        bc,
        zero_vector_field(),
        Some(ExactSolution { velocity: u, pressure: p }),
    )
}

/// Taylor-Green vortex on the default 16×16 unit-square mesh.
pub fn taylor_green_default<T: Real>(re: T) -> Result<ProblemDef<T>, ProblemError> {
    taylor_green_problem(re, mesh::unit_square(16)?)
}

/// Manufactured velocity `e^t (cos y, sin x)`.
pub fn manufactured_velocity<T: Real>() -> VectorFieldFn<T> {
    vector_field(|x: [T; 2], t: T| {
        let e = t.exp();
        [e * x[1].cos(), e * x[0].sin()]
    })
}

/// Manufactured pressure `(x − y)(1 + t)`.
pub fn manufactured_pressure<T: Real>() -> ScalarFieldFn<T> {
    scalar_field(|x: [T; 2], t: T| (x[0] - x[1]) * (T::one() + t))
}

/// Body force of the manufactured solution for viscosity `nu`:
/// `(1+ν)eᵗ(cos y, sin x) + e²ᵗ(−sin x sin y, cos x cos y) + (1+t)(1, −1)`.
pub fn manufactured_force<T: Real>(nu: T) -> VectorFieldFn<T> {
    vector_field(move |x: [T; 2], t: T| {
        let e = t.exp();
        let e2 = e * e;
        let (sx, cx, sy, cy) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
        let grad_p = T::one() + t;
        [(T::one() + nu) * e * cy - e2 * sx * sy + grad_p, (T::one() + nu) * e * sx + e2 * cx * cy - grad_p]
    })
}

/// Manufactured solution on the given unit-square mesh with `Re = 1` and the
/// exact trace on every side.
pub fn manufactured_problem<T: Real>(mesh: TriMesh<T>) -> Result<ProblemDef<T>, ProblemError> {
    let re = T::one();
    let u = manufactured_velocity();
    let p = manufactured_pressure();
    let bc = uniform_bc(&mesh, &u);
    ProblemDef::new(
        "manufactured",
        mesh,
        re,
        InitialCondition::Fields { velocity: u.clone(), pressure: p.clone() },
        bc,
        manufactured_force(T::one() / re),
        Some(ExactSolution { velocity: u, pressure: p }),
    )
}

/// Counter-clockwise driving force `(−4y(1−x²−y²), 4x(1−x²−y²))`.
pub fn offset_circles_force<T: Real>() -> VectorFieldFn<T> {
    vector_field(|x: [T; 2], _t: T| {
        let four = T::lit(4.0);
        let s = T::one() - x[0] * x[0] - x[1] * x[1];
        [-four * x[1] * s, four * x[0] * s]
    })
}

pub const OFFSET_CIRCLES_RE: f64 = 1000.0;

/// Flow between the unit circle and a circle of radius 0.1 centred at
/// (1/2, 0), driven by [`offset_circles_force`], no-slip on both circles, and
/// initialised from the steady Stokes solution with unit viscosity (the
/// Stokes solution at `ν = 1/Re` would carry velocities of order `Re`).
pub fn offset_circles_problem<T: Real>(mesh: TriMesh<T>) -> Result<ProblemDef<T>, ProblemError> {
    let bc = uniform_bc(&mesh, &zero_vector_field());
    ProblemDef::new(
        "offset_circles",
        mesh,
        T::lit(OFFSET_CIRCLES_RE),
        InitialCondition::StokesSolve { viscosity: Some(T::one()) },
        bc,
        offset_circles_force(),
        None,
    )
}

/// Parabolic channel profile `(y(10 − y)/25, 0)`.
pub fn channel_profile<T: Real>() -> VectorFieldFn<T> {
    vector_field(|x: [T; 2], _t: T| [x[1] * (T::lit(10.0) - x[1]) / T::lit(25.0), T::zero()])
}

pub const CHANNEL_RE: f64 = 600.0;

/// Channel with a step on the lower wall: parabolic Dirichlet inflow (tag 4)
/// and outflow (tag 2), no-slip on the walls and step (tags 1, 3), initial
/// velocity equal to the profile and zero pressure.
pub fn channel_step_problem<T: Real>(mesh: TriMesh<T>) -> Result<ProblemDef<T>, ProblemError> {
    let profile = channel_profile();
    let mut bc = uniform_bc(&mesh, &zero_vector_field());
    bc.insert(2, profile.clone());
    bc.insert(4, profile.clone());
    ProblemDef::new(
        "channel_step",
        mesh,
        T::lit(CHANNEL_RE),
        InitialCondition::Fields { velocity: profile, pressure: zero_scalar_field() },
        bc,
        zero_vector_field(),
        None,
    )
}

/// Directory searched for mesh assets: `$HYBRID_NS_ASSET_DIR` if set, else
/// the `assets/` directory shipped with this crate.
pub fn default_asset_dir() -> PathBuf {
    std::env::var_os("HYBRID_NS_ASSET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("assets"))
}

/// Resolves `name` against `asset_dir` (or [`default_asset_dir`]) unless it
/// is absolute.
pub fn resolve_asset(name: impl AsRef<Path>, asset_dir: Option<&Path>) -> PathBuf {
    let name = name.as_ref();
    if name.is_absolute() {
        return name.to_path_buf();
    }
    asset_dir.map(Path::to_path_buf).unwrap_or_else(default_asset_dir).join(name)
}

/// Reads and parses a Gmsh mesh asset.
pub fn load_mesh_asset<T: Real>(name: impl AsRef<Path>, asset_dir: Option<&Path>) -> Result<TriMesh<T>, ProblemError> {
    let path = resolve_asset(name, asset_dir);
    let bytes = std::fs::read(&path).map_err(|source| ProblemError::Asset { path: path.clone(), source })?;
    Ok(mesh::parse_gmsh(&bytes)?)
}
