//! JSON run configuration, `--set` overrides, and the translation into
//! library objects. Every validation failure here is a configuration error.

use std::path::{Path, PathBuf};

use hybrid_ns::linalg::{EigenBoundary, SolverOptions};
use hybrid_ns::mesh::{generate_channel_step_mesh, unit_square, TriMesh};
use hybrid_ns::problems::{
    channel_step_problem, load_mesh_asset, manufactured_problem, offset_circles_problem, taylor_green_problem,
    ProblemDef,
};
use hybrid_ns::schemes::{Method, SchemeConfig, TimeDiscretization};
use hybrid_ns::studies::ParameterCoupling;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Top-level configuration shared by every subcommand. Unset fields take
/// the defaults of the subcommand that reads them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub mesh: Option<MeshConfig>,
    pub scheme: SchemeSection,
    pub parameter_coupling: Option<CouplingConfig>,
    /// Final time `T`.
    pub t_final: Option<f64>,
    pub output_dir: Option<PathBuf>,
    /// Write a VTK snapshot every this many steps (0 disables).
    pub snapshots_every: usize,
    pub convergence: ConvergenceSection,
    pub damping: DampingSection,
    pub eigen: EigenSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    TaylorGreen,
    Manufactured,
    OffsetCircles,
    ChannelStep,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub name: Option<ProblemName>,
    /// Overrides the benchmark's Reynolds number.
    pub reynolds: Option<f64>,
    /// Replace all boundary data by no-slip.
    pub no_slip: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshConfig {
    UnitSquare { n: usize },
    ChannelStep { nx: usize, ny: usize },
    /// Gmsh file; relative paths resolve against the asset directory.
    Asset { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub method: Option<String>,
    pub dt: Option<f64>,
    /// Filter strength for the filtered methods.
    pub mu: f64,
    pub tol: f64,
    pub inner_tol: f64,
    /// Iteration cap of the outer solves.
    pub max_iter: Option<usize>,
    pub restart: usize,
    pub bc_time_frozen: bool,
}

impl Default for SchemeSection {
    fn default() -> Self {
        let solver = SolverOptions::default();
        Self {
            method: None,
            dt: None,
            mu: hybrid_ns::schemes::DEFAULT_MU,
            tol: solver.tol,
            inner_tol: hybrid_ns::schemes::DEFAULT_INNER_TOL,
            max_iter: solver.max_iter,
            restart: solver.restart,
            bc_time_frozen: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingConfig {
    ReciprocalDt,
    ReciprocalDt2,
    ProportionalDt,
    Explicit { alpha2: f64, beta: f64 },
}

impl From<CouplingConfig> for ParameterCoupling {
    fn from(c: CouplingConfig) -> Self {
        match c {
            CouplingConfig::ReciprocalDt => Self::ReciprocalDt,
            CouplingConfig::ReciprocalDt2 => Self::ReciprocalDt2,
            CouplingConfig::ProportionalDt => Self::ProportionalDt,
            CouplingConfig::Explicit { alpha2, beta } => Self::Explicit { alpha2, beta },
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub dts: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DampingSection {
    /// `be`, `be_filtered` or `trapezoidal`.
    pub time: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenBoundaryName {
    #[default]
    Neumann,
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenSection {
    pub boundary: EigenBoundaryName,
    pub rel_tol: f64,
}

impl Default for EigenSection {
    fn default() -> Self {
        Self { boundary: EigenBoundaryName::Neumann, rel_tol: 1e-8 }
    }
}

impl From<EigenBoundaryName> for EigenBoundary {
    fn from(b: EigenBoundaryName) -> Self {
        match b {
            EigenBoundaryName::Neumann => Self::NeumannZeroMean,
            EigenBoundaryName::Dirichlet => Self::Dirichlet,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

/// Reads the configuration file (or starts from `{}`), applies the
/// `key.path=value` overrides, and deserializes the result.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::new(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| ConfigError::new(format!("invalid JSON in {}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    serde_json::from_value(value).map_err(|e| ConfigError::new(format!("invalid configuration: {e}")))
}

/// Sets a dotted key to a value. The value is parsed as JSON when possible
/// and taken as a string otherwise, so `method=pp_be` needs no quotes.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::new(format!("override `{spec}` is not of the form key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new(format!("override key `{key}` has an empty component")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::new(format!("override `{key}`: `{part}` is inside a non-object")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| ConfigError::new(format!("override `{key}` addresses a field of a non-object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn problem_name(&self, default: ProblemName) -> ProblemName {
        self.problem.name.unwrap_or(default)
    }

    pub fn method(&self, default: Method) -> Result<Method, ConfigError> {
        match &self.scheme.method {
            Some(m) => m.parse().map_err(ConfigError::new),
            None => Ok(default),
        }
    }

    pub fn dt(&self, default: f64) -> Result<f64, ConfigError> {
        positive("scheme.dt", self.scheme.dt.unwrap_or(default))
    }

    pub fn t_final(&self, default: f64) -> Result<f64, ConfigError> {
        positive("t_final", self.t_final.unwrap_or(default))
    }

    pub fn coupling(&self, default: ParameterCoupling) -> Result<ParameterCoupling, ConfigError> {
        let c = self.parameter_coupling.map(ParameterCoupling::from).unwrap_or(default);
        if let ParameterCoupling::Explicit { alpha2, beta } = c {
            positive("parameter_coupling.explicit.alpha2", alpha2)?;
            positive("parameter_coupling.explicit.beta", beta)?;
        }
        Ok(c)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("output"))
    }

    pub fn damping_time(&self) -> Result<TimeDiscretization, ConfigError> {
        match &self.damping.time {
            Some(t) => t.parse().map_err(ConfigError::new),
            None => Ok(TimeDiscretization::BackwardEuler),
        }
    }

    pub fn solver_options(&self) -> Result<(SolverOptions, SolverOptions), ConfigError> {
        let s = &self.scheme;
        for (name, tol) in [("scheme.tol", s.tol), ("scheme.inner_tol", s.inner_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(ConfigError::new(format!("{name} must lie in (0, 1), got {tol}")));
            }
        }
        if s.restart == 0 {
            return Err(ConfigError::new("scheme.restart must be positive"));
        }
        let outer = SolverOptions { tol: s.tol, max_iter: s.max_iter, restart: s.restart };
        let inner = SolverOptions { tol: s.inner_tol, max_iter: None, restart: s.restart };
        Ok((outer, inner))
    }

    /// Mesh from the configuration, or the problem's default mesh.
    pub fn build_mesh(&self, problem: ProblemName, default_n: usize) -> Result<TriMesh<f64>, ConfigError> {
        let mesh = self.mesh.clone().unwrap_or(match problem {
            ProblemName::TaylorGreen | ProblemName::Manufactured => MeshConfig::UnitSquare { n: default_n },
            ProblemName::OffsetCircles => MeshConfig::Asset { path: PathBuf::from("offset_circles.msh") },
            ProblemName::ChannelStep => MeshConfig::ChannelStep { nx: 80, ny: 20 },
        });
        match mesh {
            MeshConfig::UnitSquare { n } => unit_square(n).map_err(|e| ConfigError::new(format!("mesh: {e}"))),
            MeshConfig::ChannelStep { nx, ny } => {
                generate_channel_step_mesh(nx, ny).map_err(|e| ConfigError::new(format!("mesh: {e}")))
            }
            MeshConfig::Asset { path } => load_mesh_asset(&path, None).map_err(|e| ConfigError::new(e.to_string())),
        }
    }

    /// Benchmark problem with the configured overrides applied.
    pub fn build_problem(&self, default: ProblemName, default_n: usize) -> Result<ProblemDef<f64>, ConfigError> {
        let name = self.problem_name(default);
        let mesh = self.build_mesh(name, default_n)?;
        let re = self.problem.reynolds.map(|r| positive("problem.reynolds", r)).transpose()?;
        let problem = match name {
            ProblemName::TaylorGreen => taylor_green_problem(re.unwrap_or(1.0), mesh),
            ProblemName::Manufactured => {
                if re.is_some_and(|r| r != 1.0) {
                    return Err(ConfigError::new("the manufactured problem is defined for Reynolds number 1 only"));
                }
                manufactured_problem(mesh)
            }
            ProblemName::OffsetCircles => offset_circles_problem(mesh).map(|mut p| {
                p.reynolds = re.unwrap_or(p.reynolds);
                p
            }),
            ProblemName::ChannelStep => channel_step_problem(mesh).map(|mut p| {
                p.reynolds = re.unwrap_or(p.reynolds);
                p
            }),
        }
        .map_err(|e| ConfigError::new(format!("problem: {e}")))?;
        Ok(if self.problem.no_slip { problem.with_no_slip() } else { problem })
    }

    /// Scheme parameters for `problem`, validated.
    pub fn build_scheme(
        &self,
        problem: &ProblemDef<f64>,
        method: Method,
        dt: f64,
        coupling: ParameterCoupling,
    ) -> Result<SchemeConfig<f64>, ConfigError> {
        let mut config = hybrid_ns::studies::scheme_for(problem, method, dt, coupling);
        config.mu = self.scheme.mu;
        (config.solver, config.inner) = self.solver_options()?;
        config.bc_time_frozen = self.scheme.bc_time_frozen;
        config.validate().map_err(|e| ConfigError::new(e.to_string()))?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let c = load(None, &[]).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn overrides_create_nested_objects() {
        let c = load(None, &["scheme.dt=0.05".into(), "scheme.method=pp_be".into(), "mesh={\"kind\":\"unit_square\",\"n\":4}".into()])
            .unwrap();
        assert_eq!(c.scheme.dt, Some(0.05));
        assert_eq!(c.method(Method::AcBe).unwrap(), Method::PpBe);
        assert_eq!(c.mesh, Some(MeshConfig::UnitSquare { n: 4 }));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load(None, &["scheme.dtt=0.1".into()]).unwrap_err();
        assert!(err.0.contains("dtt"), "{err}");
        assert!(load(None, &["bogus=1".into()]).is_err());
    }

    #[test]
    fn coupling_forms() {
        let c = load(None, &["parameter_coupling=reciprocal_dt2".into()]).unwrap();
        assert_eq!(c.coupling(ParameterCoupling::ReciprocalDt).unwrap(), ParameterCoupling::ReciprocalDt2);
        let c = load(None, &["parameter_coupling={\"explicit\":{\"alpha2\":2,\"beta\":3}}".into()]).unwrap();
        assert_eq!(
            c.coupling(ParameterCoupling::ReciprocalDt).unwrap(),
            ParameterCoupling::Explicit { alpha2: 2.0, beta: 3.0 }
        );
        let c = load(None, &["parameter_coupling={\"explicit\":{\"alpha2\":-2,\"beta\":3}}".into()]).unwrap();
        assert!(c.coupling(ParameterCoupling::ReciprocalDt).is_err());
    }

    #[test]
    fn malformed_override() {
        assert!(load(None, &["no_equals_sign".into()]).is_err());
        assert!(load(None, &["a..b=1".into()]).is_err());
    }

    #[test]
    fn manufactured_rejects_reynolds_override() {
        let c = load(None, &["problem.name=manufactured".into(), "problem.reynolds=5".into()]).unwrap();
        assert!(c.build_problem(ProblemName::TaylorGreen, 2).is_err());
    }

    /// The published schema lists exactly the keys the deserializer accepts.
    #[test]
    fn schema_matches_config_keys() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/run_config.schema.json");
        let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let keys = |v: &Value| {
            let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
            k.sort();
            k
        };
        let config = serde_json::to_value(RunConfig::default()).unwrap();
        let props = &schema["properties"];
        assert_eq!(keys(&config), keys(props));
        for section in ["problem", "scheme", "convergence", "damping", "eigen"] {
            assert_eq!(keys(&config[section]), keys(&props[section]["properties"]), "{section}");
        }
        let methods: Vec<&str> = props["scheme"]["properties"]["method"]["enum"]
            .as_array()
            .unwrap()
            .iter()
            .filter_map(Value::as_str)
            .collect();
        assert_eq!(methods, Method::ALL.iter().map(|m| m.name()).collect::<Vec<_>>());
    }
}
