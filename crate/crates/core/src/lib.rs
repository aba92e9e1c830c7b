//! Taylor-Hood (P2/P1) finite elements for 2D incompressible flow with the
//! hybrid penalty / artificial-compression relaxation
//! `λ_t + 2β ∇·w_t + α² ∇·w = 0`, its penalty and artificial-compression
//! limits, and the benchmark studies built on them.
//!
//! The numerics are generic over the scalar type ([`scalar::Real`]); the
//! aliases below fix it to `f64`.

pub mod diagnostics;
pub mod fespace;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod schemes;
pub mod scalar;
pub mod studies;

pub type TriMesh = mesh::TriMesh<f64>;
pub type DofMap = fespace::DofMap<f64>;
pub type CsrMatrix = linalg::CsrMatrix<f64>;
pub type ProblemDef = problems::ProblemDef<f64>;
pub type Operators = schemes::Operators<f64>;
pub type SchemeConfig = schemes::SchemeConfig<f64>;
pub type State = schemes::State<f64>;
pub type StepDiagnostics = schemes::StepDiagnostics<f64>;
pub type TimeSeriesRecord = diagnostics::TimeSeriesRecord<f64>;
