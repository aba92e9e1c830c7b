//! Taylor-Hood (P2 velocity / P1 pressure) discretization: quadrature,
//! reference elements, dof layout and assembly of every operator used by the
//! time steppers.

mod assembly;
mod dofmap;
pub mod element;
mod fields;
mod quadrature;

pub use assembly::{
    assemble_convection, assemble_convection_into, assemble_divergence, assemble_graddiv, assemble_load,
    assemble_pressure_mass, assemble_pressure_stiffness, assemble_stiffness, assemble_velocity_mass,
    eval_divergence, eval_pressure, eval_velocity, integrate, project_pressure, velocity_pattern,
};
pub use dofmap::DofMap;
pub use fields::{
    interpolate_pressure, interpolate_velocity, scalar_field, vector_field, zero_scalar_field, zero_vector_field,
    ScalarFieldFn, VectorFieldFn,
};
pub use quadrature::QuadratureRule;
