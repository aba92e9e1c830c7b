use std::sync::Arc;

use crate::scalar::Real;

use super::DofMap;

/// Time-dependent analytic vector field `(x, t) ↦ [u, v]`.
pub type VectorFieldFn<T> = Arc<dyn Fn([T; 2], T) -> [T; 2] + Send + Sync>;
/// Time-dependent analytic scalar field `(x, t) ↦ p`.
pub type ScalarFieldFn<T> = Arc<dyn Fn([T; 2], T) -> T + Send + Sync>;

pub fn vector_field<T, F>(f: F) -> VectorFieldFn<T>
where
    F: Fn([T; 2], T) -> [T; 2] + Send + Sync + 'static,
{
    Arc::new(f)
}

pub fn scalar_field<T, F>(f: F) -> ScalarFieldFn<T>
where
    F: Fn([T; 2], T) -> T + Send + Sync + 'static,
{
    Arc::new(f)
}

pub fn zero_vector_field<T: Real>() -> VectorFieldFn<T> {
    vector_field(|_, _| [T::zero(), T::zero()])
}

pub fn zero_scalar_field<T: Real>() -> ScalarFieldFn<T> {
    scalar_field(|_, _| T::zero())
}

/// Nodal P2 interpolant of a vector field at time `t`.
pub fn interpolate_velocity<T: Real>(dofmap: &DofMap<T>, g: &VectorFieldFn<T>, t: T) -> Vec<T> {
    let n = dofmap.n_scalar();
    let mut out = vec![T::zero(); 2 * n];
    for (s, &x) in dofmap.node_coords().iter().enumerate() {
        let [u, v] = g(x, t);
        out[s] = u;
        out[s + n] = v;
    }
    out
}

/// Nodal P1 interpolant of a scalar field at time `t`.
pub fn interpolate_pressure<T: Real>(dofmap: &DofMap<T>, g: &ScalarFieldFn<T>, t: T) -> Vec<T> {
    dofmap.node_coords()[..dofmap.n_pressure()].iter().map(|&x| g(x, t)).collect()
}
