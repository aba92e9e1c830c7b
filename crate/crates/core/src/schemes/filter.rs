use crate::scalar::Real;

/// `next − (μ/2)(next − 2·curr + prev)`, componentwise.
pub fn apply_time_filter<T: Real>(prev: &[T], curr: &[T], next: &[T], mu: T) -> Vec<T> {
    assert!(prev.len() == curr.len() && curr.len() == next.len(), "filter levels differ in length");
    let half_mu = T::lit(0.5) * mu;
    let two = T::lit(2.0);
    next.iter()
        .zip(curr)
        .zip(prev)
        .map(|((&n, &c), &p)| n - half_mu * (n - two * c + p))
        .collect()
}
