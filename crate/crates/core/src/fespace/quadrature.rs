use crate::scalar::Real;

/// Quadrature on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`.
///
/// Points are barycentric `(1 − ξ − η, ξ, η)`; weights sum to the reference
/// area 1/2, so the physical rule on a triangle of area `|T|` uses
/// `2|T|·wᵢ`.
#[derive(Clone, Debug)]
pub struct QuadratureRule<T> {
    pub points: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    /// Seven-point rule, exact for polynomials of total degree ≤ 5.
    pub fn degree5() -> Self {
        let s15 = 15f64.sqrt();
        let a = (6.0 - s15) / 21.0;
        let b = (6.0 + s15) / 21.0;
        let wa = (155.0 - s15) / 2400.0;
        let wb = (155.0 + s15) / 2400.0;
        let third = 1.0 / 3.0;
        let raw: [([f64; 3], f64); 7] = [
            ([third, third, third], 9.0 / 80.0),
            ([1.0 - 2.0 * a, a, a], wa),
            ([a, 1.0 - 2.0 * a, a], wa),
            ([a, a, 1.0 - 2.0 * a], wa),
            ([1.0 - 2.0 * b, b, b], wb),
            ([b, 1.0 - 2.0 * b, b], wb),
            ([b, b, 1.0 - 2.0 * b], wb),
        ];
        Self {
            points: raw.iter().map(|(p, _)| p.map(T::lit)).collect(),
            weights: raw.iter().map(|&(_, w)| T::lit(w)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `∫_T̂ f(ξ, η)`.
    pub fn integrate_reference(&self, f: impl Fn(T, T) -> T) -> T {
        self.points.iter().zip(&self.weights).map(|(p, &w)| w * f(p[1], p[2])).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn exact_for_degree_five_monomials() {
        let rule = QuadratureRule::<f64>::degree5();
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 0.5).abs() < 1e-15);
        for a in 0..=5u32 {
            for b in 0..=(5 - a) {
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                let got = rule.integrate_reference(|x, y| x.powi(a as i32) * y.powi(b as i32));
                assert!((got - exact).abs() < 1e-15, "x^{a} y^{b}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn not_exact_at_degree_six() {
        let rule = QuadratureRule::<f64>::degree5();
        let exact = factorial(6) / factorial(8);
        let got = rule.integrate_reference(|x, _| x.powi(6));
        assert!((got - exact).abs() > 1e-8);
    }
}
