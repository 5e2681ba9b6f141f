//! Gauss–Hermite rules for expectations under the standard normal.

/// Largest supported rule; beyond it `e^{−x²/2}` at the outer nodes leaves
/// the double range.
pub const MAX_ORDER: usize = 512;

/// Nodes and weights such that `Σ w_i f(z_i) ≈ E f(Z)`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl NormalQuadrature {
    /// Builds an `order`-point rule from the roots of the Hermite functions,
    /// then rescales from weight `e^{−x²}` to the normal density.
    ///
    /// # Panics
    /// If `order` is 0 or exceeds [`MAX_ORDER`].
    pub fn new(order: usize) -> Self {
        assert!(
            (1..=MAX_ORDER).contains(&order),
            "quadrature order must be in 1..={MAX_ORDER}"
        );
        let (x, w) = gauss_hermite(order);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        Self {
            nodes: x.iter().map(|v| v * std::f64::consts::SQRT_2).collect(),
            weights: w.iter().map(|v| v / sqrt_pi).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }
}

/// `(ψ_n(z), √(2n)·ψ_{n−1}(z))` for the orthonormal Hermite functions
/// `ψ_k = h_k·e^{−z²/2}`. The second value is `ψ_n'(z)` at a root.
///
/// Carrying the Gaussian factor keeps the recurrence in range at large
/// orders, where the bare polynomials overflow.
fn hermite_function(n: usize, z: f64) -> (f64, f64) {
    const PI_M4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let (mut p1, mut p2) = (PI_M4 * (-0.5 * z * z).exp(), 0.0f64);
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Physicists' Gauss–Hermite nodes (descending) and weights.
///
/// Positive roots are bracketed by a sign scan whose step is well below the
/// smallest root spacing (`≈ π/√(2n)`), then bisected to adjacent floats.
/// Weights are `2/h_n'(z)²`, i.e. `2e^{−z²}/ψ_n'(z)²`.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const STEP: f64 = 0.005;
    let half = n / 2;
    let mut roots = Vec::with_capacity(n.div_ceil(2));
    if n % 2 == 1 {
        roots.push(0.0);
    }
    let z_max = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    let mut a = 0.5 * STEP;
    let mut fa = hermite_function(n, a).0;
    while roots.len() < n.div_ceil(2) && a < z_max {
        let b = a + STEP;
        let fb = hermite_function(n, b).0;
        if fa == 0.0 {
            roots.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            let (mut lo, mut hi, flo) = (a, b, fa);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if hermite_function(n, mid).0.signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    assert_eq!(
        roots.len(),
        n.div_ceil(2),
        "missed a Hermite root at order {n}"
    );
    debug_assert!(half + n % 2 == roots.len());

    // descending: largest positive root first
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (i, &z) in roots.iter().rev().enumerate() {
        let d = hermite_function(n, z).1;
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 * (-z * z).exp() / (d * d);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_moments_are_exact() {
        for order in [8, 64, 128, 256, 512] {
            let q = NormalQuadrature::new(order);
            assert!((q.expect(|_| 1.0) - 1.0).abs() < 1e-13, "order {order}");
            assert!(q.expect(|z| z).abs() < 1e-13);
            assert!((q.expect(|z| z * z) - 1.0).abs() < 1e-12);
            assert!((q.expect(|z| z.powi(4)) - 3.0).abs() < 1e-11);
        }
    }

    #[test]
    fn odd_order_has_zero_node() {
        let q = NormalQuadrature::new(5);
        assert!(q.nodes()[2].abs() < 1e-15);
        assert!((q.expect(|z| z.powi(8)) - 105.0).abs() < 1e-9);
    }

    #[test]
    fn smooth_expectation() {
        // E cos(Z) = e^{-1/2}
        let q = NormalQuadrature::new(64);
        assert!((q.expect(f64::cos) - (-0.5f64).exp()).abs() < 1e-14);
    }
}
