//! Quadrature rules shared by the frequency and coefficient code.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are the roots of `P_n`, found by Newton iteration from the
    /// Chebyshev-like initial guess. Nodes come out in increasing order and
    /// are exactly antisymmetric (`x_i = -x_{n-1-i}`).
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(m + c * x);
        }
        s * c
    }

    /// Mapped nodes and weights for `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (m + c * x, w * c))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Uniform angles covering the double cover `[0, 4π)`.
pub fn double_cover_angles(count: usize) -> impl Iterator<Item = f64> {
    let step = 4.0 * PI / count as f64;
    (0..count).map(move |j| j as f64 * step)
}

/// Trapezoid rule over a full circle for a 2π- or 4π-periodic integrand,
/// sampled on the double cover and halved, so the result is the integral over
/// one physical turn.
pub fn circle_trapezoid<F: FnMut(f64) -> f64>(count: usize, mut f: F) -> f64 {
    let step = 4.0 * PI / count as f64;
    let mut s = 0.0;
    for theta in double_cover_angles(count) {
        s += f(theta);
    }
    0.5 * s * step
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for order in [1usize, 2, 5, 16] {
            let gl = GaussLegendre::new(order);
            let deg = 2 * order - 1;
            for p in 0..=deg {
                let got = gl.integrate(-1.0, 1.0, |x| x.powi(p as i32));
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "order {order} p {p}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn nodes_are_antisymmetric() {
        let gl = GaussLegendre::new(16);
        for i in 0..16 {
            assert_eq!(gl.nodes[i], -gl.nodes[15 - i]);
            assert_eq!(gl.weights[i], gl.weights[15 - i]);
        }
    }

    #[test]
    fn circle_trapezoid_integrates_trig() {
        let v = circle_trapezoid(64, |t| (1.5 * t).sin().powi(2));
        assert!((v - PI).abs() < 1e-13);
    }
}
