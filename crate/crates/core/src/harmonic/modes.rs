//! Analytic symmetric two-valued functions on the plane.

use crate::error::{Error, Result};

/// A symmetric two-valued function `{±φ}` known in closed form.
///
/// `eval` returns one representative value and its gradient (layout `2k`,
/// entry `i * k + κ` is `∂_i φ^κ`). Which sheet is returned is unspecified;
/// consumers only use sheet-independent quantities or pair distances.
pub trait SymmetricFn: Send + Sync {
    fn k(&self) -> usize;

    fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<f64>);

    /// `(|φ|^2, |Dφ|^2)` at `x`.
    fn sq_norms(&self, x: [f64; 2]) -> (f64, f64) {
        let (v, g) = self.eval(x);
        (v.iter().map(|a| a * a).sum(), g.iter().map(|a| a * a).sum())
    }
}

/// `{± r^{m/2}(a cos(mθ/2) + b sin(mθ/2))}` with `m` odd.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousMode {
    pub m: u32,
    pub a: f64,
    pub b: f64,
}

pub fn homogeneous_mode(m: i64, a: f64, b: f64) -> Result<HomogeneousMode> {
    if m < 1 || m % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "mode index {m} must be an odd positive integer"
        )));
    }
    Ok(HomogeneousMode { m: m as u32, a, b })
}

impl HomogeneousMode {
    pub fn degree(&self) -> f64 {
        self.m as f64 / 2.0
    }

    /// Value at polar coordinates on the double cover, `θ ∈ [0, 4π)`.
    pub fn eval_polar(&self, r: f64, theta: f64) -> f64 {
        let half = 0.5 * self.m as f64;
        let (s, c) = (half * theta).sin_cos();
        r.powf(half) * (self.a * c + self.b * s)
    }

    /// `(φ, ∂_r φ, r^{-1} ∂_θ φ)` at polar coordinates.
    pub fn eval_polar_with_derivatives(&self, r: f64, theta: f64) -> (f64, f64, f64) {
        let half = 0.5 * self.m as f64;
        let (s, c) = (half * theta).sin_cos();
        let rp = r.powf(half);
        let ang = self.a * c + self.b * s;
        let dang = half * (self.b * c - self.a * s);
        let inv = if r > 0.0 { rp / r } else { 0.0 };
        (rp * ang, half * inv * ang, inv * dang)
    }
}

fn polar_to_cartesian_gradient(theta: f64, dr: f64, dt: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * dr - s * dt, s * dr + c * dt]
}

impl SymmetricFn for HomogeneousMode {
    fn k(&self) -> usize {
        1
    }

    fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]);
        let (v, dr, dt) = self.eval_polar_with_derivatives(r, theta);
        let g = polar_to_cartesian_gradient(theta, dr, dt);
        (vec![v], g.to_vec())
    }
}

/// A finite sum of homogeneous modes, one scalar component.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeSum {
    pub terms: Vec<HomogeneousMode>,
}

impl ModeSum {
    pub fn new(terms: Vec<HomogeneousMode>) -> Self {
        Self { terms }
    }

    /// Smallest mode index with a nonzero coefficient.
    pub fn lowest_mode(&self) -> Option<u32> {
        self.terms
            .iter()
            .filter(|t| t.a != 0.0 || t.b != 0.0)
            .map(|t| t.m)
            .min()
    }

    pub fn eval_polar_with_derivatives(&self, r: f64, theta: f64) -> (f64, f64, f64) {
        let mut out = (0.0, 0.0, 0.0);
        for t in &self.terms {
            let (v, dr, dt) = t.eval_polar_with_derivatives(r, theta);
            out.0 += v;
            out.1 += dr;
            out.2 += dt;
        }
        out
    }
}

impl SymmetricFn for ModeSum {
    fn k(&self) -> usize {
        1
    }

    fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]);
        let (v, dr, dt) = self.eval_polar_with_derivatives(r, theta);
        (vec![v], polar_to_cartesian_gradient(theta, dr, dt).to_vec())
    }
}

/// Vector-valued symmetric function whose components are mode sums. All
/// components share the same angle, so the representative is consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorModes {
    pub components: Vec<ModeSum>,
}

impl VectorModes {
    /// The canonical branched example `{± z^{3/2}}` as an `R^2`-valued
    /// function (real and imaginary parts).
    pub fn canonical_branch() -> Self {
        Self {
            components: vec![
                ModeSum::new(vec![HomogeneousMode { m: 3, a: 1.0, b: 0.0 }]),
                ModeSum::new(vec![HomogeneousMode { m: 3, a: 0.0, b: 1.0 }]),
            ],
        }
    }
}

impl SymmetricFn for VectorModes {
    fn k(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        let k = self.components.len();
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]);
        let mut v = vec![0.0; k];
        let mut g = vec![0.0; 2 * k];
        for (kap, c) in self.components.iter().enumerate() {
            let (val, dr, dt) = c.eval_polar_with_derivatives(r, theta);
            let gr = polar_to_cartesian_gradient(theta, dr, dt);
            v[kap] = val;
            g[kap] = gr[0];
            g[k + kap] = gr[1];
        }
        (v, g)
    }
}

/// The constant pair `{±c}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSymmetric {
    pub value: Vec<f64>,
}

impl SymmetricFn for ConstantSymmetric {
    fn k(&self) -> usize {
        self.value.len()
    }

    fn eval(&self, _x: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        (self.value.clone(), vec![0.0; 2 * self.value.len()])
    }
}

/// `x ↦ scale · φ(center + σ x)`.
pub struct Rescaled<'a> {
    pub inner: &'a dyn SymmetricFn,
    pub center: [f64; 2],
    pub sigma: f64,
    pub scale: f64,
}

impl SymmetricFn for Rescaled<'_> {
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        let y = [self.center[0] + self.sigma * x[0], self.center[1] + self.sigma * x[1]];
        let (v, g) = self.inner.eval(y);
        (
            v.into_iter().map(|a| self.scale * a).collect(),
            g.into_iter().map(|a| self.scale * self.sigma * a).collect(),
        )
    }
}

/// Pair-distance sup-norm `max_x min_± |f(x) ∓ g(x)|` over sample points.
pub fn sup_distance(f: &dyn SymmetricFn, g: &dyn SymmetricFn, points: &[[f64; 2]]) -> f64 {
    let mut best: f64 = 0.0;
    for &x in points {
        let (a, _) = f.eval(x);
        let (b, _) = g.eval(x);
        let minus: f64 = a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum();
        let plus: f64 = a.iter().zip(&b).map(|(p, q)| (p + q) * (p + q)).sum();
        best = best.max(minus.min(plus).sqrt());
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoval::diff::polar_laplacian;
    use crate::twoval::grid::PolarGrid;
    use std::f64::consts::PI;

    #[test]
    fn mode_three_at_sixty_degrees() {
        let m = homogeneous_mode(3, 0.0, 1.0).unwrap();
        assert!((m.eval_polar(1.0, PI / 3.0) - 1.0).abs() < 1e-15);
        assert!(homogeneous_mode(2, 1.0, 0.0).is_err());
        assert!(homogeneous_mode(-1, 1.0, 0.0).is_err());
    }

    #[test]
    fn mode_is_antiperiodic_on_the_double_cover() {
        let m = homogeneous_mode(5, 0.3, -1.2).unwrap();
        for j in 0..10 {
            let t = 0.37 * j as f64;
            assert!((m.eval_polar(0.7, t) + m.eval_polar(0.7, t + 2.0 * PI)).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = VectorModes::canonical_branch();
        let x = [0.3, -0.4];
        let (_, g) = f.eval(x);
        let e = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += e;
            xm[i] -= e;
            let (vp, _) = f.eval(xp);
            let (vm, _) = f.eval(xm);
            for kap in 0..2 {
                let fd = (vp[kap] - vm[kap]) / (2.0 * e);
                assert!((fd - g[i * 2 + kap]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn laplacian_of_mode_five_converges_at_second_order() {
        let m = homogeneous_mode(5, 1.0, 0.0).unwrap();
        let mut errs = Vec::new();
        for level in 0..3 {
            let nr = 10 * (1 << level) + 1;
            let nt = 64 * (1 << level);
            let g = PolarGrid::new(0.5, 1.0, nr, nt).unwrap();
            let vals: Vec<f64> = (0..g.len())
                .map(|i| {
                    let (r, t) = g.polar(i);
                    m.eval_polar(r, t)
                })
                .collect();
            let lap = polar_laplacian(&vals, &g).unwrap();
            errs.push(lap.iter().filter(|v| v.is_finite()).fold(0.0f64, |a, v| a.max(v.abs())));
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 1.7, "{errs:?}");
        }
    }
}
