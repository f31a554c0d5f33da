//! Modified frequency `N̂ = I/H_μ` for divergence-form equations with
//! radially normalized coefficients, and the two basic identities behind
//! its almost-monotonicity.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::harmonic::SymmetricFn;
use crate::quadrature::GaussLegendre;

use super::coefficients::MatrixField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedOptions {
    pub angular: usize,
    pub radial_order: usize,
    /// Allowed `|Â y − μ y| / |y|` on sampled circles.
    pub normalization_tol: f64,
}

impl Default for ModifiedOptions {
    fn default() -> Self {
        Self {
            angular: 256,
            radial_order: 16,
            normalization_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedFrequencyProfile {
    pub center: [f64; 2],
    pub radii: Vec<f64>,
    /// `I(ρ) = ρ^{2-n} ∫_{∂B_ρ} μ v·v_r`.
    pub i: Vec<f64>,
    /// `H_μ(ρ) = ρ^{1-n} ∫_{∂B_ρ} μ |v|²`.
    pub h_mu: Vec<f64>,
    /// `ρ^{1-n} ∫_{∂B_ρ} |v|²`.
    pub h: Vec<f64>,
    pub n_hat: Vec<f64>,
    /// `D(ρ) = ρ^{2-n} ∫_{B_ρ} Â^{ij} v_i·v_j`.
    pub d: Vec<f64>,
    /// Mean of `μ` over each circle.
    pub mu: Vec<f64>,
    pub err: Vec<f64>,
}

impl ModifiedFrequencyProfile {
    /// Smallest `C` with `(1 − Cρ) D ≤ I ≤ (1 + Cρ) D` at every radius.
    pub fn comparability_constant(&self) -> f64 {
        self.radii
            .iter()
            .zip(self.i.iter().zip(&self.d))
            .map(|(r, (i, d))| (i / d - 1.0).abs() / r)
            .fold(0.0, f64::max)
    }
}

struct CircleSums {
    i: f64,
    h_mu: f64,
    h: f64,
    mu: f64,
}

fn circle_sums(
    v: &dyn SymmetricFn,
    a: &dyn MatrixField,
    center: [f64; 2],
    rho: f64,
    count: usize,
    tol: Option<(f64, usize)>,
) -> Result<CircleSums> {
    let step = 2.0 * PI / count as f64;
    let k = v.k();
    let mut s = CircleSums {
        i: 0.0,
        h_mu: 0.0,
        h: 0.0,
        mu: 0.0,
    };
    for j in 0..count {
        let (st, ct) = (j as f64 * step).sin_cos();
        let y = [rho * ct, rho * st];
        let x = [center[0] + y[0], center[1] + y[1]];
        let mu = a.radial_weight(y);
        if let Some((tol, base)) = tol {
            let ay = a.eval(y) * Vector2::new(y[0], y[1]);
            let defect = (ay - Vector2::new(y[0], y[1]) * mu).norm() / rho;
            if defect > tol {
                return Err(Error::NormalizationViolated { node: base + j, defect });
            }
        }
        let (val, g) = v.eval(x);
        let mut vv = 0.0;
        let mut vr = 0.0;
        for c in 0..k {
            vv += val[c] * val[c];
            vr += val[c] * (g[c] * ct + g[k + c] * st);
        }
        s.i += mu * vr;
        s.h_mu += mu * vv;
        s.h += vv;
        s.mu += mu;
    }
    s.i *= step * rho;
    s.h_mu *= step;
    s.h *= step;
    s.mu /= count as f64;
    Ok(s)
}

/// `∫_0^{2π} Â^{ij} v_i·v_j dθ` on the circle of radius `s`.
fn energy_density(v: &dyn SymmetricFn, a: &dyn MatrixField, center: [f64; 2], s: f64, count: usize) -> f64 {
    let step = 2.0 * PI / count as f64;
    let k = v.k();
    let mut acc = 0.0;
    for j in 0..count {
        let (st, ct) = (j as f64 * step).sin_cos();
        let y = [s * ct, s * st];
        let m = a.eval(y);
        let (_, g) = v.eval([center[0] + y[0], center[1] + y[1]]);
        for c in 0..k {
            let (gx, gy) = (g[c], g[k + c]);
            acc += m[(0, 0)] * gx * gx + (m[(0, 1)] + m[(1, 0)]) * gx * gy + m[(1, 1)] * gy * gy;
        }
    }
    acc * step
}

/// `ρ^{2-n} ∫_{B_ρ} Â Dv·Dv` by Gauss–Legendre over `segments` equal
/// radial pieces.
fn dirichlet(
    v: &dyn SymmetricFn,
    a: &dyn MatrixField,
    center: [f64; 2],
    rho: f64,
    gl: &GaussLegendre,
    count: usize,
    segments: usize,
) -> f64 {
    let mut acc = 0.0;
    for s in 0..segments {
        let lo = rho * s as f64 / segments as f64;
        let hi = rho * (s + 1) as f64 / segments as f64;
        for (r, w) in gl.mapped(lo, hi) {
            acc += w * r * energy_density(v, a, center, r, count);
        }
    }
    acc
}

/// Modified frequency profile of `v` about `center`. The coefficient field
/// is evaluated at `y = x − center` and must satisfy `Â(y) y = μ(y) y`.
pub fn modified_frequency(
    v: &dyn SymmetricFn,
    a: &dyn MatrixField,
    center: [f64; 2],
    radii: &[f64],
    opts: &ModifiedOptions,
) -> Result<ModifiedFrequencyProfile> {
    if radii.is_empty() {
        return Err(Error::Empty("radii"));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "radii must be positive and strictly increasing".into(),
        ));
    }
    let gl = GaussLegendre::new(opts.radial_order);
    let mut sums = Vec::with_capacity(radii.len());
    for (ri, &r) in radii.iter().enumerate() {
        sums.push(circle_sums(
            v,
            a,
            center,
            r,
            opts.angular,
            Some((opts.normalization_tol, ri * opts.angular)),
        )?);
    }
    let peak = sums.iter().map(|s| s.h_mu).fold(0.0, f64::max);
    for (&r, s) in radii.iter().zip(&sums) {
        if !(s.h_mu > 1e-14 * peak) || peak == 0.0 {
            return Err(Error::DegenerateRadius { rho: r });
        }
    }
    let mut d = Vec::with_capacity(radii.len());
    let mut acc = 0.0;
    let mut lo = 0.0;
    for &hi in radii {
        for (s, w) in gl.mapped(lo, hi) {
            acc += w * s * energy_density(v, a, center, s, opts.angular);
        }
        d.push(acc);
        lo = hi;
    }
    let mut err = Vec::with_capacity(radii.len());
    for (&r, s) in radii.iter().zip(&sums) {
        let coarse = circle_sums(v, a, center, r, opts.angular / 2, None)?;
        let n = s.i / s.h_mu;
        let nc = coarse.i / coarse.h_mu;
        err.push((n - nc).abs() + 1e-14 * (1.0 + n.abs()));
    }
    Ok(ModifiedFrequencyProfile {
        center,
        radii: radii.to_vec(),
        n_hat: sums.iter().map(|s| s.i / s.h_mu).collect(),
        i: sums.iter().map(|s| s.i).collect(),
        h_mu: sums.iter().map(|s| s.h_mu).collect(),
        h: sums.iter().map(|s| s.h).collect(),
        mu: sums.iter().map(|s| s.mu).collect(),
        d,
        err,
    })
}

/// `{± f(r)(a cos(mθ/2) + b sin(mθ/2))}` solving `div((1 + ε r) ∇v) = 0`,
/// with `f = Σ_j c_j r^{j + m/2}` from the Frobenius recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRadialMode {
    pub m: u32,
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    coeffs: Vec<f64>,
}

const SERIES_TERMS: usize = 80;

impl WeightedRadialMode {
    pub fn new(m: u32, a: f64, b: f64, eps: f64) -> Result<Self> {
        if m == 0 || m % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "mode index {m} must be an odd positive integer"
            )));
        }
        let beta = 0.5 * m as f64;
        let mut coeffs = vec![1.0];
        for j in 1..SERIES_TERMS {
            let p = (j - 1) as f64;
            let jf = j as f64;
            let prev = coeffs[j - 1];
            coeffs.push(-eps * prev * (p * (p + 2.0 * beta) + p + beta) / (jf * (jf + 2.0 * beta)));
        }
        Ok(Self { m, a, b, eps, coeffs })
    }

    /// Radius inside which the series is used; the weight vanishes at
    /// `r = 1/|ε|`.
    pub fn convergence_radius(&self) -> f64 {
        if self.eps == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.eps.abs()
        }
    }

    /// `(f(r), f'(r))`.
    pub fn radial(&self, r: f64) -> (f64, f64) {
        let beta = 0.5 * self.m as f64;
        if r == 0.0 {
            return (0.0, 0.0);
        }
        let base = r.powf(beta);
        let mut f = 0.0;
        let mut df = 0.0;
        let mut rj = 1.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            let t = c * rj;
            f += t;
            df += t * (j as f64 + beta);
            rj *= r;
            if t.abs() < 1e-18 * f.abs() && j > 2 {
                break;
            }
        }
        (base * f, base * df / r)
    }
}

impl SymmetricFn for WeightedRadialMode {
    fn k(&self) -> usize {
        1
    }

    fn eval(&self, x: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        let r = x[0].hypot(x[1]);
        let theta = x[1].atan2(x[0]);
        let half = 0.5 * self.m as f64;
        let (s, c) = (half * theta).sin_cos();
        let ang = self.a * c + self.b * s;
        let dang = half * (self.b * c - self.a * s);
        let (f, df) = self.radial(r);
        let dr = df * ang;
        let dt = if r > 0.0 { f / r * dang } else { 0.0 };
        let (st, ct) = theta.sin_cos();
        (vec![f * ang], vec![ct * dr - st * dt, st * dr + ct * dt])
    }
}

/// Both sides of the identities for `D` and `D'` at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct GlIdentityResiduals {
    pub rho: f64,
    pub d: f64,
    /// `ρ^{2-n} ∫_{∂B_ρ} μ v·v_r`.
    pub boundary: f64,
    /// `ρ^{2-n} ∫_{B_ρ} R(v)·v` with `R(v) = −D_i(Â^{ij} D_j v)`.
    pub remainder: f64,
    /// `|D − boundary − remainder| / D`.
    pub residual_d: f64,
    /// `D'` by Richardson-extrapolated differences of `D`.
    pub d_prime: f64,
    /// `∫_{∂B_ρ} 2μ|v_r|² + ρ^{-1} ∫_{B_ρ} r(Â_r Dv·Dv + 2R·v_r)`.
    pub d_prime_formula: f64,
    /// Relative residual of the derivative identity with the sign above.
    pub residual_d_prime: f64,
    /// Same with the `R` term entering as `−2R·v_r`.
    pub residual_d_prime_flipped: f64,
    /// `|remainder| / (ρ D)`.
    pub remainder_ratio: f64,
}

/// Value and gradient of `v` at `x`, sign-aligned with `(v0, g0)` at `x0`.
fn aligned(v: &dyn SymmetricFn, x: [f64; 2], x0: [f64; 2], v0: &[f64], g0: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = v0.len();
    let (val, g) = v.eval(x);
    let mut plus = 0.0;
    let mut minus = 0.0;
    for c in 0..k {
        let pred = v0[c] + g0[c] * (x[0] - x0[0]) + g0[k + c] * (x[1] - x0[1]);
        plus += (val[c] - pred).powi(2);
        minus += (val[c] + pred).powi(2);
    }
    if minus < plus {
        (val.iter().map(|a| -a).collect(), g.iter().map(|a| -a).collect())
    } else {
        (val, g)
    }
}

/// `(R(v), v, Dv)` at `x` by Richardson-extrapolated centered differences
/// of the flux `Â Dv`.
fn remainder_at(
    v: &dyn SymmetricFn,
    a: &dyn MatrixField,
    center: [f64; 2],
    x: [f64; 2],
    step: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = v.k();
    let (v0, g0) = v.eval(x);
    let flux = |p: [f64; 2], comp: usize| -> Vec<f64> {
        let (_, g) = aligned(v, p, x, &v0, &g0);
        let m = a.eval([p[0] - center[0], p[1] - center[1]]);
        (0..k).map(|c| m[(comp, 0)] * g[c] + m[(comp, 1)] * g[k + c]).collect()
    };
    let div = |e: f64| -> Vec<f64> {
        let mut out = vec![0.0; k];
        for comp in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[comp] += e;
            xm[comp] -= e;
            let (fp, fm) = (flux(xp, comp), flux(xm, comp));
            for c in 0..k {
                out[c] += (fp[c] - fm[c]) / (2.0 * e);
            }
        }
        out
    };
    let (d1, d2) = (div(step), div(0.5 * step));
    let r = d1.iter().zip(&d2).map(|(p, q)| -(4.0 * q - p) / 3.0).collect();
    (r, v0, g0)
}

/// Radial derivative of `Â` at `y ≠ 0`.
fn radial_derivative(a: &dyn MatrixField, y: [f64; 2], step: f64) -> Matrix2<f64> {
    let r = y[0].hypot(y[1]);
    let u = [y[0] / r, y[1] / r];
    let cd =
        |e: f64| (a.eval([y[0] + e * u[0], y[1] + e * u[1]]) - a.eval([y[0] - e * u[0], y[1] - e * u[1]])) / (2.0 * e);
    (cd(0.5 * step) * 4.0 - cd(step)) / 3.0
}

pub fn gl_identity_residuals(
    v: &dyn SymmetricFn,
    a: &dyn MatrixField,
    center: [f64; 2],
    rho: f64,
    opts: &ModifiedOptions,
) -> Result<GlIdentityResiduals> {
    if !(rho > 0.0) {
        return Err(Error::DegenerateRadius { rho });
    }
    let k = v.k();
    let gl = GaussLegendre::new(opts.radial_order);
    let count = opts.angular;
    let segments = 4;
    let sums = circle_sums(v, a, center, rho, count, Some((opts.normalization_tol, 0)))?;
    if !(sums.h_mu > 0.0) {
        return Err(Error::DegenerateRadius { rho });
    }
    let d = dirichlet(v, a, center, rho, &gl, count, segments);

    let step_t = 2.0 * PI / count as f64;
    let mut remainder = 0.0;
    let mut bulk = 0.0;
    // the 2R·v_r part of `bulk`, kept apart to test the opposite sign
    let mut r_vr = 0.0;
    for s in 0..segments {
        let lo = rho * s as f64 / segments as f64;
        let hi = rho * (s + 1) as f64 / segments as f64;
        for (r, w) in gl.mapped(lo, hi) {
            let fd_step = (1e-3 * rho).min(0.25 * r);
            let mut ring_rem = 0.0;
            let mut ring_bulk = 0.0;
            let mut ring_rvr = 0.0;
            for j in 0..count {
                let (st, ct) = (j as f64 * step_t).sin_cos();
                let y = [r * ct, r * st];
                let x = [center[0] + y[0], center[1] + y[1]];
                let (rv, val, g) = remainder_at(v, a, center, x, fd_step);
                let ar = radial_derivative(a, y, fd_step);
                for c in 0..k {
                    let (gx, gy) = (g[c], g[k + c]);
                    let vr = gx * ct + gy * st;
                    ring_rem += rv[c] * val[c];
                    ring_rvr += 2.0 * r * rv[c] * vr;
                    ring_bulk +=
                        r * (ar[(0, 0)] * gx * gx + (ar[(0, 1)] + ar[(1, 0)]) * gx * gy + ar[(1, 1)] * gy * gy);
                }
            }
            remainder += w * r * ring_rem * step_t;
            bulk += w * r * ring_bulk * step_t;
            r_vr += w * r * ring_rvr * step_t;
        }
    }
    let mut vr2 = 0.0;
    for j in 0..count {
        let (st, ct) = (j as f64 * step_t).sin_cos();
        let y = [rho * ct, rho * st];
        let mu = a.radial_weight(y);
        let (_, g) = v.eval([center[0] + y[0], center[1] + y[1]]);
        for c in 0..k {
            let vr = g[c] * ct + g[k + c] * st;
            vr2 += 2.0 * mu * vr * vr;
        }
    }
    let boundary_term = vr2 * step_t * rho;
    let d_prime_formula = boundary_term + (bulk + r_vr) / rho;
    let d_prime_flipped = boundary_term + (bulk - r_vr) / rho;

    let e = 1e-3 * rho;
    let dd = |h: f64| {
        (dirichlet(v, a, center, rho + h, &gl, count, segments)
            - dirichlet(v, a, center, rho - h, &gl, count, segments))
            / (2.0 * h)
    };
    let d_prime = (4.0 * dd(0.5 * e) - dd(e)) / 3.0;
    let scale = d_prime.abs().max(f64::MIN_POSITIVE);
    Ok(GlIdentityResiduals {
        rho,
        d,
        boundary: sums.i,
        remainder,
        residual_d: (d - sums.i - remainder).abs() / d,
        d_prime,
        d_prime_formula,
        residual_d_prime: (d_prime - d_prime_formula).abs() / scale,
        residual_d_prime_flipped: (d_prime - d_prime_flipped).abs() / scale,
        remainder_ratio: remainder.abs() / (rho * d),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointReport {
    pub beta: f64,
    /// `min(ρ₀, θ(β/N̂(ρ₀) − 1))` with `ρ₀` the largest stored radius.
    pub threshold: f64,
    pub pairs_checked: usize,
    pub holds: bool,
    /// Smallest `H(σ) / ((σ/ρ)^{2β} H(ρ))` over checked pairs.
    pub worst_ratio: f64,
}

/// Check `H(σ) ≥ (σ/ρ)^{2β} H(ρ)` for stored `σ ≤ ρ ≤ threshold`.
pub fn two_point_bound(profile: &ModifiedFrequencyProfile, beta: f64, theta: f64) -> Result<TwoPointReport> {
    let last = profile.radii.len().checked_sub(1).ok_or(Error::Empty("radii"))?;
    let rho0 = profile.radii[last];
    let n0 = profile.n_hat[last];
    if !(beta > n0) {
        return Err(Error::Precondition(format!(
            "beta = {beta} must exceed the modified frequency {n0} at the largest radius"
        )));
    }
    let threshold = rho0.min(theta * (beta / n0 - 1.0));
    let mut worst = f64::INFINITY;
    let mut pairs = 0;
    for (j, &rho) in profile.radii.iter().enumerate() {
        if rho > threshold {
            continue;
        }
        for i in 0..=j {
            let sigma = profile.radii[i];
            let ratio = profile.h[i] / ((sigma / rho).powf(2.0 * beta) * profile.h[j]);
            worst = worst.min(ratio);
            pairs += 1;
        }
    }
    Ok(TwoPointReport {
        beta,
        threshold,
        pairs_checked: pairs,
        holds: worst >= 1.0 - 1e-12,
        worst_ratio: worst,
    })
}
