//! Fitted exponents: almost-monotonicity rates and decay slopes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::harmonic::{FrequencyOptions, SymmetricFn};
use crate::quadrature::GaussLegendre;

/// Smallest `Λ ≥ 0` making `e^{Λ ρ^α} N(ρ)` nondecreasing on the stored
/// radii. Drops with relative size at most `noise` are ignored.
pub fn almost_monotonicity_fit(radii: &[f64], values: &[f64], alpha: f64, noise: f64) -> Result<f64> {
    if radii.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: radii.len(),
            got: values.len(),
        });
    }
    if radii.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 radii".into()));
    }
    let mut lambda = 0.0f64;
    for i in 0..radii.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if b >= a || (a - b) <= noise * a.abs() {
            continue;
        }
        let rate = (a / b).ln() / (radii[i + 1].powf(alpha) - radii[i].powf(alpha));
        lambda = lambda.max(rate);
    }
    Ok(lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    /// `‖w‖_ρ = (ρ^{1-n} ∫_{∂B_ρ} |w|²)^{1/2}` per radius.
    pub norms: Vec<f64>,
}

/// Least-squares slope of `log ‖w‖_ρ` against `log ρ`.
pub fn decay_exponent_fit(
    w: &(dyn Fn([f64; 2]) -> Result<Vec<f64>> + Sync),
    center: [f64; 2],
    radii: &[f64],
    angular: usize,
) -> Result<DecayFit> {
    if radii.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 radii".into()));
    }
    let (lo, hi) = radii
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    if !(lo > 0.0) || hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(
            "radii must be positive and span at least a decade".into(),
        ));
    }
    let step = 2.0 * PI / angular as f64;
    let mut norms = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut acc = 0.0;
        for j in 0..angular {
            let (s, c) = (j as f64 * step).sin_cos();
            let v = w([center[0] + r * c, center[1] + r * s])?;
            acc += v.iter().map(|a| a * a).sum::<f64>();
        }
        let n = (acc * step).sqrt();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm(format!("‖w‖ vanishes at radius {r}")));
        }
        norms.push(n);
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let (slope, intercept, residual) = linear_fit(&lx, &ly);
    Ok(DecayFit {
        slope,
        intercept,
        residual,
        norms,
    })
}

/// Decay fit of one representative of a symmetric field.
pub fn symmetric_decay_fit(f: &dyn SymmetricFn, center: [f64; 2], radii: &[f64], angular: usize) -> Result<DecayFit> {
    decay_exponent_fit(&|x| Ok(f.eval(x).0), center, radii, angular)
}

/// `∫_{B_ρ} |w|² / (ρ² ∫_{B_ρ} |Dw|²)`, the constant in the Poincaré step
/// for fields vanishing at the center.
pub fn poincare_ratio(f: &dyn SymmetricFn, center: [f64; 2], rho: f64, opts: &FrequencyOptions) -> Result<f64> {
    let gl = GaussLegendre::new(opts.radial_order);
    let step = 2.0 * PI / opts.angular as f64;
    let (mut mass, mut energy) = (0.0, 0.0);
    for (s, w) in gl.mapped(0.0, rho) {
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..opts.angular {
            let (st, ct) = (j as f64 * step).sin_cos();
            let (v2, g2) = f.sq_norms([center[0] + s * ct, center[1] + s * st]);
            a += v2;
            b += g2;
        }
        mass += w * s * a * step;
        energy += w * s * b * step;
    }
    if !(energy > 0.0) {
        return Err(Error::ZeroNorm("Dirichlet energy vanishes".into()));
    }
    Ok(mass / (rho * rho * energy))
}
