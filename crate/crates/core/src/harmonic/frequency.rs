//! Frequency function `N = D/H` and the monotonicity, growth and doubling
//! diagnostics built on it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

use super::modes::{Rescaled, SymmetricFn};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyOptions {
    /// Trapezoid samples per circle.
    pub angular: usize,
    /// Gauss–Legendre order per radial segment.
    pub radial_order: usize,
    /// Relative step for the Richardson derivative of `H`.
    pub derivative_step: f64,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        Self {
            angular: 256,
            radial_order: 16,
            derivative_step: 1e-3,
        }
    }
}

/// Sampled frequency data at increasing radii about `center` (plane, `n = 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProfile {
    pub center: [f64; 2],
    pub radii: Vec<f64>,
    /// `H(ρ) = ρ^{1-n} ∫_{∂B_ρ} |φ|^2`.
    pub h: Vec<f64>,
    /// `D(ρ) = ρ^{2-n} ∫_{B_ρ} |Dφ|^2` by area quadrature.
    pub d: Vec<f64>,
    /// `D` from the identity `D = ½ ρ H'`.
    pub d_identity: Vec<f64>,
    pub n: Vec<f64>,
    /// Error estimate for `N` at each radius.
    pub err: Vec<f64>,
    /// `∫_{B_ρ} |φ|^2`.
    pub mass: Vec<f64>,
    /// `|φ(center)|`.
    pub center_value: f64,
}

pub fn circle_integrals(f: &dyn SymmetricFn, center: [f64; 2], rho: f64, count: usize) -> (f64, f64) {
    let step = 2.0 * PI / count as f64;
    let mut a = 0.0;
    let mut b = 0.0;
    for j in 0..count {
        let t = j as f64 * step;
        let (v2, g2) = f.sq_norms([center[0] + rho * t.cos(), center[1] + rho * t.sin()]);
        a += v2;
        b += g2;
    }
    (a * step, b * step)
}

fn h_at(f: &dyn SymmetricFn, center: [f64; 2], rho: f64, count: usize) -> f64 {
    circle_integrals(f, center, rho, count).0
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::Empty("radii"));
    }
    if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "radii must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Richardson-extrapolated centered difference of `H` at `ρ`.
fn h_derivative(f: &dyn SymmetricFn, center: [f64; 2], rho: f64, opts: &FrequencyOptions) -> f64 {
    let d = opts.derivative_step * rho;
    let cd = |e: f64| (h_at(f, center, rho + e, opts.angular) - h_at(f, center, rho - e, opts.angular)) / (2.0 * e);
    (4.0 * cd(0.5 * d) - cd(d)) / 3.0
}

pub fn frequency_profile(
    f: &dyn SymmetricFn,
    center: [f64; 2],
    radii: &[f64],
    opts: &FrequencyOptions,
) -> Result<FrequencyProfile> {
    check_radii(radii)?;
    let gl = GaussLegendre::new(opts.radial_order);
    let count = opts.angular;

    let h: Vec<f64> = radii.iter().map(|&r| h_at(f, center, r, count)).collect();
    let peak = h.iter().cloned().fold(0.0, f64::max);
    for (&r, &hv) in radii.iter().zip(&h) {
        if !(hv > 1e-14 * peak) || peak == 0.0 {
            return Err(Error::DegenerateRadius { rho: r });
        }
    }

    // Cumulative radial integration over the segments between radii.
    let mut d = Vec::with_capacity(radii.len());
    let mut mass = Vec::with_capacity(radii.len());
    let (mut d_acc, mut m_acc) = (0.0, 0.0);
    let mut lo = 0.0;
    for &hi in radii {
        for (s, w) in gl.mapped(lo, hi) {
            let (v2, g2) = circle_integrals(f, center, s, count);
            d_acc += w * s * g2;
            m_acc += w * s * v2;
        }
        d.push(d_acc);
        mass.push(m_acc);
        lo = hi;
    }

    let d_identity: Vec<f64> = radii
        .iter()
        .map(|&r| 0.5 * r * h_derivative(f, center, r, opts))
        .collect();
    let n: Vec<f64> = d.iter().zip(&h).map(|(a, b)| a / b).collect();
    let err = d
        .iter()
        .zip(&d_identity)
        .zip(&h)
        .map(|((a, b), hv)| ((a - b).abs() + 1e-14 * (a.abs() + hv)) / hv)
        .collect();
    let (v0, _) = f.eval(center);
    let center_value = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(FrequencyProfile {
        center,
        radii: radii.to_vec(),
        h,
        d,
        d_identity,
        n,
        err,
        mass,
        center_value,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// Indices `i` with `N(ρ_{i+1}) < N(ρ_i) - tol`.
    pub violations: Vec<usize>,
    pub max_violation: f64,
    /// `N` is constant within tolerance (homogeneity certificate).
    pub constant: bool,
}

/// Check that `N` is nondecreasing; `tol` is added to the profile's own
/// error estimates.
pub fn monotonicity_report(n: &[f64], err: &[f64], tol: f64) -> Result<MonotonicityReport> {
    if n.len() < 2 {
        return Err(Error::InvalidInput("monotonicity needs at least two radii".into()));
    }
    let mut violations = Vec::new();
    let mut max_violation: f64 = 0.0;
    for i in 0..n.len() - 1 {
        let allowed = tol + err[i] + err[i + 1];
        let drop = n[i] - n[i + 1];
        if drop > allowed {
            violations.push(i);
        }
        max_violation = max_violation.max(drop);
    }
    let hi = n.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = n.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_err = err.iter().cloned().fold(0.0, f64::max);
    Ok(MonotonicityReport {
        violations,
        max_violation,
        constant: hi - lo <= tol + 2.0 * max_err,
    })
}

impl FrequencyProfile {
    pub fn monotonicity(&self, tol: f64) -> Result<MonotonicityReport> {
        monotonicity_report(&self.n, &self.err, tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub holds: bool,
    /// Smallest of `√(H(ρ)/H(R)) - (ρ/R)^{N(R)}` and
    /// `(ρ/R)^{N_min} - √(H(ρ)/H(R))` over stored radii.
    pub worst_slack: f64,
    pub doubling_holds: bool,
    /// Largest `‖φ‖_{B_{ρ_j}} / (C ‖φ‖_{B_{ρ_i}})` over stored pairs with
    /// `ρ_j <= 2 ρ_i`, `C = 2^{N(R) + n/2 + 1}`.
    pub doubling_worst_ratio: f64,
}

/// Two-sided growth bounds for `H` and the doubling bound for ball norms.
/// The centre must lie in the zero set of `φ`.
pub fn growth_bounds_check(p: &FrequencyProfile, tol: f64) -> Result<GrowthReport> {
    let last = p.radii.len() - 1;
    let scale = p.h.iter().cloned().fold(0.0, f64::max) / (2.0 * PI);
    if p.center_value * p.center_value > 1e-10 * scale.max(1e-300) {
        return Err(Error::Precondition(format!(
            "centre is not a zero of the field (|φ| = {:.3e})",
            p.center_value
        )));
    }
    let big_r = p.radii[last];
    let n_top = p.n[last];
    let n_min = p.n.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut worst: f64 = f64::INFINITY;
    for i in 0..=last {
        let t = p.radii[i] / big_r;
        let mid = (p.h[i] / p.h[last]).sqrt();
        worst = worst.min(mid - t.powf(n_top)).min(t.powf(n_min) - mid);
    }
    let c = 2f64.powf(n_top + 1.0 + 1.0);
    let mut ratio: f64 = 0.0;
    for i in 0..=last {
        for j in i + 1..=last {
            if p.radii[j] <= 2.0 * p.radii[i] * (1.0 + 1e-12) {
                ratio = ratio.max((p.mass[j] / p.mass[i]).sqrt() / c);
            }
        }
    }
    Ok(GrowthReport {
        holds: worst >= -tol,
        worst_slack: worst,
        doubling_holds: ratio <= 1.0,
        doubling_worst_ratio: ratio,
    })
}

/// `∫_{B_ρ(center)} |φ|^2` by Gauss–Legendre in the radius and the
/// trapezoid rule in angle.
pub fn ball_mass(f: &dyn SymmetricFn, center: [f64; 2], rho: f64, opts: &FrequencyOptions) -> f64 {
    let gl = GaussLegendre::new(opts.radial_order);
    let mut acc = 0.0;
    for (lo, hi) in [(0.0, 0.5 * rho), (0.5 * rho, rho)] {
        for (s, w) in gl.mapped(lo, hi) {
            acc += w * s * circle_integrals(f, center, s, opts.angular).0;
        }
    }
    acc
}

/// The blow-up `x ↦ σ^{n/2} ‖φ‖^{-1}_{L²(B_σ(z))} φ(z + σx)`, normalized to
/// unit `L²(B_1)` norm.
pub fn blow_up_rescale<'a>(
    f: &'a dyn SymmetricFn,
    z: [f64; 2],
    sigma: f64,
    opts: &FrequencyOptions,
) -> Result<Rescaled<'a>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidInput("blow-up scale must be positive".into()));
    }
    let norm = ball_mass(f, z, sigma, opts).sqrt();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm(format!("L2 norm on B_{sigma} vanishes")));
    }
    let out = Rescaled {
        inner: f,
        center: z,
        sigma,
        scale: sigma / norm,
    };
    let check = ball_mass(&out, [0.0, 0.0], 1.0, opts).sqrt();
    if (check - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!(
            "rescaled field has L2(B_1) norm {check}, quadrature too coarse"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoublingEntry {
    pub rho: f64,
    /// Smallest `γ` with `‖w‖_ρ <= γ ‖w‖_{ρ/2}`.
    pub gamma_min: f64,
    pub holds: bool,
}

/// Doubling condition with the circle norm `‖w‖_ρ = (ρ^{1-n}∫_{∂B_ρ} w^2)^{1/2}`.
pub fn doubling_check(
    f: &dyn SymmetricFn,
    center: [f64; 2],
    radii: &[f64],
    gamma: f64,
    opts: &FrequencyOptions,
) -> Result<Vec<DoublingEntry>> {
    check_radii(radii)?;
    radii
        .iter()
        .map(|&rho| {
            let full = h_at(f, center, rho, opts.angular).sqrt();
            let half = h_at(f, center, 0.5 * rho, opts.angular).sqrt();
            if !(half > 0.0) {
                return Err(Error::ZeroNorm(format!("circle norm vanishes at radius {}", 0.5 * rho)));
            }
            let gamma_min = full / half;
            Ok(DoublingEntry {
                rho,
                gamma_min,
                holds: gamma_min <= gamma,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyReport {
    /// Dyadic radii `ρ` with `‖w‖_{ρ/2} >= 2^γ ‖w‖_{ρ/4}`.
    pub triggered: Vec<f64>,
    /// Triggered radii where `‖w‖_σ >= (2σ/ρ)^γ ‖w‖_{ρ/2}` fails for some
    /// sampled `σ ∈ [3ρ/4, ρ]`.
    pub violations: Vec<f64>,
    /// Smallest `‖w‖_σ / ((2σ/ρ)^γ ‖w‖_{ρ/2}) - 1` over triggered radii.
    pub worst_slack: f64,
}

/// Growth dichotomy at the dyadic radii `ρ_max 2^{-j}`, `j < levels`, with
/// the circle norm of [`doubling_check`].
pub fn growth_dichotomy(
    f: &dyn SymmetricFn,
    center: [f64; 2],
    rho_max: f64,
    levels: usize,
    gamma: f64,
    tol: f64,
    opts: &FrequencyOptions,
) -> Result<DichotomyReport> {
    if !(rho_max > 0.0) || levels == 0 {
        return Err(Error::InvalidInput(
            "growth dichotomy needs a positive radius and at least one level".into(),
        ));
    }
    let norm = |r: f64| h_at(f, center, r, opts.angular).sqrt();
    let mut report = DichotomyReport {
        triggered: Vec::new(),
        violations: Vec::new(),
        worst_slack: f64::INFINITY,
    };
    for j in 0..levels {
        let rho = rho_max * 0.5f64.powi(j as i32);
        let (half, quarter) = (norm(0.5 * rho), norm(0.25 * rho));
        if !(quarter > 0.0) {
            return Err(Error::ZeroNorm(format!(
                "circle norm vanishes at radius {}",
                0.25 * rho
            )));
        }
        if half < 2f64.powf(gamma) * quarter * (1.0 - tol) {
            continue;
        }
        report.triggered.push(rho);
        let mut ok = true;
        for i in 0..=8 {
            let sigma = rho * (0.75 + 0.25 * i as f64 / 8.0);
            let slack = norm(sigma) / ((2.0 * sigma / rho).powf(gamma) * half) - 1.0;
            report.worst_slack = report.worst_slack.min(slack);
            ok &= slack >= -tol;
        }
        if !ok {
            report.violations.push(rho);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::modes::{homogeneous_mode, ConstantSymmetric, ModeSum};

    fn radii() -> Vec<f64> {
        (1..=10).map(|i| 0.1 * i as f64).collect()
    }

    #[test]
    fn mode_three_has_closed_form_energies() {
        let m = homogeneous_mode(3, 0.0, 1.0).unwrap();
        let p = frequency_profile(&m, [0.0, 0.0], &radii(), &FrequencyOptions::default()).unwrap();
        for (i, &r) in p.radii.iter().enumerate() {
            assert!((p.h[i] - PI * r.powi(3)).abs() < 1e-13);
            assert!((p.d[i] - 1.5 * PI * r.powi(3)).abs() < 1e-13);
            assert!((p.d_identity[i] - p.d[i]).abs() < 1e-9);
            assert!((p.n[i] - 1.5).abs() < 1e-12);
        }
        let mono = p.monotonicity(1e-9).unwrap();
        assert!(mono.violations.is_empty() && mono.constant);
        let g = growth_bounds_check(&p, 1e-9).unwrap();
        assert!(g.holds && g.worst_slack.abs() < 1e-9 && g.doubling_holds);
    }

    #[test]
    fn dent_gives_one_violation() {
        let m = homogeneous_mode(3, 0.0, 1.0).unwrap();
        let mut p = frequency_profile(&m, [0.0, 0.0], &radii(), &FrequencyOptions::default()).unwrap();
        let tol = 1e-6;
        p.n[4] -= 10.0 * tol;
        let mono = p.monotonicity(tol).unwrap();
        assert_eq!(mono.violations, vec![3]);
    }

    #[test]
    fn superposition_matches_closed_form() {
        let eps: f64 = 0.3;
        let f = ModeSum::new(vec![
            homogeneous_mode(3, 0.0, 1.0).unwrap(),
            homogeneous_mode(5, eps, 0.0).unwrap(),
        ]);
        let p = frequency_profile(&f, [0.0, 0.0], &radii(), &FrequencyOptions::default()).unwrap();
        for (i, &r) in p.radii.iter().enumerate() {
            let e2r2 = eps * eps * r * r;
            let want = 0.5 * (3.0 + 5.0 * e2r2) / (1.0 + e2r2);
            assert!((p.n[i] - want).abs() < 1e-12);
        }
        let mono = p.monotonicity(1e-9).unwrap();
        assert!(mono.violations.is_empty() && !mono.constant);
        let g = growth_bounds_check(&p, 1e-8).unwrap();
        assert!(g.holds && g.worst_slack >= -1e-12 && g.doubling_holds);
    }

    #[test]
    fn constant_field_fails_zero_precondition() {
        let f = ConstantSymmetric { value: vec![1.0] };
        let p = frequency_profile(&f, [0.2, 0.1], &radii(), &FrequencyOptions::default()).unwrap();
        assert!(matches!(growth_bounds_check(&p, 1e-9), Err(Error::Precondition(_))));
    }

    #[test]
    fn doubling_constants_of_modes() {
        let opts = FrequencyOptions::default();
        for (m, want) in [(3, 2f64.powf(1.5)), (1, 2f64.sqrt())] {
            let f = homogeneous_mode(m, 1.0, 0.0).unwrap();
            for e in doubling_check(&f, [0.0, 0.0], &radii(), want + 1e-9, &opts).unwrap() {
                assert!((e.gamma_min - want).abs() < 1e-12 && e.holds);
            }
        }
        let zero = ConstantSymmetric { value: vec![0.0] };
        assert!(doubling_check(&zero, [0.0, 0.0], &radii(), 2.0, &opts).is_err());
    }

    #[test]
    fn blow_up_of_mode_is_fixed_point() {
        let opts = FrequencyOptions::default();
        let m = homogeneous_mode(3, 0.0, 1.0).unwrap();
        let unit = blow_up_rescale(&m, [0.0, 0.0], 1.0, &opts).unwrap();
        let pts: Vec<[f64; 2]> = (0..50)
            .map(|i| [0.9 * (i as f64 * 0.3).cos(), 0.5 * (i as f64 * 0.7).sin()])
            .collect();
        for sigma in [0.5, 0.1, 0.013] {
            let b = blow_up_rescale(&m, [0.0, 0.0], sigma, &opts).unwrap();
            assert!(crate::harmonic::modes::sup_distance(&b, &unit, &pts) < 1e-12);
        }
        let zero = ConstantSymmetric { value: vec![0.0] };
        assert!(blow_up_rescale(&zero, [0.0, 0.0], 0.5, &opts).is_err());
    }
    #[test]
    fn dichotomy_triggers_above_gamma_only() {
        let opts = FrequencyOptions::default();
        let m5 = ModeSum::new(vec![homogeneous_mode(5, 1.0, 0.0).unwrap()]);
        let r = growth_dichotomy(&m5, [0.0, 0.0], 1.0, 5, 1.6, 1e-10, &opts).unwrap();
        assert_eq!(r.triggered.len(), 5);
        assert!(r.violations.is_empty());
        // ‖w‖_σ/‖w‖_{ρ/2} = (2σ/ρ)^{5/2}, least against the γ power at σ = 3ρ/4
        let want = 1.5f64.powf(2.5 - 1.6) - 1.0;
        assert!((r.worst_slack - want).abs() < 1e-10);
        let m3 = ModeSum::new(vec![homogeneous_mode(3, 0.0, 1.0).unwrap()]);
        let r = growth_dichotomy(&m3, [0.0, 0.0], 1.0, 5, 1.6, 1e-10, &opts).unwrap();
        assert!(r.triggered.is_empty());
    }
}
