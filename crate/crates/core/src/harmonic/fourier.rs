//! Half-integer Fourier analysis on the circle double cover.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

use super::modes::{HomogeneousMode, ModeSum};

/// Coefficients of `f(θ) = Σ a_m cos(mθ/2) + b_m sin(mθ/2)` over odd `m`,
/// describing boundary data on the circle of radius `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfIntegerFourier {
    pub modes: BTreeMap<u32, (f64, f64)>,
    pub radius: f64,
}

impl HalfIntegerFourier {
    pub fn new(radius: f64) -> Self {
        Self {
            modes: BTreeMap::new(),
            radius,
        }
    }

    /// Insert a mode; even indices are rejected because they are not
    /// antiperiodic.
    pub fn insert(&mut self, m: u32, a: f64, b: f64) -> Result<()> {
        if m % 2 == 0 {
            return Err(Error::InvalidInput(format!("mode index {m} is even")));
        }
        self.modes.insert(m, (a, b));
        Ok(())
    }

    pub fn highest_mode(&self) -> Option<u32> {
        self.modes.keys().next_back().copied()
    }

    pub fn coefficient(&self, m: u32) -> (f64, f64) {
        self.modes.get(&m).copied().unwrap_or((0.0, 0.0))
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.modes
            .iter()
            .map(|(&m, &(a, b))| {
                let (s, c) = (0.5 * m as f64 * theta).sin_cos();
                a * c + b * s
            })
            .sum()
    }

    /// Harmonic extension `Σ (r/R)^{m/2}(a_m cos + b_m sin)` into the disc.
    pub fn interior(&self) -> ModeSum {
        ModeSum::new(
            self.modes
                .iter()
                .map(|(&m, &(a, b))| {
                    let s = self.radius.powf(-0.5 * m as f64);
                    HomogeneousMode { m, a: a * s, b: b * s }
                })
                .collect(),
        )
    }
}

fn dft(samples: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn signed_index(q: usize, n: usize) -> i64 {
    if q <= n / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

/// RMS of the 2π-periodic (even half-integer index) part of the data,
/// relative to the RMS of the whole.
fn even_content(spec: &[Complex<f64>]) -> f64 {
    let n = spec.len();
    let mut even = 0.0;
    let mut total = 0.0;
    for (q, c) in spec.iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        if signed_index(q, n) % 2 == 0 {
            even += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (even / total).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSolution {
    pub fourier: HalfIntegerFourier,
    /// Set when the `m = 1` mode is present, so the extension is not `C^1`
    /// at the origin.
    pub c1_failure: bool,
}

pub const DEFAULT_MODE_CUTOFF: u32 = 64;

/// Fit odd modes up to `cutoff` to boundary samples taken at
/// `θ_j = 4πj/N` on the circle of radius `radius`.
pub fn dirichlet_solve_double_cover(samples: &[f64], radius: f64, cutoff: u32, tol: f64) -> Result<DirichletSolution> {
    let n = samples.len();
    if n < 4 * cutoff as usize {
        return Err(Error::InvalidInput(format!(
            "{n} boundary samples cannot resolve modes up to {cutoff} (need at least {})",
            4 * cutoff
        )));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("boundary radius must be positive".into()));
    }
    let spec = dft(samples);
    let content = even_content(&spec);
    if content > tol {
        return Err(Error::NotAntiperiodic { content });
    }
    let mut fourier = HalfIntegerFourier::new(radius);
    let scale = 2.0 / n as f64;
    for m in (1..=cutoff).step_by(2) {
        let c = spec[m as usize];
        fourier.insert(m, scale * c.re, -scale * c.im)?;
    }
    let (a1, b1) = fourier.coefficient(1);
    let peak = fourier
        .modes
        .values()
        .fold(0.0f64, |acc, (a, b)| acc.max(a.abs()).max(b.abs()));
    let c1_failure = a1.hypot(b1) > tol * peak.max(1e-300);
    Ok(DirichletSolution { fourier, c1_failure })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareResult {
    /// `∫_0^{4π} (f')^2`.
    pub lhs: f64,
    /// `¼ ∫_0^{4π} f^2`.
    pub rhs: f64,
    pub equality: bool,
    /// L² norm on `[0, 4π)` of the part of `f` in modes `m >= 3`.
    pub higher_mode_norm: f64,
}

impl PoincareResult {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// `∫(f')^2 ≥ ¼∫f^2` for 4π-antiperiodic `f`, with spectral derivative and
/// trapezoid sums over uniform samples on `[0, 4π)`.
pub fn antiperiodic_poincare(samples: &[f64], tol: f64) -> Result<PoincareResult> {
    let n = samples.len();
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidInput(
            "need an even number (>= 4) of uniform samples".into(),
        ));
    }
    let half = n / 2;
    let scale = samples.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    let defect = (0..half).fold(0.0f64, |a, j| a.max((samples[j] + samples[j + half]).abs()));
    if defect > tol * scale {
        return Err(Error::NotAntiperiodic { content: defect });
    }
    let spec = dft(samples);
    let mut dspec: Vec<Complex<f64>> = spec
        .iter()
        .enumerate()
        .map(|(q, c)| {
            if n % 2 == 0 && q == half {
                Complex::new(0.0, 0.0)
            } else {
                c * Complex::new(0.0, 0.5 * signed_index(q, n) as f64)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut dspec);
    let step = 4.0 * PI / n as f64;
    let lhs = dspec.iter().map(|c| (c.re / n as f64).powi(2)).sum::<f64>() * step;
    let rhs = 0.25 * samples.iter().map(|x| x * x).sum::<f64>() * step;
    let high: f64 = spec
        .iter()
        .enumerate()
        .filter(|(q, _)| signed_index(*q, n).abs() >= 3)
        .map(|(_, c)| c.norm_sqr())
        .sum();
    // Parseval on [0, 4π): ∫|f|^2 = 4π Σ |c_q|^2 with c_q = F_q / n.
    let higher_mode_norm = (4.0 * PI * high).sqrt() / n as f64;
    Ok(PoincareResult {
        lhs,
        rhs,
        equality: (lhs - rhs).abs() < tol,
        higher_mode_norm,
    })
}

/// Homogeneity degrees `m/2` (`m` odd) of planar symmetric two-valued
/// harmonic functions lying strictly inside `(lo, hi)`.
pub fn gap_spectrum_check(lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo >= 0.0 && hi <= 10.0 && lo < hi) {
        return Err(Error::InvalidInput(format!(
            "degree window ({lo}, {hi}) must lie within (0, 10)"
        )));
    }
    Ok((1..20)
        .step_by(2)
        .map(|m| m as f64 / 2.0)
        .filter(|d| *d > lo && *d < hi)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|j| f(4.0 * PI * j as f64 / n as f64)).collect()
    }

    #[test]
    fn single_mode_is_recovered() {
        let s = sample(256, |t| (1.5 * t).sin());
        let sol = dirichlet_solve_double_cover(&s, 1.0, 64, 1e-10).unwrap();
        assert!((sol.fourier.coefficient(3).1 - 1.0).abs() < 1e-12);
        for (&m, &(a, b)) in &sol.fourier.modes {
            if m != 3 {
                assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
            }
        }
        assert!(!sol.c1_failure);
    }

    #[test]
    fn lowest_mode_sets_c1_flag() {
        let s = sample(256, |t| (0.5 * t).sin());
        let sol = dirichlet_solve_double_cover(&s, 1.0, 64, 1e-10).unwrap();
        assert!((sol.fourier.coefficient(1).1 - 1.0).abs() < 1e-12);
        assert!(sol.c1_failure);
    }

    #[test]
    fn periodic_data_is_rejected() {
        let s = sample(256, |t| t.cos());
        assert!(matches!(
            dirichlet_solve_double_cover(&s, 1.0, 64, 1e-10),
            Err(Error::NotAntiperiodic { .. })
        ));
        assert!(dirichlet_solve_double_cover(&s[..100], 1.0, 64, 1e-10).is_err());
    }

    #[test]
    fn poincare_closed_forms() {
        let r = antiperiodic_poincare(&sample(128, |t| (0.5 * t).sin()), 1e-10).unwrap();
        assert!((r.lhs - PI / 2.0).abs() < 1e-12 && (r.rhs - PI / 2.0).abs() < 1e-12);
        assert!(r.equality);
        let r = antiperiodic_poincare(&sample(128, |t| (1.5 * t).sin()), 1e-10).unwrap();
        assert!((r.lhs - 4.5 * PI).abs() < 1e-11 && (r.rhs - PI / 2.0).abs() < 1e-12);
        assert!(!r.equality);
        assert!((r.higher_mode_norm - (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gap_windows() {
        assert!(gap_spectrum_check(1.0, 1.49).unwrap().is_empty());
        assert!(gap_spectrum_check(1.51, 2.49).unwrap().is_empty());
        assert_eq!(gap_spectrum_check(1.4, 1.6).unwrap(), vec![1.5]);
        assert!(gap_spectrum_check(1.0, 11.0).is_err());
    }
}
