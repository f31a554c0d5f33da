//! Induced metric of a graph and the coefficient algebra of the split
//! system.

use nalgebra::DMatrix;

use crate::quadrature::GaussLegendre;

/// Metric data of the graph with gradient `p` (`n × k`, `p[(i, κ)] = ∂_i u^κ`).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMetric {
    pub p: DMatrix<f64>,
    /// `g_ij = δ_ij + Σ_κ p_i^κ p_j^κ`.
    pub g: DMatrix<f64>,
    pub det: f64,
    pub g_inv: DMatrix<f64>,
    /// `G^{ij} = √g g^{ij}`.
    pub big_g: DMatrix<f64>,
}

pub fn metric_g(p: &DMatrix<f64>) -> GraphMetric {
    let n = p.nrows();
    let g = DMatrix::identity(n, n) + p * p.transpose();
    let chol = g.clone().cholesky().expect("I + p p^T is positive definite");
    let g_inv = chol.inverse();
    let det = chol.determinant();
    let big_g = &g_inv * det.sqrt();
    GraphMetric {
        p: p.clone(),
        g,
        det,
        g_inv,
        big_g,
    }
}

/// `G(p)`.
pub fn big_g(p: &DMatrix<f64>) -> DMatrix<f64> {
    metric_g(p).big_g
}

/// `ν(p) = G(p) p`, the flux of the minimal surface system.
pub fn flux(p: &DMatrix<f64>) -> DMatrix<f64> {
    big_g(p) * p
}

/// Closed-form derivatives `∂G/∂p_ℓ^λ`, indexed `[ℓ * k + λ]`:
/// `√g [ (g⁻¹p)_{ℓλ} g^{ij} - g^{iℓ}(g⁻¹p)_{jλ} - (g⁻¹p)_{iλ} g^{ℓj} ]`.
pub fn big_g_derivative(p: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let m = metric_g(p);
    let (n, k) = p.shape();
    let gp = &m.g_inv * p;
    let sg = m.det.sqrt();
    let mut out = Vec::with_capacity(n * k);
    for l in 0..n {
        for lam in 0..k {
            let d = DMatrix::from_fn(n, n, |i, j| {
                sg * (gp[(l, lam)] * m.g_inv[(i, j)] - m.g_inv[(i, l)] * gp[(j, lam)] - gp[(i, lam)] * m.g_inv[(l, j)])
            });
            out.push(d);
        }
    }
    out
}

/// `A(p, q)` and `E(p, q)` with `E^{ℓλ} = ∫_{-1}^1 ∂G/∂p_ℓ^λ (p + s q) ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct PQCoefficients {
    pub a: DMatrix<f64>,
    /// `E^{ijℓ}_λ` as `n × n` matrices indexed `[ℓ * k + λ]`.
    pub e: Vec<DMatrix<f64>>,
    pub quadrature_order: usize,
}

impl PQCoefficients {
    /// `Σ_{ℓ,λ} E^{ijℓ}_λ q_ℓ^λ`.
    pub fn contract(&self, q: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, k) = q.shape();
        let mut out = DMatrix::zeros(n, n);
        for l in 0..n {
            for lam in 0..k {
                out += &self.e[l * k + lam] * q[(l, lam)];
            }
        }
        out
    }
}

pub fn coefficients_ae(p: &DMatrix<f64>, q: &DMatrix<f64>, gl: &GaussLegendre) -> PQCoefficients {
    let (n, k) = p.shape();
    let a = big_g(&(p + q)) + big_g(&(p - q));
    let mut e = vec![DMatrix::zeros(n, n); n * k];
    for (s, w) in gl.nodes.iter().zip(&gl.weights) {
        let d = big_g_derivative(&(p + q * *s));
        for (acc, di) in e.iter_mut().zip(d) {
            *acc += di * *w;
        }
    }
    PQCoefficients {
        a,
        e,
        quadrature_order: gl.order(),
    }
}

/// Residual of `G(p+q) - G(p-q) = Σ E q` in the max norm.
pub fn contraction_residual(p: &DMatrix<f64>, q: &DMatrix<f64>, c: &PQCoefficients) -> f64 {
    let direct = big_g(&(p + q)) - big_g(&(p - q));
    (direct - c.contract(q)).amax()
}

/// Closed-form `D_q A(p, 0)` along `dir`: `∂G(p)[dir] + ∂G(p)[-dir]`.
pub fn dq_a_at_zero_exact(p: &DMatrix<f64>, dir: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = p.shape();
    let d = big_g_derivative(p);
    let mut plus = DMatrix::zeros(n, n);
    let mut minus = DMatrix::zeros(n, n);
    for l in 0..n {
        for lam in 0..k {
            plus += &d[l * k + lam] * dir[(l, lam)];
            minus += &d[l * k + lam] * (-dir[(l, lam)]);
        }
    }
    plus + minus
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqEstimate {
    /// One-sided quotients `(A(p, δ dir) - A(p, 0))/δ` at `δ, δ/2, δ/4`.
    pub quotients: [f64; 3],
    /// Ratio of successive quotients; near 2 when the derivative vanishes
    /// and the quotient is first order in `δ`.
    pub halving_ratio: f64,
    /// Twice-extrapolated derivative estimate.
    pub extrapolated: f64,
}

/// Finite-difference estimate of `D_q A(p, 0)` along `dir`.
pub fn dq_a_at_zero_fd(p: &DMatrix<f64>, dir: &DMatrix<f64>, step: f64) -> DqEstimate {
    let a0 = big_g(p) * 2.0;
    let quotient = |d: f64| {
        let q = dir * d;
        (big_g(&(p + &q)) + big_g(&(p - &q)) - &a0) / d
    };
    let q1 = quotient(step);
    let q2 = quotient(0.5 * step);
    let q4 = quotient(0.25 * step);
    // A is even in q, so the quotient is A_2 δ + A_4 δ^3 + ...; two
    // Richardson steps remove both terms.
    let r1 = &q2 * 2.0 - &q1;
    let r2 = &q4 * 2.0 - &q2;
    let extrapolated = ((r2 * 8.0 - r1) / 7.0).amax();
    let quotients = [q1.amax(), q2.amax(), q4.amax()];
    DqEstimate {
        quotients,
        halving_ratio: quotients[1] / quotients[2],
        extrapolated,
    }
}

/// Max-norm defects of the parity relations, `E(0, q) = 0`,
/// `D_q A(p, 0) = 0` and the contraction identity at one `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlgebraDefects {
    /// `A(p,q) − A(p,−q)` and `A(p,q) − A(−p,q)`.
    pub a_parity: f64,
    /// `E(p,q) − E(p,−q)` and `E(p,q) + E(−p,q)`.
    pub e_parity: f64,
    pub e_at_zero_p: f64,
    /// Closed form and twice-extrapolated difference quotient, along `q`.
    pub dq_a_at_zero: f64,
    pub contraction: f64,
}

impl AlgebraDefects {
    pub fn worst(&self) -> f64 {
        self.a_parity
            .max(self.e_parity)
            .max(self.e_at_zero_p)
            .max(self.dq_a_at_zero)
            .max(self.contraction)
    }

    pub fn max(self, o: Self) -> Self {
        Self {
            a_parity: self.a_parity.max(o.a_parity),
            e_parity: self.e_parity.max(o.e_parity),
            e_at_zero_p: self.e_at_zero_p.max(o.e_at_zero_p),
            dq_a_at_zero: self.dq_a_at_zero.max(o.dq_a_at_zero),
            contraction: self.contraction.max(o.contraction),
        }
    }
}

pub fn algebra_defects(p: &DMatrix<f64>, q: &DMatrix<f64>, gl: &GaussLegendre) -> AlgebraDefects {
    let c = coefficients_ae(p, q, gl);
    let cq = coefficients_ae(p, &-q, gl);
    let cp = coefficients_ae(&-p, q, gl);
    let c0 = coefficients_ae(&(p * 0.0), q, gl);
    let e_parity =
        c.e.iter()
            .zip(&cq.e)
            .zip(&cp.e)
            .map(|((e, eq), ep)| (e - eq).amax().max((e + ep).amax()))
            .fold(0.0, f64::max);
    AlgebraDefects {
        a_parity: (&c.a - &cq.a).amax().max((&c.a - &cp.a).amax()),
        e_parity,
        e_at_zero_p: c0.e.iter().map(|m| m.amax()).fold(0.0, f64::max),
        dq_a_at_zero: dq_a_at_zero_exact(p, q)
            .amax()
            .max(dq_a_at_zero_fd(p, q, 5e-3).extrapolated),
        contraction: contraction_residual(p, q, &c),
    }
}

/// The factor tensor `E^{ijhℓ}_{κλ}(p, q) = ∫_0^1 ∂_{p_h^κ} E^{ijℓ}_λ(tp, q) dt`
/// by centered differences in `p` and Gauss–Legendre in `t`, returned through
/// its contraction `Σ_{h,κ} E^{ijhℓ}_{κλ} p_h^κ` indexed `[ℓ * k + λ]`.
pub fn factored_e_contraction(
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    gl_s: &GaussLegendre,
    gl_t: &GaussLegendre,
    delta: f64,
) -> Vec<DMatrix<f64>> {
    let (n, k) = p.shape();
    let mut out = vec![DMatrix::zeros(n, n); n * k];
    for (t, wt) in gl_t.mapped(0.0, 1.0) {
        let base = p * t;
        for h in 0..n {
            for kap in 0..k {
                let mut pp = base.clone();
                let mut pm = base.clone();
                pp[(h, kap)] += delta;
                pm[(h, kap)] -= delta;
                let ep = coefficients_ae(&pp, q, gl_s).e;
                let em = coefficients_ae(&pm, q, gl_s).e;
                let w = wt * p[(h, kap)] / (2.0 * delta);
                for (o, (a, b)) in out.iter_mut().zip(ep.iter().zip(&em)) {
                    *o += (a - b) * w;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_metric_is_identity() {
        let m = metric_g(&DMatrix::zeros(2, 2));
        assert_eq!(m.big_g, DMatrix::identity(2, 2));
        assert_eq!(m.det, 1.0);
    }

    #[test]
    fn one_by_one_example() {
        let m = metric_g(&DMatrix::from_element(1, 1, 3.0));
        assert!((m.det - 10.0).abs() < 1e-14);
        assert!((m.g_inv[(0, 0)] - 0.1).abs() < 1e-15);
        assert!((m.big_g[(0, 0)] - 10f64.sqrt() / 10.0).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let p = DMatrix::from_row_slice(2, 2, &[0.3, -0.7, 0.5, 0.2]);
        let d = big_g_derivative(&p);
        let e = 1e-6;
        for l in 0..2 {
            for lam in 0..2 {
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp[(l, lam)] += e;
                pm[(l, lam)] -= e;
                let fd = (big_g(&pp) - big_g(&pm)) / (2.0 * e);
                assert!((fd - &d[l * 2 + lam]).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn contraction_identity_and_zero_p() {
        let gl = GaussLegendre::new(16);
        let p = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.2, 0.6]);
        let q = DMatrix::from_row_slice(2, 2, &[-0.5, 0.3, 0.2, 0.1]);
        let c = coefficients_ae(&p, &q, &gl);
        assert!(contraction_residual(&p, &q, &c) < 1e-13);
        let c0 = coefficients_ae(&DMatrix::zeros(2, 2), &q, &gl);
        assert!(c0.e.iter().all(|m| m.amax() < 1e-15));
        let a00 = coefficients_ae(&DMatrix::zeros(2, 2), &DMatrix::zeros(2, 2), &gl).a;
        assert_eq!(a00, DMatrix::identity(2, 2) * 2.0);
    }

    #[test]
    fn dq_a_vanishes_at_zero() {
        let p = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.2, 0.6]);
        let dir = DMatrix::from_row_slice(2, 2, &[0.3, -0.8, 0.5, 0.1]);
        assert_eq!(dq_a_at_zero_exact(&p, &dir).amax(), 0.0);
        let est = dq_a_at_zero_fd(&p, &dir, 5e-3);
        assert!((est.halving_ratio - 2.0).abs() < 0.05, "{est:?}");
        assert!(est.extrapolated < 1e-10, "{est:?}");
    }

    #[test]
    fn algebra_defects_vanish() {
        let gl = GaussLegendre::new(16);
        let p = DMatrix::from_row_slice(2, 2, &[0.9, -0.3, 0.2, -0.6]);
        let q = DMatrix::from_row_slice(2, 2, &[0.1, 0.7, -0.8, 0.4]);
        let d = algebra_defects(&p, &q, &gl);
        assert!(d.worst() < 1e-10, "{d:?}");
    }

    #[test]
    fn factored_contraction_reproduces_e() {
        let gl = GaussLegendre::new(16);
        let gt = GaussLegendre::new(12);
        let p = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.2, 0.6]);
        let q = DMatrix::from_row_slice(2, 2, &[-0.5, 0.3, 0.2, 0.1]);
        let e = coefficients_ae(&p, &q, &gl).e;
        let f = factored_e_contraction(&p, &q, &gl, &gt, 1e-4);
        for (a, b) in e.iter().zip(&f) {
            assert!((a - b).amax() < 1e-7);
        }
    }
}
