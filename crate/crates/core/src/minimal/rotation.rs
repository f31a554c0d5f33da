//! Regraphing a two-valued graph after rotating the tangent plane of its
//! average at a coincidence point to the horizontal.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::minimal::branched::{TwoValuedFn, TwoValuedSample};
use crate::twoval::value::TwoValue;

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_MAX_ITER: usize = 50;
const MAX_ROTATION: f64 = 0.25;
const COINCIDENCE_TOL: f64 = 1e-8;

/// `M^{-1/2}` for symmetric positive definite `M`.
fn inv_sqrt(m: DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Orthogonal `(n+k) × (n+k)` matrix carrying the horizontal plane onto the
/// graph of `x ↦ L x` (`L` is `k × n`) by the smallest rotation.
pub fn principal_rotation(l: &DMatrix<f64>) -> DMatrix<f64> {
    let (k, n) = l.shape();
    let s = inv_sqrt(DMatrix::identity(n, n) + l.transpose() * l);
    let t = inv_sqrt(DMatrix::identity(k, k) + l * l.transpose());
    let mut b = DMatrix::zeros(n + k, n + k);
    b.view_mut((0, 0), (n, n)).copy_from(&s);
    b.view_mut((0, n), (n, k)).copy_from(&(-l.transpose() * &t));
    b.view_mut((n, 0), (k, n)).copy_from(&(l * &s));
    b.view_mut((n, n), (k, k)).copy_from(&t);
    b
}

/// Gradient of one sheet as a `k × 2` matrix.
fn grad_matrix(g: &[f64], k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, 2, |c, i| g[i * k + c])
}

pub struct RotatedGraph<'a> {
    inner: &'a dyn TwoValuedFn,
    pub base: [f64; 2],
    pub base_value: Vec<f64>,
    /// Maps the tangent plane at the base point to the horizontal plane.
    pub q: DMatrix<f64>,
    /// `|Du_a(x₀)|` (Frobenius).
    pub tilt: f64,
}

impl RotatedGraph<'_> {
    /// `|I − Q|` (Frobenius).
    pub fn rotation_size(&self) -> f64 {
        let m = self.q.nrows();
        (DMatrix::identity(m, m) - &self.q).norm()
    }

    fn blocks(&self) -> [DMatrix<f64>; 4] {
        let k = self.inner.k();
        [
            self.q.view((0, 0), (2, 2)).into_owned(),
            self.q.view((0, 2), (2, k)).into_owned(),
            self.q.view((2, 0), (k, 2)).into_owned(),
            self.q.view((2, 2), (k, k)).into_owned(),
        ]
    }

    /// Solve `Q_xx (x − x₀) + Q_xu (u_s(x) − u₀) = ξ` for one sheet,
    /// following the sheet whose value starts at `start_sheet`.
    fn track(&self, xi: [f64; 2], start_sheet: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.inner.k();
        let [qxx, qxu, qux, quu] = self.blocks();
        let xi = DMatrix::from_column_slice(2, 1, &xi);
        let u0 = DMatrix::from_column_slice(k, 1, &self.base_value);
        let x0 = DMatrix::from_column_slice(2, 1, &self.base);

        let pick = |s: &TwoValuedSample, prev: Option<&DMatrix<f64>>| -> (DMatrix<f64>, DMatrix<f64>) {
            let (v, g) = match prev {
                None if start_sheet == 0 => (&s.values.first, &s.grads.first),
                None => (&s.values.second, &s.grads.second),
                Some(p) => {
                    let d1: f64 = s.values.first.iter().zip(p.iter()).map(|(a, b)| (a - b).powi(2)).sum();
                    let d2: f64 = s.values.second.iter().zip(p.iter()).map(|(a, b)| (a - b).powi(2)).sum();
                    if d1 <= d2 {
                        (&s.values.first, &s.grads.first)
                    } else {
                        (&s.values.second, &s.grads.second)
                    }
                }
            };
            (DMatrix::from_column_slice(k, 1, v), grad_matrix(g, k))
        };

        let mut x = &x0 + &xi;
        let s = self.inner.sample([x[0], x[1]])?;
        let (mut u, mut du) = pick(&s, None);
        for _ in 0..NEWTON_MAX_ITER {
            let f = &qxx * (&x - &x0) + &qxu * (&u - &u0) - &xi;
            let scale = 1.0 + xi.norm();
            let j = &qxx + &qxu * &du;
            if f.norm() <= NEWTON_TOL * scale {
                let val = &qux * (&x - &x0) + &quu * (&u - &u0);
                let ji = j.try_inverse().ok_or_else(|| Error::NotInjective {
                    context: format!("singular projection at x = ({}, {})", x[0], x[1]),
                })?;
                let dv = (&qux + &quu * &du) * ji;
                let mut g = vec![0.0; 2 * k];
                for i in 0..2 {
                    for c in 0..k {
                        g[i * k + c] = dv[(c, i)];
                    }
                }
                return Ok((val.iter().copied().collect(), g));
            }
            let step = j.lu().solve(&f).ok_or_else(|| Error::NotInjective {
                context: format!("singular projection at x = ({}, {})", x[0], x[1]),
            })?;
            let predicted = &u - &du * &step;
            x -= &step;
            let s = self.inner.sample([x[0], x[1]])?;
            (u, du) = pick(&s, Some(&predicted));
        }
        Err(Error::NewtonDivergence {
            context: format!("regraphing at ξ = ({}, {})", xi[0], xi[1]),
        })
    }
}

impl TwoValuedFn for RotatedGraph<'_> {
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn sample(&self, xi: [f64; 2]) -> Result<TwoValuedSample> {
        let (v1, g1) = self.track(xi, 0)?;
        let (v2, g2) = self.track(xi, 1)?;
        Ok(TwoValuedSample {
            values: TwoValue::new(v1, v2)?,
            grads: TwoValue::new(g1, g2)?,
        })
    }
}

/// Rotate the graph of `u` so the tangent plane of its average at the
/// coincidence point `x0` becomes horizontal, with `x0` moved to the origin.
pub fn graph_rotation(u: &dyn TwoValuedFn, x0: [f64; 2]) -> Result<RotatedGraph<'_>> {
    let k = u.k();
    let s = u.sample(x0)?;
    let sep = s.values.separation();
    let size = s
        .values
        .first
        .iter()
        .chain(&s.values.second)
        .fold(1.0f64, |m, v| m.max(v.abs()));
    if sep > COINCIDENCE_TOL * size {
        return Err(Error::Precondition(format!(
            "base point is not a coincidence point (separation {sep:.3e})"
        )));
    }
    let base_value = s.values.average();
    let ga = s.grads.average();
    let l = grad_matrix(&ga, k);
    let q = principal_rotation(&l).transpose();
    let rotated = RotatedGraph {
        inner: u,
        base: x0,
        base_value,
        q,
        tilt: l.norm(),
    };
    let r = rotated.rotation_size();
    if r >= MAX_ROTATION {
        return Err(Error::Precondition(format!("|I - Q| = {r:.3} exceeds {MAX_ROTATION}")));
    }
    Ok(rotated)
}
