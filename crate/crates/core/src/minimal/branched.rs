//! The branched minimal graph `{w² = z³}` in `C × C ≅ R⁴`, optionally
//! rotated, regraphed as a two-valued function over the horizontal plane.

use nalgebra::{DMatrix, Matrix2, Matrix4, Matrix4x2, Vector2, Vector4};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::twoval::field::TwoValuedField;
use crate::twoval::grid::Grid;
use crate::twoval::value::TwoValue;

/// Values and gradients of a two-valued function at one point. The `i`-th
/// entry of `values` and `grads` belong to the same sheet; gradient layout
/// is `i * k + κ` for `∂_i u^κ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoValuedSample {
    pub values: TwoValue,
    pub grads: TwoValue,
}

/// A two-valued function on the plane that can be evaluated pointwise.
pub trait TwoValuedFn: Send + Sync {
    fn k(&self) -> usize;
    fn sample(&self, x: [f64; 2]) -> Result<TwoValuedSample>;

    /// `Du_a(x)`, layout `i * k + κ`.
    fn average_gradient(&self, x: [f64; 2]) -> Result<Vec<f64>> {
        Ok(self.sample(x)?.grads.average())
    }
}

/// Sample values of `f` at every grid node (in parallel; output order is
/// fixed by the grid).
pub fn sample_field(f: &dyn TwoValuedFn, grid: Grid) -> Result<TwoValuedField> {
    let samples: Vec<TwoValuedSample> = (0..grid.len())
        .into_par_iter()
        .map(|idx| f.sample(grid.point(idx)))
        .collect::<Result<_>>()?;
    let k = f.k();
    let mut first = Vec::with_capacity(grid.len() * k);
    let mut second = Vec::with_capacity(grid.len() * k);
    for s in samples {
        first.extend_from_slice(&s.values.first);
        second.extend_from_slice(&s.values.second);
    }
    TwoValuedField::new(grid, k, first, second)
}

/// `{L x + c, L x + c}` for `L` of shape `k × 2`: a single affine sheet
/// counted twice.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePair {
    pub slope: DMatrix<f64>,
    pub offset: Vec<f64>,
}

impl TwoValuedFn for AffinePair {
    fn k(&self) -> usize {
        self.offset.len()
    }

    fn sample(&self, x: [f64; 2]) -> Result<TwoValuedSample> {
        let k = self.k();
        let v: Vec<f64> = (0..k)
            .map(|c| self.offset[c] + self.slope[(c, 0)] * x[0] + self.slope[(c, 1)] * x[1])
            .collect();
        let mut g = vec![0.0; 2 * k];
        for i in 0..2 {
            for c in 0..k {
                g[i * k + c] = self.slope[(c, i)];
            }
        }
        Ok(TwoValuedSample {
            values: TwoValue::new(v.clone(), v)?,
            grads: TwoValue::new(g.clone(), g)?,
        })
    }
}

/// Rotation by `angle` in the coordinate plane `(i, j)` of `R⁴`, ordered
/// `(x_1, x_2, w_1, w_2)`.
pub fn plane_rotation(i: usize, j: usize, angle: f64) -> Matrix4<f64> {
    let mut q = Matrix4::identity();
    let (s, c) = angle.sin_cos();
    q[(i, i)] = c;
    q[(j, j)] = c;
    q[(i, j)] = -s;
    q[(j, i)] = s;
    q
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
const MAX_ROTATION: f64 = 0.2;
const VARIETY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchedExample {
    pub rotation: Matrix4<f64>,
}

type C2 = Vector2<f64>;

fn cmul(a: C2, b: C2) -> C2 {
    C2::new(a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])
}

fn csqrt(a: C2) -> C2 {
    let r = a.norm();
    let re = (0.5 * (r + a[0])).sqrt();
    let im = (0.5 * (r - a[0])).sqrt();
    C2::new(re, if a[1] < 0.0 { -im } else { im })
}

/// Real 2×2 matrix of multiplication by the complex number `a`.
fn cmat(a: C2) -> Matrix2<f64> {
    Matrix2::new(a[0], -a[1], a[1], a[0])
}

/// `ζ ↦ (ζ², ζ³)`.
fn phi(z: C2) -> Vector4<f64> {
    let z2 = cmul(z, z);
    let z3 = cmul(z2, z);
    Vector4::new(z2[0], z2[1], z3[0], z3[1])
}

fn dphi(z: C2) -> Matrix4x2<f64> {
    let d2 = cmat(z * 2.0);
    let d3 = cmat(cmul(z, z) * 3.0);
    let mut m = Matrix4x2::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&d2);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&d3);
    m
}

impl BranchedExample {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix4::identity(),
        }
    }

    pub fn new(rotation: Matrix4<f64>) -> Result<Self> {
        let defect = (rotation.transpose() * rotation - Matrix4::identity()).amax();
        if defect > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "rotation is not orthogonal (defect {defect:.3e})"
            )));
        }
        let size = (Matrix4::identity() - rotation).norm();
        if size >= MAX_ROTATION {
            return Err(Error::Precondition(format!(
                "|I - Q| = {size:.3} exceeds {MAX_ROTATION}; regraphing is not reliable"
            )));
        }
        Ok(Self { rotation })
    }

    /// Rotation by `angle` in the `(x_1, w_1)` plane.
    pub fn rotated(angle: f64) -> Result<Self> {
        Self::new(plane_rotation(0, 2, angle))
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix4::identity()
    }

    /// The branch point lies over the origin for every rotation, since the
    /// rotation fixes the singular point of the variety.
    pub fn branch_point(&self) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// Slope of the common tangent plane at the branch point, the image of
    /// `{w = 0}` under the rotation: `Q_wx Q_xx^{-1}`.
    pub fn tangent_slope(&self) -> Result<Matrix2<f64>> {
        let q = &self.rotation;
        let qxx = q.fixed_view::<2, 2>(0, 0).into_owned();
        let qwx = q.fixed_view::<2, 2>(2, 0).into_owned();
        let inv = qxx.try_inverse().ok_or_else(|| Error::NotInjective {
            context: "tangent plane is vertical".into(),
        })?;
        Ok(qwx * inv)
    }

    fn horizontal(&self) -> nalgebra::Matrix2x4<f64> {
        self.rotation.fixed_rows::<2>(0).into_owned()
    }

    fn vertical(&self) -> nalgebra::Matrix2x4<f64> {
        self.rotation.fixed_rows::<2>(2).into_owned()
    }

    fn solve(&self, x: C2, start: C2) -> Result<C2> {
        let px = self.horizontal();
        let residual = |z: C2| px * phi(z) - x;
        let mut z = start;
        let mut f = residual(z);
        let scale = x.norm().max(f64::MIN_POSITIVE);
        for _ in 0..NEWTON_MAX_ITER {
            if f.norm() <= NEWTON_TOL * scale {
                return Ok(z);
            }
            let j = px * dphi(z);
            let step = j.lu().solve(&f).ok_or_else(|| Error::NewtonDivergence {
                context: format!("x = ({}, {}): singular Jacobian", x[0], x[1]),
            })?;
            let mut t = 1.0;
            loop {
                let cand = z - step * t;
                let fc = residual(cand);
                if fc.norm() < f.norm() || t < 1e-9 {
                    z = cand;
                    f = fc;
                    break;
                }
                t *= 0.5;
            }
        }
        if f.norm() <= NEWTON_TOL * scale {
            Ok(z)
        } else {
            Err(Error::NewtonDivergence {
                context: format!("x = ({}, {}), residual {:.3e}", x[0], x[1], f.norm()),
            })
        }
    }

    /// Value, gradient (`k × n` matrix `∂w^κ/∂x_i`) and un-rotated variety
    /// residual for the sheet through `ζ`.
    fn sheet(&self, x: C2, z: C2) -> (C2, Matrix2<f64>, f64) {
        let p = phi(z);
        let w = self.vertical() * p;
        let grad = if z.norm() == 0.0 {
            let flat = Matrix4x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
            let a = self.vertical() * flat;
            let b = self.horizontal() * flat;
            a * b.try_inverse().unwrap_or_else(Matrix2::zeros)
        } else {
            let d = dphi(z);
            let a = self.vertical() * d;
            let b = self.horizontal() * d;
            a * b.try_inverse().unwrap_or_else(Matrix2::zeros)
        };
        let xw = self.rotation.transpose() * Vector4::new(x[0], x[1], w[0], w[1]);
        let (zz, ww) = (C2::new(xw[0], xw[1]), C2::new(xw[2], xw[3]));
        let res = (cmul(ww, ww) - cmul(cmul(zz, zz), zz)).norm();
        (w, grad, res)
    }
}

fn pack_grad(m: &Matrix2<f64>) -> Vec<f64> {
    // entry i * k + κ holds ∂_i w^κ = m[(κ, i)]
    vec![m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)]]
}

/// The holomorphic graph `z ↦ z²` taken twice, a smooth minimal graph
/// whose two sheets coincide everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HolomorphicSquare;

impl TwoValuedFn for HolomorphicSquare {
    fn k(&self) -> usize {
        2
    }

    fn sample(&self, x: [f64; 2]) -> Result<TwoValuedSample> {
        let v = vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]];
        let g = vec![2.0 * x[0], 2.0 * x[1], -2.0 * x[1], 2.0 * x[0]];
        Ok(TwoValuedSample {
            values: TwoValue::new(v.clone(), v)?,
            grads: TwoValue::new(g.clone(), g)?,
        })
    }
}

impl TwoValuedFn for BranchedExample {
    fn k(&self) -> usize {
        2
    }

    /// At the branch point both sheets share the tangent plane.
    fn average_gradient(&self, x: [f64; 2]) -> Result<Vec<f64>> {
        if x[0].hypot(x[1]) < 1e-14 {
            let l = self.tangent_slope()?;
            return Ok(vec![l[(0, 0)], l[(1, 0)], l[(0, 1)], l[(1, 1)]]);
        }
        Ok(self.sample(x)?.grads.average())
    }

    fn sample(&self, x: [f64; 2]) -> Result<TwoValuedSample> {
        let xc = C2::new(x[0], x[1]);
        if self.is_identity() {
            // principal branch of z^{3/2}
            let r = xc.norm();
            let t = x[1].atan2(x[0]);
            let m = r.powf(1.5);
            let v = vec![m * (1.5 * t).cos(), m * (1.5 * t).sin()];
            let d = 1.5 * r.sqrt();
            let (gr, gi) = (d * (0.5 * t).cos(), d * (0.5 * t).sin());
            // complex derivative (gr + i gi): ∂_x = (gr, gi), ∂_y = (-gi, gr)
            let g = vec![gr, gi, -gi, gr];
            return Ok(TwoValuedSample {
                values: TwoValue::symmetric(v),
                grads: TwoValue::symmetric(g),
            });
        }
        let mut vals = Vec::with_capacity(2);
        let mut grads = Vec::with_capacity(2);
        let tiny = xc.norm() < 1e-14;
        for sign in [1.0, -1.0] {
            let z = if tiny {
                C2::zeros()
            } else {
                self.solve(xc, csqrt(xc) * sign)?
            };
            let (w, g, res) = self.sheet(xc, z);
            if res > VARIETY_TOL {
                return Err(Error::NewtonDivergence {
                    context: format!("x = ({}, {}): variety residual {res:.3e} after un-rotation", x[0], x[1]),
                });
            }
            vals.push(vec![w[0], w[1]]);
            grads.push(pack_grad(&g));
        }
        let (g2, g1) = (grads.pop().unwrap(), grads.pop().unwrap());
        let (v2, v1) = (vals.pop().unwrap(), vals.pop().unwrap());
        Ok(TwoValuedSample {
            values: TwoValue::new(v1, v2)?,
            grads: TwoValue::new(g1, g2)?,
        })
    }
}
