//! Principal coefficient fields `A^{ij}(x)` in the plane and their
//! conformal normalization.

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::twoval::grid::RectGrid;

/// A symmetric `2 × 2` matrix field.
pub trait MatrixField: Send + Sync {
    fn eval(&self, x: [f64; 2]) -> Matrix2<f64>;

    /// `μ(y) = yᵀA(y)y / |y|²`, the eigenvalue in the radial direction when
    /// `A y = μ y`.
    fn radial_weight(&self, y: [f64; 2]) -> f64 {
        let a = self.eval(y);
        let r2 = y[0] * y[0] + y[1] * y[1];
        if r2 == 0.0 {
            return 0.5 * a.trace();
        }
        (y[0] * (a[(0, 0)] * y[0] + a[(0, 1)] * y[1]) + y[1] * (a[(1, 0)] * y[0] + a[(1, 1)] * y[1])) / r2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Identity;

impl MatrixField for Identity {
    fn eval(&self, _x: [f64; 2]) -> Matrix2<f64> {
        Matrix2::identity()
    }
}

/// `c I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledIdentity(pub f64);

impl MatrixField for ScaledIdentity {
    fn eval(&self, _x: [f64; 2]) -> Matrix2<f64> {
        Matrix2::identity() * self.0
    }
}

/// `(1 + ε r) I`: radially conformal, so `A y = μ y` with `μ = 1 + ε r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialConformal {
    pub eps: f64,
}

impl RadialConformal {
    pub fn mu(&self, r: f64) -> f64 {
        1.0 + self.eps * r
    }
}

impl MatrixField for RadialConformal {
    fn eval(&self, x: [f64; 2]) -> Matrix2<f64> {
        Matrix2::identity() * self.mu(x[0].hypot(x[1]))
    }
}

/// `I + ε x_1 e_1 ⊗ e_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearAnisotropic {
    pub eps: f64,
}

impl MatrixField for LinearAnisotropic {
    fn eval(&self, x: [f64; 2]) -> Matrix2<f64> {
        Matrix2::new(1.0 + self.eps * x[0], 0.0, 0.0, 1.0)
    }
}

/// Matrix samples on a rectangular grid, bilinearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMatrixField {
    pub grid: RectGrid,
    pub values: Vec<Matrix2<f64>>,
}

impl SampledMatrixField {
    pub fn new(grid: RectGrid, values: Vec<Matrix2<f64>>) -> Result<Self> {
        if values.len() != grid.nx * grid.ny {
            return Err(Error::DimensionMismatch {
                expected: grid.nx * grid.ny,
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn sample(field: &dyn MatrixField, grid: RectGrid) -> Self {
        let values = (0..grid.nx * grid.ny).map(|i| field.eval(grid.point(i))).collect();
        Self { grid, values }
    }
}

impl MatrixField for SampledMatrixField {
    fn eval(&self, x: [f64; 2]) -> Matrix2<f64> {
        let g = &self.grid;
        let fx = ((x[0] - g.origin[0]) / g.h).clamp(0.0, (g.nx - 1) as f64);
        let fy = ((x[1] - g.origin[1]) / g.h).clamp(0.0, (g.ny - 1) as f64);
        let i = (fx.floor() as usize).min(g.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(g.ny.saturating_sub(2));
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let at = |a: usize, b: usize| self.values[g.index(a.min(g.nx - 1), b.min(g.ny - 1))];
        at(i, j) * ((1.0 - tx) * (1.0 - ty))
            + at(i + 1, j) * (tx * (1.0 - ty))
            + at(i, j + 1) * ((1.0 - tx) * ty)
            + at(i + 1, j + 1) * (tx * ty)
    }
}

/// A coefficient field with measured regularity data.
#[derive(Clone)]
pub struct CoefficientField {
    pub field: Arc<dyn MatrixField>,
    /// Max over grid edges of `|A(x) − A(y)| / |x − y|` (Frobenius).
    pub lipschitz_bound: f64,
    /// `(α, [A − I]_α)` over the sampling grid.
    pub holder: Option<(f64, f64)>,
    /// `|A(0) − I|`.
    pub origin_defect: f64,
}

impl std::fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientField")
            .field("lipschitz_bound", &self.lipschitz_bound)
            .field("holder", &self.holder)
            .field("origin_defect", &self.origin_defect)
            .finish()
    }
}

fn edge_lipschitz(grid: &RectGrid, values: &[f64], stride: usize, skip: Option<usize>) -> f64 {
    let mut best = 0.0f64;
    for idx in 0..grid.nx * grid.ny {
        if Some(idx) == skip {
            continue;
        }
        let (i, j) = grid.ij(idx);
        for (a, b) in [(i + 1, j), (i, j + 1)] {
            if a >= grid.nx || b >= grid.ny {
                continue;
            }
            let n = grid.index(a, b);
            if Some(n) == skip {
                continue;
            }
            let d: f64 = (0..stride)
                .map(|c| (values[idx * stride + c] - values[n * stride + c]).powi(2))
                .sum::<f64>()
                .sqrt();
            best = best.max(d / grid.h);
        }
    }
    best
}

impl CoefficientField {
    /// Measure regularity of `field` on `grid`; the Hölder seminorm of
    /// `A − I` with exponent `alpha` is taken over all node pairs.
    pub fn measure(field: Arc<dyn MatrixField>, grid: &RectGrid, alpha: Option<f64>) -> Self {
        let n = grid.nx * grid.ny;
        let flat: Vec<f64> = (0..n)
            .flat_map(|i| {
                let a = field.eval(grid.point(i));
                [a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]]
            })
            .collect();
        let lipschitz_bound = edge_lipschitz(grid, &flat, 4, None);
        let holder = alpha.map(|al| {
            let mut best = 0.0f64;
            for p in 0..n {
                let xp = grid.point(p);
                for q in p + 1..n {
                    let xq = grid.point(q);
                    let dx = (xp[0] - xq[0]).hypot(xp[1] - xq[1]);
                    let d: f64 = (0..4)
                        .map(|c| (flat[p * 4 + c] - flat[q * 4 + c]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    best = best.max(d / dx.powf(al));
                }
            }
            (al, best)
        });
        let origin_defect = (field.eval([0.0, 0.0]) - Matrix2::identity()).norm();
        Self {
            field,
            lipschitz_bound,
            holder,
            origin_defect,
        }
    }
}

/// `det(A)^{-1/n} A` and the conformal factor on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalNormalization {
    pub grid: RectGrid,
    /// `det(A)^{-1/2} A`.
    pub normalized: Vec<Matrix2<f64>>,
    /// `η(x) = Â^{ℓm} x_ℓ x_m / r²`; NaN at the origin.
    pub eta: Vec<f64>,
    /// `η^{(n-2)/2} Â`, equal to `Â` in the plane.
    pub transformed: Vec<Matrix2<f64>>,
    /// Max difference quotient of `η` over grid edges avoiding the origin.
    pub eta_lipschitz: f64,
}

impl ConformalNormalization {
    pub fn normalized_field(&self) -> SampledMatrixField {
        SampledMatrixField {
            grid: self.grid,
            values: self.normalized.clone(),
        }
    }
}

/// `A^{ℓm} x_ℓ x_m / r²` for the matrix `a` at `x ≠ 0`.
pub fn conformal_factor(a: &Matrix2<f64>, x: [f64; 2]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    (a[(0, 0)] * x[0] * x[0] + (a[(0, 1)] + a[(1, 0)]) * x[0] * x[1] + a[(1, 1)] * x[1] * x[1]) / r2
}

pub fn conformal_normalize(field: &dyn MatrixField, grid: &RectGrid) -> Result<ConformalNormalization> {
    let n = grid.nx * grid.ny;
    let mut normalized = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    let mut origin = None;
    for idx in 0..n {
        let x = grid.point(idx);
        let a = field.eval(x);
        let det = a.determinant();
        if !(a[(0, 0)] > 0.0 && det > 0.0) {
            return Err(Error::NotPositiveDefinite { node: idx });
        }
        let an = a / det.sqrt();
        if x[0] == 0.0 && x[1] == 0.0 {
            origin = Some(idx);
            eta.push(f64::NAN);
        } else {
            eta.push(conformal_factor(&an, x));
        }
        normalized.push(an);
    }
    let eta_lipschitz = edge_lipschitz(grid, &eta, 1, origin);
    let transformed = normalized.clone();
    Ok(ConformalNormalization {
        grid: *grid,
        normalized,
        eta,
        transformed,
        eta_lipschitz,
    })
}
