//! First variation of a triangulated two-valued graph.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::twoval::field::TwoValuedField;
use crate::twoval::value::{dist, pair_distance_slices};

/// A vector field on `R^{n+k}` with its Jacobian `∂X_a/∂P_b`.
pub trait AmbientField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, p: &[f64]) -> (DVector<f64>, DMatrix<f64>);
}

/// Shape of an ambient bump field.
#[derive(Debug, Clone, PartialEq)]
pub enum BumpShape {
    /// `ψ(P) (P − c)`.
    Radial,
    /// `ψ(P) d` for a fixed direction `d`.
    Constant(Vec<f64>),
}

/// Vector field with profile `ψ(P) = (1 − |P − c|²/s²)³₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpField {
    pub center: Vec<f64>,
    pub radius: f64,
    pub shape: BumpShape,
}

impl BumpField {
    pub fn radial(center: Vec<f64>, radius: f64) -> Self {
        Self {
            center,
            radius,
            shape: BumpShape::Radial,
        }
    }

    pub fn constant(center: Vec<f64>, radius: f64, direction: Vec<f64>) -> Self {
        Self {
            center,
            radius,
            shape: BumpShape::Constant(direction),
        }
    }
}

impl AmbientField for BumpField {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, p: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.dim();
        let d = DVector::from_iterator(m, p.iter().zip(&self.center).map(|(a, c)| a - c));
        let s2 = self.radius * self.radius;
        let t = 1.0 - d.norm_squared() / s2;
        if t <= 0.0 {
            return (DVector::zeros(m), DMatrix::zeros(m, m));
        }
        let psi = t * t * t;
        let grad_psi = &d * (-6.0 * t * t / s2);
        match &self.shape {
            BumpShape::Radial => {
                let x = &d * psi;
                let dx = DMatrix::identity(m, m) * psi + &d * grad_psi.transpose();
                (x, dx)
            }
            BumpShape::Constant(dir) => {
                let dir = DVector::from_column_slice(dir);
                (&dir * psi, &dir * grad_psi.transpose())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationReport {
    pub value: f64,
    pub triangles: usize,
    pub coincidence_cells: usize,
}

fn point(x: [f64; 2], u: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(2 + u.len());
    p.extend_from_slice(&x);
    p.extend_from_slice(u);
    p
}

/// `∫_T div_T X` by the edge-midpoint rule.
fn triangle_term(a: &[f64], b: &[f64], c: &[f64], x: &dyn AmbientField, cell: usize) -> Result<f64> {
    let m = a.len();
    let e1 = DVector::from_iterator(m, b.iter().zip(a).map(|(p, q)| p - q));
    let e2 = DVector::from_iterator(m, c.iter().zip(a).map(|(p, q)| p - q));
    let mut t = DMatrix::zeros(m, 2);
    t.set_column(0, &e1);
    t.set_column(1, &e2);
    let gram = t.transpose() * &t;
    let det = gram.determinant();
    let scale = e1.norm_squared() * e2.norm_squared();
    if !(det > 1e-24 * scale) || scale == 0.0 {
        return Err(Error::DegenerateTriangle { cell });
    }
    let area = 0.5 * det.sqrt();
    let proj = &t * gram.try_inverse().ok_or(Error::DegenerateTriangle { cell })? * t.transpose();
    let mut sum = 0.0;
    for (p, q) in [(a, b), (b, c), (c, a)] {
        let mid: Vec<f64> = p.iter().zip(q).map(|(s, t)| 0.5 * (s + t)).collect();
        let (_, dx) = x.eval(&mid);
        sum += proj.component_mul(&dx.transpose()).sum();
    }
    Ok(area * sum / 3.0)
}

/// `∫ div_G X θ dH²` over the piecewise-linear graph of `u` on its
/// rectangular grid. Cells where the two values agree within `tol_value`
/// at every corner are taken once with multiplicity 2.
pub fn first_variation(u: &TwoValuedField, x: &dyn AmbientField, tol_value: f64) -> Result<VariationReport> {
    let g = u.grid.as_rect()?;
    if x.dim() != 2 + u.k {
        return Err(Error::DimensionMismatch {
            expected: 2 + u.k,
            got: x.dim(),
        });
    }
    let cells: Vec<(usize, usize)> = (0..g.ny - 1).flat_map(|j| (0..g.nx - 1).map(move |i| (i, j))).collect();
    use rayon::prelude::*;
    let parts: Vec<(f64, usize, bool)> = cells
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, usize, bool)> {
            let cell = g.index(i, j);
            let corners = [
                g.index(i, j),
                g.index(i + 1, j),
                g.index(i + 1, j + 1),
                g.index(i, j + 1),
            ];
            let coincident = corners.iter().all(|&c| dist(u.first_at(c), u.second_at(c)) < tol_value);
            // align each corner's pair with the first corner
            let r = corners[0];
            let mut sheets = [Vec::with_capacity(4), Vec::with_capacity(4)];
            for &c in &corners {
                let (_, crossed) = pair_distance_slices(u.first_at(r), u.second_at(r), u.first_at(c), u.second_at(c));
                let (s0, s1) = if crossed {
                    (u.second_at(c), u.first_at(c))
                } else {
                    (u.first_at(c), u.second_at(c))
                };
                let pt = g.point(c);
                sheets[0].push(point(pt, s0));
                sheets[1].push(point(pt, s1));
            }
            let (used, mult) = if coincident { (1, 2.0) } else { (2, 1.0) };
            let mut total = 0.0;
            let mut count = 0;
            for s in sheets.iter().take(used) {
                total += mult * triangle_term(&s[0], &s[1], &s[2], x, cell)?;
                total += mult * triangle_term(&s[0], &s[2], &s[3], x, cell)?;
                count += 2;
            }
            Ok((total, count, coincident))
        })
        .collect::<Result<_>>()?;
    // fixed-order reduction keeps the sum independent of thread count
    let mut report = VariationReport {
        value: 0.0,
        triangles: 0,
        coincidence_cells: 0,
    };
    for (v, t, c) in parts {
        report.value += v;
        report.triangles += t;
        report.coincidence_cells += c as usize;
    }
    Ok(report)
}
