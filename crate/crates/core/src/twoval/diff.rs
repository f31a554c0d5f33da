//! Finite differences of two-valued fields.
//!
//! On rectangular grids each stencil neighbour is paired with the centre
//! node by the min-over-pairings rule, which amounts to continuing each sheet
//! one grid step. Gradients are centered and second order, falling back to
//! the three-point one-sided formula at the edge of the grid. On polar grids
//! the double-cover parametrization already fixes the sheets.
//!
//! Gradient layout: `2k` entries per node, entry `i * k + κ` is `∂_i u^κ`.
//! Hessian layout: `3k` entries per node, blocks `xx`, `xy`, `yy`.

use crate::error::{Error, Result};

use super::field::{SymmetricField, TwoValuedField, VectorField};
use super::grid::{Grid, PolarGrid, RectGrid};
use super::value::pair_distance_slices;

type Pair = (Vec<f64>, Vec<f64>);

fn pair_at(u: &TwoValuedField, idx: usize) -> Pair {
    (u.first_at(idx).to_vec(), u.second_at(idx).to_vec())
}

/// Neighbour pair reordered so that its first entry continues `reference.0`.
fn aligned(u: &TwoValuedField, nb: usize, reference: &Pair) -> Pair {
    let (c, d) = pair_at(u, nb);
    let (_, crossed) = pair_distance_slices(&reference.0, &reference.1, &c, &d);
    if crossed {
        (d, c)
    } else {
        (c, d)
    }
}

fn combine(terms: &[(f64, &Pair)], out_first: &mut [f64], out_second: &mut [f64]) {
    out_first.iter_mut().for_each(|x| *x = 0.0);
    out_second.iter_mut().for_each(|x| *x = 0.0);
    for (c, p) in terms {
        for (o, v) in out_first.iter_mut().zip(&p.0) {
            *o += c * v;
        }
        for (o, v) in out_second.iter_mut().zip(&p.1) {
            *o += c * v;
        }
    }
}

fn rect_first_derivative(
    u: &TwoValuedField,
    g: &RectGrid,
    idx: usize,
    dir: usize,
    out_first: &mut [f64],
    out_second: &mut [f64],
) -> Result<()> {
    let (di, dj) = if dir == 0 { (1, 0) } else { (0, 1) };
    let p0 = pair_at(u, idx);
    let plus = g.offset(idx, di, dj);
    let minus = g.offset(idx, -di, -dj);
    let h = g.h;
    match (plus, minus) {
        (Some(p), Some(m)) => {
            let pp = aligned(u, p, &p0);
            let pm = aligned(u, m, &p0);
            combine(&[(0.5 / h, &pp), (-0.5 / h, &pm)], out_first, out_second);
        }
        (Some(p), None) | (None, Some(p)) => {
            let sign = if plus.is_some() { 1.0 } else { -1.0 };
            let p1 = aligned(u, p, &p0);
            let far = g.offset(idx, 2 * di * sign as isize, 2 * dj * sign as isize);
            match far {
                Some(f) => {
                    let p2 = aligned(u, f, &p1);
                    combine(
                        &[(-1.5 * sign / h, &p0), (2.0 * sign / h, &p1), (-0.5 * sign / h, &p2)],
                        out_first,
                        out_second,
                    );
                }
                None => combine(&[(sign / h, &p1), (-sign / h, &p0)], out_first, out_second),
            }
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "differentiation needs at least two nodes per axis".into(),
            ))
        }
    }
    Ok(())
}

fn polar_gradient_of(values: &[f64], k: usize, g: &PolarGrid, idx: usize, out: &mut [f64]) {
    let (ir, it) = g.rt(idx);
    let (r, theta) = g.polar(idx);
    let at = |j: usize| &values[j * k..(j + 1) * k];
    let tp = g.index(ir, it + 1);
    let tm = g.index(ir, it + g.ntheta - 1);
    let dt = g.dtheta();
    let (c, s) = (theta.cos(), theta.sin());
    for kap in 0..k {
        let d_theta = (at(tp)[kap] - at(tm)[kap]) / (2.0 * dt);
        let d_r = if ir > 0 && ir + 1 < g.nr {
            (at(g.index(ir + 1, it))[kap] - at(g.index(ir - 1, it))[kap]) / (2.0 * g.dr)
        } else if ir == 0 {
            let f0 = at(idx)[kap];
            let f1 = at(g.index(1, it))[kap];
            if g.nr > 2 {
                let f2 = at(g.index(2, it))[kap];
                (-1.5 * f0 + 2.0 * f1 - 0.5 * f2) / g.dr
            } else {
                (f1 - f0) / g.dr
            }
        } else {
            let f0 = at(idx)[kap];
            let f1 = at(g.index(ir - 1, it))[kap];
            if g.nr > 2 {
                let f2 = at(g.index(ir - 2, it))[kap];
                (1.5 * f0 - 2.0 * f1 + 0.5 * f2) / g.dr
            } else {
                (f0 - f1) / g.dr
            }
        };
        out[kap] = c * d_r - s / r * d_theta;
        out[k + kap] = s * d_r + c / r * d_theta;
    }
}

/// Per-sheet gradient pair `{Du_1, Du_2}` at every node.
pub fn gradient_pairs(u: &TwoValuedField) -> Result<TwoValuedField> {
    let k = u.k;
    let n = u.len();
    let mut first = vec![0.0; n * 2 * k];
    let mut second = vec![0.0; n * 2 * k];
    match &u.grid {
        Grid::Rect(g) => {
            let mut f = vec![0.0; k];
            let mut s = vec![0.0; k];
            for idx in 0..n {
                for dir in 0..2 {
                    rect_first_derivative(u, g, idx, dir, &mut f, &mut s)?;
                    let base = idx * 2 * k + dir * k;
                    first[base..base + k].copy_from_slice(&f);
                    second[base..base + k].copy_from_slice(&s);
                }
            }
        }
        Grid::Polar(g) => {
            for idx in 0..n {
                let r = idx * 2 * k..(idx + 1) * 2 * k;
                polar_gradient_of(&u.first, k, g, idx, &mut first[r.clone()]);
                polar_gradient_of(&u.second, k, g, idx, &mut second[r]);
            }
        }
    }
    TwoValuedField::new(u.grid, 2 * k, first, second)
}

pub fn gradient(u: &VectorField) -> Result<VectorField> {
    let pairs = gradient_pairs(&TwoValuedField::new(u.grid, u.k, u.values.clone(), u.values.clone())?)?;
    VectorField::new(u.grid, 2 * u.k, pairs.first)
}

/// Gradient of the representative `w` of `{±w}`, continued from `w` at each
/// node (the other sheet's gradient is its negative).
pub fn symmetric_gradient(v: &SymmetricField) -> Result<VectorField> {
    let pairs = gradient_pairs(&v.to_two_valued())?;
    VectorField::new(v.grid, 2 * v.k, pairs.first)
}

/// Per-sheet Hessians on a rectangular grid, continued from the first stored
/// value at each node. Nodes on the grid boundary are `NaN`.
pub fn hessian_pairs(u: &TwoValuedField) -> Result<TwoValuedField> {
    let g = *u.grid.as_rect()?;
    let k = u.k;
    let n = u.len();
    let mut first = vec![f64::NAN; n * 3 * k];
    let mut second = vec![f64::NAN; n * 3 * k];
    let h2 = g.h * g.h;
    let mut f = vec![0.0; k];
    let mut s = vec![0.0; k];
    for idx in 0..n {
        if !g.is_interior(idx) {
            continue;
        }
        let p0 = pair_at(u, idx);
        let nb = |di: isize, dj: isize| aligned(u, g.offset(idx, di, dj).unwrap(), &p0);
        let (xp, xm, yp, ym) = (nb(1, 0), nb(-1, 0), nb(0, 1), nb(0, -1));
        let (pp, pm, mp, mm) = (nb(1, 1), nb(1, -1), nb(-1, 1), nb(-1, -1));
        let blocks: [Vec<(f64, &Pair)>; 3] = [
            vec![(1.0 / h2, &xp), (-2.0 / h2, &p0), (1.0 / h2, &xm)],
            vec![(0.25 / h2, &pp), (-0.25 / h2, &pm), (-0.25 / h2, &mp), (0.25 / h2, &mm)],
            vec![(1.0 / h2, &yp), (-2.0 / h2, &p0), (1.0 / h2, &ym)],
        ];
        for (b, terms) in blocks.iter().enumerate() {
            combine(terms, &mut f, &mut s);
            let base = idx * 3 * k + b * k;
            first[base..base + k].copy_from_slice(&f);
            second[base..base + k].copy_from_slice(&s);
        }
    }
    TwoValuedField::new(u.grid, 3 * k, first, second)
}

pub fn hessian(u: &VectorField) -> Result<VectorField> {
    let pairs = hessian_pairs(&TwoValuedField::new(u.grid, u.k, u.values.clone(), u.values.clone())?)?;
    VectorField::new(u.grid, 3 * u.k, pairs.first)
}

pub fn symmetric_hessian(v: &SymmetricField) -> Result<VectorField> {
    let pairs = hessian_pairs(&v.to_two_valued())?;
    VectorField::new(v.grid, 3 * v.k, pairs.first)
}

/// Five-point polar Laplacian `u_rr + u_r/r + u_θθ/r^2` of a scalar sampled
/// on the double cover. Radial boundary rows are `NaN`.
pub fn polar_laplacian(values: &[f64], g: &PolarGrid) -> Result<Vec<f64>> {
    if values.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: g.len(),
            got: values.len(),
        });
    }
    let mut out = vec![f64::NAN; g.len()];
    let dt = g.dtheta();
    for ir in 1..g.nr - 1 {
        let r = g.r_min + ir as f64 * g.dr;
        for it in 0..g.ntheta {
            let f0 = values[g.index(ir, it)];
            let rp = values[g.index(ir + 1, it)];
            let rm = values[g.index(ir - 1, it)];
            let tp = values[g.index(ir, it + 1)];
            let tm = values[g.index(ir, it + g.ntheta - 1)];
            out[g.index(ir, it)] = (rp - 2.0 * f0 + rm) / (g.dr * g.dr)
                + (rp - rm) / (2.0 * g.dr * r)
                + (tp - 2.0 * f0 + tm) / (dt * dt * r * r);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoval::value::TwoValue;

    #[test]
    fn gradient_of_quadratic_is_exact() {
        let g = Grid::Rect(RectGrid::centered(1.0, 8));
        let u = VectorField::from_fn(g, 1, |x| vec![x[0] * x[0] + 3.0 * x[0] * x[1]]).unwrap();
        let du = gradient(&u).unwrap();
        let hu = hessian(&u).unwrap();
        for idx in 0..u.len() {
            let x = g.point(idx);
            assert!((du.at(idx)[0] - (2.0 * x[0] + 3.0 * x[1])).abs() < 1e-12);
            assert!((du.at(idx)[1] - 3.0 * x[0]).abs() < 1e-12);
            if g.as_rect().unwrap().is_interior(idx) {
                let h = hu.at(idx);
                assert!((h[0] - 2.0).abs() < 1e-9 && (h[1] - 3.0).abs() < 1e-9 && h[2].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gradient_follows_sheets_through_scrambled_storage() {
        let g = Grid::Rect(RectGrid::centered(1.0, 8));
        let u = TwoValuedField::from_fn(g, 1, |x| TwoValue::new(vec![2.0 + x[0]], vec![-2.0 - x[1]]).unwrap()).unwrap();
        let mask: Vec<bool> = (0..u.len()).map(|i| (i * 7) % 3 == 1).collect();
        let du = gradient_pairs(&u.swap_where(&mask)).unwrap();
        for idx in 0..u.len() {
            let v = du.value(idx);
            let want = TwoValue::new(vec![1.0, 0.0], vec![0.0, -1.0]).unwrap();
            assert!(crate::twoval::pair_distance(&v, &want).unwrap() < 1e-12);
        }
    }

    #[test]
    fn polar_gradient_matches_cartesian() {
        let pg = PolarGrid::new(0.5, 1.0, 41, 1024).unwrap();
        let g = Grid::Polar(pg);
        let u = VectorField::from_fn(g, 1, |x| vec![x[0] * x[1]]).unwrap();
        let du = gradient(&u).unwrap();
        for idx in 0..u.len() {
            let x = g.point(idx);
            assert!((du.at(idx)[0] - x[1]).abs() < 1e-3);
            assert!((du.at(idx)[1] - x[0]).abs() < 1e-3);
        }
        let lap = polar_laplacian(&u.values, &pg).unwrap();
        assert!(lap.iter().filter(|v| v.is_finite()).all(|v| v.abs() < 1e-3));
    }
}
