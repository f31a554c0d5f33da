//! Finite-difference residuals of the minimal surface system and of the
//! average/difference split.
//!
//! Divergence-form residuals put fluxes on half nodes: at `(i+½, j)` the
//! `x` derivative is the one-step difference across the half node and the
//! `y` derivative averages the centered differences of its two neighbours.
//! The scheme is second order for smooth data. Nodes without a full stencil
//! are `NaN`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::twoval::diff::{gradient, gradient_pairs, hessian};
use crate::twoval::field::{SymmetricField, TwoValuedField, VectorField};
use crate::twoval::grid::RectGrid;

use super::metric::{big_g, coefficients_ae, flux};

type Sampler<'a> = dyn Fn(usize) -> Option<Vec<f64>> + 'a;

/// Half-node gradients (`2 × k`) for `x`-half nodes `(i+½, j)` and
/// `y`-half nodes `(i, j+½)`, both stored at the index of the lower node.
struct HalfNodes {
    x: Vec<Option<DMatrix<f64>>>,
    y: Vec<Option<DMatrix<f64>>>,
}

fn half_node_gradients(g: &RectGrid, k: usize, val: &Sampler) -> HalfNodes {
    let n = g.len();
    let mut x = vec![None; n];
    let mut y = vec![None; n];
    let h = g.h;
    let get = |i: usize, j: usize| val(g.index(i, j));
    for j in 0..g.ny {
        for i in 0..g.nx {
            let idx = g.index(i, j);
            if i + 1 < g.nx && j >= 1 && j + 1 < g.ny {
                let vals = [
                    get(i, j),
                    get(i + 1, j),
                    get(i, j + 1),
                    get(i, j - 1),
                    get(i + 1, j + 1),
                    get(i + 1, j - 1),
                ];
                if vals.iter().all(Option::is_some) {
                    let v: Vec<Vec<f64>> = vals.into_iter().map(Option::unwrap).collect();
                    x[idx] = Some(DMatrix::from_fn(2, k, |r, c| {
                        if r == 0 {
                            (v[1][c] - v[0][c]) / h
                        } else {
                            (v[2][c] - v[3][c] + v[4][c] - v[5][c]) / (4.0 * h)
                        }
                    }));
                }
            }
            if j + 1 < g.ny && i >= 1 && i + 1 < g.nx {
                let vals = [
                    get(i, j),
                    get(i, j + 1),
                    get(i + 1, j),
                    get(i - 1, j),
                    get(i + 1, j + 1),
                    get(i - 1, j + 1),
                ];
                if vals.iter().all(Option::is_some) {
                    let v: Vec<Vec<f64>> = vals.into_iter().map(Option::unwrap).collect();
                    y[idx] = Some(DMatrix::from_fn(2, k, |r, c| {
                        if r == 1 {
                            (v[1][c] - v[0][c]) / h
                        } else {
                            (v[2][c] - v[3][c] + v[4][c] - v[5][c]) / (4.0 * h)
                        }
                    }));
                }
            }
        }
    }
    HalfNodes { x, y }
}

/// Divergence of half-node fluxes (`2 × m` matrices, row `i` is the `i`-th
/// flux component) at every interior node; `m` output components per node.
fn divergence(g: &RectGrid, m: usize, fx: &[Option<DMatrix<f64>>], fy: &[Option<DMatrix<f64>>]) -> Vec<f64> {
    let mut out = vec![f64::NAN; g.len() * m];
    for idx in 0..g.len() {
        if !g.is_interior(idx) {
            continue;
        }
        let left = g.offset(idx, -1, 0).unwrap();
        let down = g.offset(idx, 0, -1).unwrap();
        if let (Some(r), Some(l), Some(u), Some(d)) = (&fx[idx], &fx[left], &fy[idx], &fy[down]) {
            for c in 0..m {
                out[idx * m + c] = (r[(0, c)] - l[(0, c)] + u[(1, c)] - d[(1, c)]) / g.h;
            }
        }
    }
    out
}

fn map_flux<F: Fn(&DMatrix<f64>) -> DMatrix<f64>>(p: &[Option<DMatrix<f64>>], f: F) -> Vec<Option<DMatrix<f64>>> {
    p.iter().map(|o| o.as_ref().map(&f)).collect()
}

/// Residual fields of the minimal surface system for a single-valued `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct MssResidual {
    /// `Σ_i D_i(G^{ij}(Du) D_j u^κ)`, `k` entries per node.
    pub divergence: Vec<f64>,
    /// `Σ_{ij} G^{ij}(Du) D_i D_j u^κ`, `k` entries per node.
    pub nondivergence: Vec<f64>,
    /// `Σ_i D_i G^{ij}(Du)`, `n = 2` entries per node.
    pub identities: Vec<f64>,
}

pub fn mss_residual(u: &VectorField) -> Result<MssResidual> {
    let g = *u.grid.as_rect()?;
    let k = u.k;
    let sampler = |idx: usize| Some(u.at(idx).to_vec());
    let half = half_node_gradients(&g, k, &sampler);
    let divergence = divergence(&g, k, &map_flux(&half.x, flux), &map_flux(&half.y, flux));
    let identities = divergence_of_g(&g, &map_flux(&half.x, big_g), &map_flux(&half.y, big_g));

    let du = gradient(u)?;
    let d2u = hessian(u)?;
    let mut nondivergence = vec![f64::NAN; u.len() * k];
    for idx in 0..u.len() {
        if !g.is_interior(idx) {
            continue;
        }
        let p = DMatrix::from_row_slice(2, k, du.at(idx));
        let gg = big_g(&p);
        let hs = d2u.at(idx);
        for c in 0..k {
            let (xx, xy, yy) = (hs[c], hs[k + c], hs[2 * k + c]);
            nondivergence[idx * k + c] = gg[(0, 0)] * xx + (gg[(0, 1)] + gg[(1, 0)]) * xy + gg[(1, 1)] * yy;
        }
    }
    Ok(MssResidual {
        divergence,
        nondivergence,
        identities,
    })
}

/// `Σ_i D_i M^{ij}` for half-node `2 × 2` matrices `M`.
fn divergence_of_g(g: &RectGrid, fx: &[Option<DMatrix<f64>>], fy: &[Option<DMatrix<f64>>]) -> Vec<f64> {
    divergence(g, 2, fx, fy)
}

/// Residuals of the split system in `(u_a, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResidual {
    /// Difference system, flux `A(Du_a,Dv) Dv + (E·Dv) Du_a`; `k` per node,
    /// evaluated on the labeled sheet of `v`.
    pub difference: Vec<f64>,
    /// Sum system, flux `A(Du_a,Dv) Du_a + (E·Dv) Dv`; `k` per node.
    pub sum: Vec<f64>,
    /// The same two residuals with fluxes `ν(Du_1) ∓ ν(Du_2)` computed
    /// directly from the sheets, for cross-checking the coefficient route.
    pub difference_direct: Vec<f64>,
    pub sum_direct: Vec<f64>,
    /// `Σ_i D_i A^{ij}(Du_a, Dv)`, 2 per node.
    pub a_identity: Vec<f64>,
}

/// Residuals of the difference and sum systems on the labeled region of `v`.
pub fn split_system_residual(u_a: &VectorField, v: &SymmetricField, gl: &GaussLegendre) -> Result<SplitResidual> {
    let g = *u_a.grid.as_rect()?;
    if v.grid != u_a.grid || v.k != u_a.k {
        return Err(Error::InvalidInput("u_a and v live on different grids".into()));
    }
    let labels = v.sheet_labels.as_ref().ok_or(Error::UnlabeledPatch)?;
    if labels.region.is_empty() {
        return Err(Error::UnlabeledPatch);
    }
    let k = v.k;
    let avg = |idx: usize| Some(u_a.at(idx).to_vec());
    let sel = |idx: usize| v.selected(idx);
    let pa = half_node_gradients(&g, k, &avg);
    let qv = half_node_gradients(&g, k, &sel);

    let zip = |a: &[Option<DMatrix<f64>>], b: &[Option<DMatrix<f64>>]| -> Vec<Option<(DMatrix<f64>, DMatrix<f64>)>> {
        a.iter()
            .zip(b)
            .map(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => Some((x.clone(), y.clone())),
                _ => None,
            })
            .collect()
    };
    let px = zip(&pa.x, &qv.x);
    let py = zip(&pa.y, &qv.y);

    struct Fluxes {
        diff: Option<DMatrix<f64>>,
        sum: Option<DMatrix<f64>>,
        diff_direct: Option<DMatrix<f64>>,
        sum_direct: Option<DMatrix<f64>>,
        a: Option<DMatrix<f64>>,
    }
    let fluxes = |pq: &Option<(DMatrix<f64>, DMatrix<f64>)>| -> Fluxes {
        match pq {
            None => Fluxes {
                diff: None,
                sum: None,
                diff_direct: None,
                sum_direct: None,
                a: None,
            },
            Some((p, q)) => {
                let c = coefficients_ae(p, q, gl);
                let eq = c.contract(q);
                let n1 = flux(&(p + q));
                let n2 = flux(&(p - q));
                Fluxes {
                    diff: Some(&c.a * q + &eq * p),
                    sum: Some(&c.a * p + &eq * q),
                    diff_direct: Some(&n1 - &n2),
                    sum_direct: Some(&n1 + &n2),
                    a: Some(c.a),
                }
            }
        }
    };
    let fx: Vec<Fluxes> = px.iter().map(fluxes).collect();
    let fy: Vec<Fluxes> = py.iter().map(fluxes).collect();
    let pick = |f: &[Fluxes], which: fn(&Fluxes) -> &Option<DMatrix<f64>>| -> Vec<Option<DMatrix<f64>>> {
        f.iter().map(|x| which(x).clone()).collect()
    };
    Ok(SplitResidual {
        difference: divergence(&g, k, &pick(&fx, |f| &f.diff), &pick(&fy, |f| &f.diff)),
        sum: divergence(&g, k, &pick(&fx, |f| &f.sum), &pick(&fy, |f| &f.sum)),
        difference_direct: divergence(&g, k, &pick(&fx, |f| &f.diff_direct), &pick(&fy, |f| &f.diff_direct)),
        sum_direct: divergence(&g, k, &pick(&fx, |f| &f.sum_direct), &pick(&fy, |f| &f.sum_direct)),
        a_identity: divergence(&g, 2, &pick(&fx, |f| &f.a), &pick(&fy, |f| &f.a)),
    })
}

/// Combine residual fields computed on different labeled patches, taking
/// the first finite value at each entry.
pub fn merge_residuals(parts: &[&[f64]]) -> Vec<f64> {
    let len = parts.first().map_or(0, |p| p.len());
    (0..len)
        .map(|i| parts.iter().map(|p| p[i]).find(|v| v.is_finite()).unwrap_or(f64::NAN))
        .collect()
}

/// Largest finite residual magnitude at nodes farther than `exclude` from
/// `center`.
pub fn max_residual_outside(g: &RectGrid, values: &[f64], m: usize, center: [f64; 2], exclude: f64) -> f64 {
    let mut best: f64 = 0.0;
    for idx in 0..g.len() {
        let x = g.point(idx);
        if (x[0] - center[0]).hypot(x[1] - center[1]) <= exclude {
            continue;
        }
        for c in 0..m {
            let r = values[idx * m + c];
            if r.is_finite() {
                best = best.max(r.abs());
            }
        }
    }
    best
}

/// Compactly supported test function `ψ(|x - c|/s)` with `ψ(t) = (1 - t²)³₊`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Bump {
    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let s2 = self.radius * self.radius;
        let t = 1.0 - (d[0] * d[0] + d[1] * d[1]) / s2;
        if t <= 0.0 {
            return [0.0, 0.0];
        }
        let c = -6.0 * t * t / s2;
        [c * d[0], c * d[1]]
    }
}

/// Weak form of the sum system across the coincidence set: for each bump
/// `ζ`, `max_κ |∫ Σ_i (ν_i^κ(Du_1) + ν_i^κ(Du_2)) D_i ζ|`. The integrand is
/// symmetric in the two sheets, so no labeling is needed.
pub fn weak_sum_residual(u: &TwoValuedField, bumps: &[Bump]) -> Result<Vec<f64>> {
    let g = *u.grid.as_rect()?;
    let k = u.k;
    let du = gradient_pairs(u)?;
    let area = g.h * g.h;
    let mut out = vec![0.0f64; bumps.len()];
    let mut acc = vec![vec![0.0; k]; bumps.len()];
    for idx in 0..u.len() {
        let x = g.point(idx);
        let grads: Vec<[f64; 2]> = bumps.iter().map(|b| b.gradient(x)).collect();
        if grads.iter().all(|d| d[0] == 0.0 && d[1] == 0.0) {
            continue;
        }
        let n1 = flux(&DMatrix::from_row_slice(2, k, du.first_at(idx)));
        let n2 = flux(&DMatrix::from_row_slice(2, k, du.second_at(idx)));
        let total = n1 + n2;
        for (b, d) in grads.iter().enumerate() {
            for c in 0..k {
                acc[b][c] += area * (total[(0, c)] * d[0] + total[(1, c)] * d[1]);
            }
        }
    }
    for (o, a) in out.iter_mut().zip(&acc) {
        *o = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoval::grid::Grid;

    fn holo_square(x: [f64; 2]) -> Vec<f64> {
        vec![x[0] * x[0] - x[1] * x[1], 2.0 * x[0] * x[1]]
    }

    #[test]
    fn affine_graph_has_zero_residual() {
        let g = Grid::Rect(RectGrid::centered(1.0, 8));
        let u = VectorField::from_fn(g, 2, |x| vec![0.3 * x[0] - x[1], 2.0 * x[1] + 0.1]).unwrap();
        let r = mss_residual(&u).unwrap();
        let m = r
            .divergence
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(m < 1e-12);
    }

    fn residual_levels(f: fn([f64; 2]) -> Vec<f64>) -> Vec<f64> {
        [8, 16, 32]
            .iter()
            .map(|&m| {
                let g = Grid::Rect(RectGrid::centered(0.5, m));
                let u = VectorField::from_fn(g, 2, f).unwrap();
                let r = mss_residual(&u).unwrap();
                r.divergence
                    .iter()
                    .filter(|v| v.is_finite())
                    .fold(0.0f64, |a, v| a.max(v.abs()))
            })
            .collect()
    }

    #[test]
    fn holomorphic_graphs_are_minimal() {
        // Holomorphic graphs have G = I, so the quadratic is resolved to
        // round-off and the exponential converges at second order.
        assert!(residual_levels(holo_square).iter().all(|e| *e < 1e-12));
        let errs = residual_levels(|x| {
            let e = x[0].exp();
            vec![e * x[1].cos(), e * x[1].sin()]
        });
        let orders = crate::fit::observed_orders(&errs);
        assert!(orders.iter().all(|o| *o > 1.7), "{errs:?}");
    }

    #[test]
    fn paraboloid_is_not_minimal() {
        let mut errs = Vec::new();
        for m in [8, 16, 32] {
            let g = Grid::Rect(RectGrid::centered(0.5, m));
            let u = VectorField::from_fn(g, 1, |x| vec![x[0] * x[0] + x[1] * x[1]]).unwrap();
            let r = mss_residual(&u).unwrap();
            errs.push(
                r.divergence
                    .iter()
                    .filter(|v| v.is_finite())
                    .fold(0.0f64, |a, v| a.max(v.abs())),
            );
        }
        assert!(errs.iter().all(|e| *e > 1.0), "{errs:?}");
    }

    #[test]
    fn unlabeled_split_is_rejected() {
        let g = Grid::Rect(RectGrid::centered(1.0, 4));
        let u_a = VectorField::from_fn(g, 1, |_| vec![0.0]).unwrap();
        let v = SymmetricField::from_fn(g, 1, |_| vec![1.0]).unwrap();
        assert_eq!(
            split_system_residual(&u_a, &v, &GaussLegendre::new(8)).unwrap_err(),
            Error::UnlabeledPatch
        );
    }
}
