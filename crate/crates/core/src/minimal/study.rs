//! Refinement studies on sampled two-valued graphs: split-system residual
//! orders, first-variation decay and dyadic-annulus growth rates.

use crate::error::{Error, Result};
use crate::fit::observed_orders;
use crate::quadrature::GaussLegendre;
use crate::twoval::field::{decompose, SymmetricField, TwoValuedField, VectorField};
use crate::twoval::grid::{Grid, RectGrid};
use crate::twoval::sheets::select_sheets;

use super::branched::{sample_field, TwoValuedFn};
use super::residual::{max_residual_outside, merge_residuals, split_system_residual, weak_sum_residual, Bump};
use super::variation::{first_variation, BumpField};

/// Per-node Euclidean norms of an `m`-component field.
pub fn node_norms(values: &[f64], m: usize) -> Vec<f64> {
    values
        .chunks(m)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusMax {
    pub d_lo: f64,
    pub d_hi: f64,
    pub max: f64,
    pub count: usize,
}

/// Max of finite `norms` over `2^{-j-1} scale < d ≤ 2^{-j} scale` for each
/// `j` in `levels`.
pub fn dyadic_annulus_maxima(
    grid: &RectGrid,
    center: [f64; 2],
    norms: &[f64],
    scale: f64,
    levels: std::ops::Range<u32>,
) -> Vec<AnnulusMax> {
    levels
        .map(|j| {
            let d_hi = scale * 0.5f64.powi(j as i32);
            let d_lo = 0.5 * d_hi;
            let mut best = 0.0f64;
            let mut count = 0;
            for (idx, n) in norms.iter().enumerate() {
                let p = grid.point(idx);
                let d = (p[0] - center[0]).hypot(p[1] - center[1]);
                if d > d_lo && d <= d_hi && n.is_finite() {
                    best = best.max(*n);
                    count += 1;
                }
            }
            AnnulusMax {
                d_lo,
                d_hi,
                max: best,
                count,
            }
        })
        .collect()
}

/// `sup_{B_ρ(center)} |values|` over finite node values.
pub fn sup_in_ball(grid: &RectGrid, center: [f64; 2], norms: &[f64], rho: f64) -> f64 {
    norms
        .iter()
        .enumerate()
        .filter(|(idx, n)| {
            let p = grid.point(*idx);
            n.is_finite() && (p[0] - center[0]).hypot(p[1] - center[1]) <= rho
        })
        .fold(0.0, |m, (_, n)| m.max(*n))
}

/// `|u_a(x) − u_a(c) − L (x − c)|` at every node, `L` a `k × 2` slope.
pub fn affine_defect(average: &VectorField, center_node: usize, slope: &nalgebra::DMatrix<f64>) -> Result<Vec<f64>> {
    let g = average.grid;
    let k = average.k;
    if slope.nrows() != k || slope.ncols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2 * k,
            got: slope.len(),
        });
    }
    let c = g.point(center_node);
    let base = average.at(center_node);
    Ok((0..average.len())
        .map(|idx| {
            let p = g.point(idx);
            let d = [p[0] - c[0], p[1] - c[1]];
            let u = average.at(idx);
            (0..k)
                .map(|a| {
                    let e = u[a] - base[a] - slope[(a, 0)] * d[0] - slope[(a, 1)] * d[1];
                    e * e
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

/// Nodes with `|x − c| ≥ r_in` whose polar angle about `c` stays at least
/// `gap` away from `cut` (mod 2π).
pub fn slit_region(grid: &RectGrid, center: [f64; 2], r_in: f64, cut: f64, gap: f64) -> Vec<usize> {
    (0..grid.len())
        .filter(|&idx| {
            let p = grid.point(idx);
            let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
            if dx.hypot(dy) < r_in {
                return false;
            }
            let d = (dy.atan2(dx) - cut).rem_euclid(std::f64::consts::TAU);
            let d = d.min(std::f64::consts::TAU - d);
            d >= gap
        })
        .collect()
}

/// Two copies of `v` labeled on overlapping slit regions whose union covers
/// every node with `|x − c| ≥ r_in`.
pub fn labeled_patches(v: &SymmetricField, center: [f64; 2], r_in: f64) -> Result<[SymmetricField; 2]> {
    let g = *v.grid.as_rect()?;
    let mut out = Vec::with_capacity(2);
    for cut in [std::f64::consts::PI, 0.0] {
        let region = slit_region(&g, center, r_in, cut, 0.5);
        let seed = *region.first().ok_or(Error::Empty("labeled patch"))?;
        let labels = select_sheets(v, &region, seed, 1)?;
        let mut patch = v.clone();
        patch.sheet_labels = Some(labels);
        out.push(patch);
    }
    let b = out.pop().unwrap_or_else(|| unreachable!());
    let a = out.pop().unwrap_or_else(|| unreachable!());
    Ok([a, b])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualLevel {
    pub h: f64,
    /// Max residual of the difference system off the excluded disk.
    pub difference: f64,
    pub sum: f64,
    pub difference_direct: f64,
    pub sum_direct: f64,
    pub a_identity: f64,
    /// Max over bumps of the weak sum residual.
    pub weak: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStudy {
    pub levels: Vec<ResidualLevel>,
    pub exclude: f64,
}

/// Observed orders of a refinement sequence; `None` when every level is
/// already at round-off (`≤ floor`).
pub fn converged_orders(errors: &[f64], floor: f64) -> Option<Vec<f64>> {
    if errors.iter().all(|e| *e <= floor) {
        None
    } else {
        Some(observed_orders(errors))
    }
}

impl ResidualStudy {
    pub fn column(&self, which: fn(&ResidualLevel) -> f64) -> Vec<f64> {
        self.levels.iter().map(which).collect()
    }
}

/// Sample `u` on `[-w, w]²` with `m, 2m, 4m, ...` cells per half width and
/// measure split-system residuals at nodes with `|x − center| > exclude + h₀`,
/// `h₀` the coarsest spacing, so every level is measured on the same set.
/// Sheets are labeled on `|x − center| ≥ exclude`.
pub fn residual_study(
    u: &dyn TwoValuedFn,
    center: [f64; 2],
    half_width: f64,
    m0: usize,
    levels: usize,
    exclude: f64,
    bumps: &[Bump],
) -> Result<ResidualStudy> {
    let gl = GaussLegendre::new(16);
    let mut out = Vec::with_capacity(levels);
    let measure = exclude + RectGrid::centered(half_width, m0).h;
    for l in 0..levels {
        let g = RectGrid::centered(half_width, m0 << l);
        let field = sample_field(u, Grid::Rect(g))?;
        let (ua, v) = decompose(&field);
        let [pa, pb] = labeled_patches(&v, center, exclude)?;
        let ra = split_system_residual(&ua, &pa, &gl)?;
        let rb = split_system_residual(&ua, &pb, &gl)?;
        let k = u.k();
        let worst = |a: &[f64], b: &[f64], m: usize| {
            let merged = merge_residuals(&[a, b]);
            max_residual_outside(&g, &merged, m, center, measure)
        };
        let weak = weak_sum_residual(&field, bumps)?.into_iter().fold(0.0, f64::max);
        out.push(ResidualLevel {
            h: g.h,
            difference: worst(&ra.difference, &rb.difference, k),
            sum: worst(&ra.sum, &rb.sum, k),
            difference_direct: worst(&ra.difference_direct, &rb.difference_direct, k),
            sum_direct: worst(&ra.sum_direct, &rb.sum_direct, k),
            a_identity: worst(&ra.a_identity, &rb.a_identity, 2),
            weak,
        });
    }
    Ok(ResidualStudy { levels: out, exclude })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationLevel {
    pub h: f64,
    pub value: f64,
    pub coincidence_cells: usize,
}

/// `|first_variation|` of the sampled graph of `u` under refinement.
pub fn variation_study(
    u: &dyn TwoValuedFn,
    x: &BumpField,
    half_width: f64,
    m0: usize,
    levels: usize,
    tol_constant: f64,
) -> Result<Vec<VariationLevel>> {
    (0..levels)
        .map(|l| {
            let g = RectGrid::centered(half_width, m0 << l);
            let field = sample_field(u, Grid::Rect(g))?;
            let r = first_variation(&field, x, tol_constant * g.h.powf(1.5))?;
            Ok(VariationLevel {
                h: g.h,
                value: r.value,
                coincidence_cells: r.coincidence_cells,
            })
        })
        .collect()
}

/// Norms of `u_a`, `v` and their finite-difference derivatives at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitNorms {
    pub grid: RectGrid,
    pub average: VectorField,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub d2v: Vec<f64>,
    pub d2_average: Vec<f64>,
    pub field: TwoValuedField,
}

pub fn split_norms(u: &dyn TwoValuedFn, half_width: f64, m: usize) -> Result<SplitNorms> {
    let g = RectGrid::centered(half_width, m);
    split_norms_of(sample_field(u, Grid::Rect(g))?)
}

pub fn split_norms_of(field: TwoValuedField) -> Result<SplitNorms> {
    use crate::twoval::diff::{gradient_pairs, hessian, hessian_pairs};
    let g = *field.grid.as_rect()?;
    let (ua, v) = decompose(&field);
    let k = field.k;
    // |Dv| = ½|Du_1 − Du_2| and |D²v| = ½|D²u_1 − D²u_2| under nearest pairing
    let half_sep = |f: &TwoValuedField| -> Vec<f64> {
        (0..f.len())
            .map(|i| {
                let (a, b) = (f.first_at(i), f.second_at(i));
                0.5 * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
            })
            .collect()
    };
    let dv = half_sep(&gradient_pairs(&field)?);
    let d2v = half_sep(&hessian_pairs(&field)?);
    let ha = hessian(&ua)?;
    Ok(SplitNorms {
        grid: g,
        v: node_norms(&v.values, k),
        dv,
        d2v,
        d2_average: node_norms(&ha.values, 3 * k),
        average: ua,
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::loglog_slope;
    use crate::minimal::branched::BranchedExample;

    #[test]
    fn slit_regions_cover_the_annulus() {
        let g = RectGrid::centered(1.0, 16);
        let a = slit_region(&g, [0.0, 0.0], 0.2, std::f64::consts::PI, 0.5);
        let b = slit_region(&g, [0.0, 0.0], 0.2, 0.0, 0.5);
        for idx in 0..g.len() {
            let p = g.point(idx);
            if p[0].hypot(p[1]) >= 0.2 {
                assert!(a.contains(&idx) || b.contains(&idx));
            }
        }
        assert!(!a.iter().any(|&i| g.point(i)[0] < -0.5 && g.point(i)[1].abs() < 1e-12));
    }

    #[test]
    fn canonical_split_residuals_converge() {
        let b = BranchedExample::identity();
        let bumps = [Bump {
            center: [0.0, 0.0],
            radius: 0.6,
        }];
        let s = residual_study(&b, [0.0, 0.0], 1.0, 16, 3, 3.0 / 16.0, &bumps).unwrap();
        let diff = s.column(|l| l.difference);
        let orders = converged_orders(&diff, 1e-12).unwrap();
        assert!(orders.iter().all(|o| *o >= 1.7), "{diff:?} {orders:?}");
        // the sum system vanishes identically when u_a = 0
        assert!(converged_orders(&s.column(|l| l.sum), 1e-12).is_none());
        for l in &s.levels {
            assert!((l.difference - l.difference_direct).abs() < 1e-10 * (1.0 + l.difference));
        }
    }

    #[test]
    fn canonical_decay_rates() {
        let b = BranchedExample::identity();
        let n = split_norms(&b, 1.0, 128).unwrap();
        let ann = dyadic_annulus_maxima(&n.grid, [0.0, 0.0], &n.v, 1.0, 0..4);
        let d: Vec<f64> = ann.iter().map(|a| a.d_hi).collect();
        let m: Vec<f64> = ann.iter().map(|a| a.max).collect();
        let (slope, _) = loglog_slope(&d, &m);
        assert!((slope - 1.5).abs() < 0.02, "{slope}");
        for (norms, want, tol) in [(&n.dv, 0.5, 0.02), (&n.d2v, -0.5, 0.05)] {
            let ann = dyadic_annulus_maxima(&n.grid, [0.0, 0.0], norms, 1.0, 0..4);
            let m: Vec<f64> = ann.iter().map(|a| a.max).collect();
            let (slope, _) = loglog_slope(&d, &m);
            assert!((slope - want).abs() < tol, "{slope} {want}");
        }
    }

    #[test]
    fn rotated_split_residuals_converge() {
        let b = BranchedExample::rotated(0.1).unwrap();
        let bumps = [
            Bump {
                center: [0.0, 0.0],
                radius: 0.6,
            },
            Bump {
                center: [0.2, -0.1],
                radius: 0.5,
            },
        ];
        let c = b.branch_point();
        let s = residual_study(&b, c, 1.0, 32, 3, 0.25, &bumps).unwrap();
        for col in [s.column(|l| l.difference), s.column(|l| l.sum), s.column(|l| l.weak)] {
            let orders = converged_orders(&col, 1e-12).unwrap();
            assert!(orders.iter().all(|o| *o >= 1.7), "{col:?} {orders:?}");
        }
    }

    #[test]
    fn rotated_average_regularity() {
        let b = BranchedExample::rotated(0.1).unwrap();
        let m = 128;
        let n = split_norms(&b, 1.0, m).unwrap();
        let h = n.grid.h;
        let ann_a = dyadic_annulus_maxima(&n.grid, [0.0, 0.0], &n.d2_average, 1.0, 0..4);
        let ann_v = dyadic_annulus_maxima(&n.grid, [0.0, 0.0], &n.d2v, 1.0, 0..4);
        assert!(ann_a.last().unwrap().d_lo >= 8.0 * h - 1e-12);
        let (lo, hi) = ann_a
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x.max), b.max(x.max)));
        assert!(hi < 2.0 * lo, "{ann_a:?}");
        for w in ann_v.windows(2) {
            let growth = (w[1].max / w[0].max).log2();
            assert!((growth - 0.5).abs() <= 0.15, "{ann_v:?}");
        }
        let l = b.tangent_slope().unwrap();
        let slope = nalgebra::DMatrix::from_fn(2, 2, |i, j| l[(i, j)]);
        let origin = n.grid.nearest([0.0, 0.0]).unwrap();
        let defect = affine_defect(&n.average, origin, &slope).unwrap();
        let radii: Vec<f64> = (0..6).map(|j| 0.5 * 0.5f64.powi(j)).collect();
        let sups: Vec<f64> = radii
            .iter()
            .map(|r| sup_in_ball(&n.grid, [0.0, 0.0], &defect, *r))
            .collect();
        assert!(loglog_slope(&radii, &sups).0 >= 1.9, "{sups:?}");
    }
}
