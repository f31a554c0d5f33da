use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node-centered uniform rectangular grid. Node `(i, j)` sits at
/// `origin + (i h, j h)` and has flat index `j * nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectGrid {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl RectGrid {
    pub fn new(origin: [f64; 2], h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0) || nx == 0 || ny == 0 {
            return Err(Error::InvalidInput(format!(
                "grid needs h > 0 and at least one node per axis (h={h}, nx={nx}, ny={ny})"
            )));
        }
        Ok(Self { origin, h, nx, ny })
    }

    /// Square grid on `[-half_width, half_width]^2` with `2 m + 1` nodes per
    /// axis, so the origin is always a node.
    pub fn centered(half_width: f64, m: usize) -> Self {
        let h = half_width / m as f64;
        Self {
            origin: [-half_width, -half_width],
            h,
            nx: 2 * m + 1,
            ny: 2 * m + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    /// Nearest node to a point, if it lies within the grid extent.
    pub fn nearest(&self, x: [f64; 2]) -> Option<usize> {
        let fi = ((x[0] - self.origin[0]) / self.h).round();
        let fj = ((x[1] - self.origin[1]) / self.h).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some(self.index(fi as usize, fj as usize))
    }

    pub fn offset(&self, idx: usize, di: isize, dj: isize) -> Option<usize> {
        let (i, j) = self.ij(idx);
        let ni = i as isize + di;
        let nj = j as isize + dj;
        if ni < 0 || nj < 0 || ni >= self.nx as isize || nj >= self.ny as isize {
            None
        } else {
            Some(self.index(ni as usize, nj as usize))
        }
    }

    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .filter_map(move |(di, dj)| self.offset(idx, di, dj))
    }

    /// Whether two nodes are 8-adjacent (or equal).
    pub fn adjacent8(&self, a: usize, b: usize) -> bool {
        let (ai, aj) = self.ij(a);
        let (bi, bj) = self.ij(b);
        ai.abs_diff(bi) <= 1 && aj.abs_diff(bj) <= 1
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        i > 0 && j > 0 && i + 1 < self.nx && j + 1 < self.ny
    }

    /// Grid with spacing halved over the same extent.
    pub fn refined(&self) -> Self {
        Self {
            origin: self.origin,
            h: 0.5 * self.h,
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
        }
    }
}

/// Polar grid on the double cover: node `(ir, it)` sits at radius
/// `r_min + ir dr` and angle `it * 4π / ntheta`, with `θ ∈ [0, 4π)`.
/// Flat index is `ir * ntheta + it`; angular neighbours wrap around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub r_min: f64,
    pub dr: f64,
    pub nr: usize,
    pub ntheta: usize,
}

impl PolarGrid {
    pub fn new(r_min: f64, r_max: f64, nr: usize, ntheta: usize) -> Result<Self> {
        if !(r_min > 0.0) || !(r_max > r_min) || nr < 2 || ntheta < 4 || ntheta % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "polar grid needs 0 < r_min < r_max, nr >= 2 and an even ntheta >= 4 \
                 (r_min={r_min}, r_max={r_max}, nr={nr}, ntheta={ntheta})"
            )));
        }
        Ok(Self {
            r_min,
            dr: (r_max - r_min) / (nr - 1) as f64,
            nr,
            ntheta,
        })
    }

    pub fn len(&self) -> usize {
        self.nr * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtheta(&self) -> f64 {
        4.0 * PI / self.ntheta as f64
    }

    pub fn index(&self, ir: usize, it: usize) -> usize {
        ir * self.ntheta + (it % self.ntheta)
    }

    pub fn rt(&self, idx: usize) -> (usize, usize) {
        (idx / self.ntheta, idx % self.ntheta)
    }

    pub fn polar(&self, idx: usize) -> (f64, f64) {
        let (ir, it) = self.rt(idx);
        (self.r_min + ir as f64 * self.dr, it as f64 * self.dtheta())
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (r, t) = self.polar(idx);
        [r * t.cos(), r * t.sin()]
    }

    /// The node on the other sheet of the double cover (`θ + 2π`).
    pub fn partner(&self, idx: usize) -> usize {
        let (ir, it) = self.rt(idx);
        self.index(ir, it + self.ntheta / 2)
    }

    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (ir, it) = self.rt(idx);
        let nt = self.ntheta;
        let mut out = Vec::with_capacity(4);
        out.push(self.index(ir, it + 1));
        out.push(self.index(ir, it + nt - 1));
        if ir + 1 < self.nr {
            out.push(self.index(ir + 1, it));
        }
        if ir > 0 {
            out.push(self.index(ir - 1, it));
        }
        out.into_iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    Rect(RectGrid),
    Polar(PolarGrid),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Rect(g) => g.len(),
            Grid::Polar(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self {
            Grid::Rect(g) => g.point(idx),
            Grid::Polar(g) => g.point(idx),
        }
    }

    pub fn neighbors4(&self, idx: usize) -> Vec<usize> {
        match self {
            Grid::Rect(g) => g.neighbors4(idx).collect(),
            Grid::Polar(g) => g.neighbors4(idx).collect(),
        }
    }

    /// Characteristic spacing: `h` for rectangular grids, the smaller of the
    /// radial and innermost arc spacings for polar grids.
    pub fn spacing(&self) -> f64 {
        match self {
            Grid::Rect(g) => g.h,
            Grid::Polar(g) => g.dr.min(g.r_min * g.dtheta()),
        }
    }

    pub fn as_rect(&self) -> Result<&RectGrid> {
        match self {
            Grid::Rect(g) => Ok(g),
            Grid::Polar(_) => Err(Error::UnsupportedGrid),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_contains_origin() {
        let g = RectGrid::centered(1.0, 10);
        let o = g.nearest([0.0, 0.0]).unwrap();
        assert_eq!(g.point(o), [0.0, 0.0]);
        assert_eq!(g.neighbors4(o).count(), 4);
        assert_eq!(g.neighbors4(0).count(), 2);
    }

    #[test]
    fn refined_grid_shares_nodes() {
        let g = RectGrid::centered(1.0, 4);
        let f = g.refined();
        assert_eq!(f.h, g.h / 2.0);
        assert_eq!(f.point(f.len() - 1), g.point(g.len() - 1));
    }

    #[test]
    fn polar_partner_is_same_point() {
        let g = PolarGrid::new(0.5, 1.0, 3, 16).unwrap();
        for idx in 0..g.len() {
            let p = g.point(idx);
            let q = g.point(g.partner(idx));
            assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
            assert_eq!(g.partner(g.partner(idx)), idx);
        }
        assert!(PolarGrid::new(0.0, 1.0, 3, 16).is_err());
        assert!(PolarGrid::new(0.5, 1.0, 3, 15).is_err());
    }
}
