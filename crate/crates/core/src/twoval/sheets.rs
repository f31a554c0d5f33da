//! Sheet selection by continuation and monodromy of symmetric fields.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::field::{SheetLabels, SymmetricField};
use super::grid::{Grid, RectGrid};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest single-step change of the nearest sheet over the 4-neighbours of
/// `idx`, i.e. the local Lipschitz estimate times the spacing.
fn local_step(field: &SymmetricField, idx: usize) -> f64 {
    let w = field.at(idx);
    let mut step: f64 = 0.0;
    for nb in field.grid.neighbors4(idx) {
        let u = field.at(nb);
        let minus: f64 = w.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum();
        let plus: f64 = w.iter().zip(u).map(|(a, b)| (a + b) * (a + b)).sum();
        step = step.max(minus.min(plus).sqrt());
    }
    step
}

/// Separation threshold for continuation at a node: three local steps.
pub fn continuation_threshold(field: &SymmetricField, idx: usize) -> f64 {
    3.0 * local_step(field, idx)
}

/// Whether the two values at `idx` are too close to continue through it.
pub fn is_ambiguous(field: &SymmetricField, idx: usize) -> bool {
    field.separation(idx) <= continuation_threshold(field, idx)
}

/// Sign relating the nearest continuation of `w_i` at node `j` to `w_j`.
fn step_sign(field: &SymmetricField, i: usize, j: usize) -> Option<i8> {
    let d = dot(field.at(i), field.at(j));
    if d > 0.0 {
        Some(1)
    } else if d < 0.0 {
        Some(-1)
    } else {
        None
    }
}

/// Label one sheet over `region` by breadth-first continuation from `seed`,
/// where `seed_sign = +1` picks the stored representative at the seed.
///
/// Every edge of the region is checked afterwards, so a region on which the
/// field has nontrivial monodromy fails on its closing edge.
pub fn select_sheets(field: &SymmetricField, region: &[usize], seed: usize, seed_sign: i8) -> Result<SheetLabels> {
    if region.is_empty() {
        return Err(Error::Empty("sheet selection region"));
    }
    if seed_sign != 1 && seed_sign != -1 {
        return Err(Error::InvalidInput("seed sign must be +1 or -1".into()));
    }
    let n = field.len();
    let mut inside = vec![false; n];
    for &idx in region {
        if idx >= n {
            return Err(Error::InvalidInput(format!("region node {idx} outside grid")));
        }
        inside[idx] = true;
    }
    if !inside[seed] {
        return Err(Error::InvalidInput("seed is not in the region".into()));
    }
    let blocked: Vec<bool> = (0..n).map(|i| inside[i] && is_ambiguous(field, i)).collect();
    if blocked[seed] {
        return Err(Error::AmbiguousContinuation { node: seed });
    }

    let mut signs = vec![0i8; n];
    signs[seed] = seed_sign;
    let mut queue = VecDeque::from([seed]);
    while let Some(i) = queue.pop_front() {
        for j in field.grid.neighbors4(i) {
            if !inside[j] || blocked[j] || signs[j] != 0 {
                continue;
            }
            match step_sign(field, i, j) {
                Some(s) => {
                    signs[j] = signs[i] * s;
                    queue.push_back(j);
                }
                None => return Err(Error::AmbiguousContinuation { node: j }),
            }
        }
    }

    if let Some(&missing) = region.iter().find(|&&i| signs[i] == 0) {
        let node = if blocked[missing] {
            missing
        } else {
            match region.iter().find(|&&i| blocked[i]) {
                Some(&b) => b,
                None => {
                    return Err(Error::InvalidInput(format!(
                        "region is not connected (node {missing} unreachable)"
                    )))
                }
            }
        };
        return Err(Error::AmbiguousContinuation { node });
    }

    for &i in region {
        for j in field.grid.neighbors4(i) {
            if j <= i || !inside[j] {
                continue;
            }
            let consistent = dot(field.at(i), field.at(j)) * (signs[i] * signs[j]) as f64 > 0.0;
            if !consistent {
                return Err(Error::InconsistentLabeling { node: i, neighbor: j });
            }
        }
    }

    Ok(SheetLabels {
        region: region.to_vec(),
        signs,
    })
}

/// Continue one value around the closed node path `path` (the last node
/// connects back to the first) and report whether it returns as the other
/// value.
pub fn monodromy(field: &SymmetricField, path: &[usize]) -> Result<bool> {
    if path.len() < 3 {
        return Err(Error::InvalidInput("a loop needs at least three nodes".into()));
    }
    for &idx in path {
        if idx >= field.len() {
            return Err(Error::InvalidInput(format!("loop node {idx} outside grid")));
        }
        if is_ambiguous(field, idx) {
            return Err(Error::LoopTouchesCoincidence { node: idx });
        }
    }
    let mut sign = 1i8;
    for (a, &i) in path.iter().enumerate() {
        let j = path[(a + 1) % path.len()];
        if let Grid::Rect(g) = &field.grid {
            if !g.adjacent8(i, j) {
                return Err(Error::InvalidInput(format!("loop nodes {i} and {j} are not adjacent")));
            }
        }
        match step_sign(field, i, j) {
            Some(s) => sign *= s,
            None => return Err(Error::LoopTouchesCoincidence { node: j }),
        }
    }
    Ok(sign < 0)
}

/// Closed node path tracing the circle of given centre and radius.
pub fn circle_loop(grid: &RectGrid, center: [f64; 2], radius: f64) -> Result<Vec<usize>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("loop radius must be positive".into()));
    }
    let samples = (16.0 * PI * radius / grid.h).ceil().max(16.0) as usize;
    let mut path: Vec<usize> = Vec::with_capacity(samples);
    for s in 0..samples {
        let t = 2.0 * PI * s as f64 / samples as f64;
        let x = [center[0] + radius * t.cos(), center[1] + radius * t.sin()];
        let idx = grid
            .nearest(x)
            .ok_or_else(|| Error::InvalidInput("loop leaves the grid".into()))?;
        if path.last() != Some(&idx) {
            path.push(idx);
        }
    }
    while path.len() > 1 && path.first() == path.last() {
        path.pop();
    }
    Ok(path)
}

/// All nodes with `r_in <= |x - center| <= r_out`, optionally restricted to
/// polar angles in `[angle_lo, angle_hi]` (radians in `(-π, π]`).
pub fn annulus_region(
    grid: &RectGrid,
    center: [f64; 2],
    r_in: f64,
    r_out: f64,
    angles: Option<(f64, f64)>,
) -> Vec<usize> {
    (0..grid.len())
        .filter(|&idx| {
            let p = grid.point(idx);
            let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
            let r = dx.hypot(dy);
            let in_ring = r >= r_in && r <= r_out;
            let in_sector = angles.is_none_or(|(lo, hi)| {
                let t = dy.atan2(dx);
                t >= lo && t <= hi
            });
            in_ring && in_sector
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z32(x: [f64; 2]) -> Vec<f64> {
        let r = x[0].hypot(x[1]);
        let t = x[1].atan2(x[0]);
        let m = r.powf(1.5);
        vec![m * (1.5 * t).cos(), m * (1.5 * t).sin()]
    }

    fn branch_field() -> (RectGrid, SymmetricField) {
        let g = RectGrid::centered(1.0, 40);
        (g, SymmetricField::from_fn(Grid::Rect(g), 2, z32).unwrap())
    }

    #[test]
    fn constant_field_labels_trivially() {
        let g = RectGrid::centered(1.0, 5);
        let f = SymmetricField::from_fn(Grid::Rect(g), 1, |_| vec![1.0]).unwrap();
        let region: Vec<usize> = (0..g.len()).collect();
        let labels = select_sheets(&f, &region, 0, 1).unwrap();
        assert!(region.iter().all(|&i| labels.signs[i] == 1));
        let lp = circle_loop(&g, [0.0, 0.0], 0.5).unwrap();
        assert!(!monodromy(&f, &lp).unwrap());
    }

    #[test]
    fn sector_labels_match_principal_branch() {
        let (g, f) = branch_field();
        let region = annulus_region(&g, [0.0, 0.0], 0.3, 0.9, Some((-2.5, 2.5)));
        let seed = g.nearest([0.5, 0.0]).unwrap();
        let labels = select_sheets(&f, &region, seed, 1).unwrap();
        // The stored representative is the principal branch, continuous on
        // the sector, so every label is +1.
        assert!(region.iter().all(|&i| labels.signs[i] == 1));
    }

    #[test]
    fn full_annulus_fails_on_closing_edge() {
        let (g, f) = branch_field();
        let region = annulus_region(&g, [0.0, 0.0], 0.3, 0.9, None);
        let seed = g.nearest([0.5, 0.0]).unwrap();
        let err = select_sheets(&f, &region, seed, 1).unwrap_err();
        assert!(matches!(err, Error::InconsistentLabeling { .. }));
    }

    #[test]
    fn monodromy_detects_branch_point() {
        let (g, f) = branch_field();
        let around = circle_loop(&g, [0.0, 0.0], 0.5).unwrap();
        assert!(monodromy(&f, &around).unwrap());
        let mut reversed = around.clone();
        reversed.reverse();
        reversed.rotate_left(7);
        assert!(monodromy(&f, &reversed).unwrap());
        let off = circle_loop(&g, [0.5, 0.3], 0.2).unwrap();
        assert!(!monodromy(&f, &off).unwrap());
        let through = circle_loop(&g, [0.05, 0.0], 0.05).unwrap();
        assert!(matches!(
            monodromy(&f, &through),
            Err(Error::LoopTouchesCoincidence { .. })
        ));
    }
}
