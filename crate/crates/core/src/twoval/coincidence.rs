use crate::error::{Error, Result};

use super::diff::gradient_pairs;
use super::field::TwoValuedField;
use super::grid::Grid;
use super::value::dist;
use crate::fit::linear_fit;

/// Grid nodes where both values and both finite-difference gradients agree
/// to within the stored thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceSet {
    pub nodes: Vec<usize>,
    pub points: Vec<[f64; 2]>,
    pub tol_value: f64,
    pub tol_grad: f64,
}

impl CoincidenceSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Default thresholds `(C h^{3/2}, C h^{1/2})`, scaled to the decay rates of
/// the difference and its gradient near a branch point.
pub fn default_tolerances(h: f64, c: f64) -> (f64, f64) {
    (c * h.powf(1.5), c * h.sqrt())
}

pub fn detect_coincidence(u: &TwoValuedField, tol_value: f64, tol_grad: f64) -> Result<CoincidenceSet> {
    if let Grid::Rect(g) = &u.grid {
        if g.nx < 3 || g.ny < 3 {
            return Err(Error::InvalidInput(
                "coincidence detection needs at least three nodes per axis".into(),
            ));
        }
    }
    let du = gradient_pairs(u)?;
    let mut nodes = Vec::new();
    let mut points = Vec::new();
    for idx in 0..u.len() {
        // Gradient separation uses the Frobenius norm of Du_1 - Du_2.
        if dist(u.first_at(idx), u.second_at(idx)) < tol_value && dist(du.first_at(idx), du.second_at(idx)) < tol_grad {
            nodes.push(idx);
            points.push(u.grid.point(idx));
        }
    }
    Ok(CoincidenceSet {
        nodes,
        points,
        tol_value,
        tol_grad,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    pub dimension: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Box-counting dimension: slope of `log(count)` against `log(1/size)`,
/// with boxes anchored at the lower-left corner of the point set.
pub fn box_counting_dimension(points: &[[f64; 2]], scales: &[f64]) -> Result<DimensionEstimate> {
    if points.is_empty() {
        return Err(Error::Empty("point set for box counting"));
    }
    if scales.len() < 3 || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidInput(
            "box counting needs at least three positive scales".into(),
        ));
    }
    let lo = scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scales.iter().cloned().fold(0.0, f64::max);
    if hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(
            "box counting scales must span at least one decade".into(),
        ));
    }
    let x0 = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let y0 = points.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let mut counts = Vec::with_capacity(scales.len());
    for &s in scales {
        let mut boxes: Vec<(i64, i64)> = points
            .iter()
            .map(|p| (((p[0] - x0) / s).floor() as i64, ((p[1] - y0) / s).floor() as i64))
            .collect();
        boxes.sort_unstable();
        boxes.dedup();
        counts.push(boxes.len());
    }
    let single = points.iter().all(|p| *p == points[0]);
    if single {
        return Ok(DimensionEstimate {
            dimension: 0.0,
            residual: 0.0,
            scales: scales.to_vec(),
            counts,
        });
    }
    let lx: Vec<f64> = scales.iter().map(|s| -s.ln()).collect();
    let ly: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (slope, _, residual) = linear_fit(&lx, &ly);
    Ok(DimensionEstimate {
        dimension: slope,
        residual,
        scales: scales.to_vec(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoval::grid::RectGrid;
    use crate::twoval::value::TwoValue;

    #[test]
    fn identical_sheets_coincide_everywhere() {
        let g = Grid::Rect(RectGrid::centered(1.0, 6));
        let u = TwoValuedField::from_fn(g, 1, |x| TwoValue::new(vec![x[0]], vec![x[0]]).unwrap()).unwrap();
        assert_eq!(detect_coincidence(&u, 1e-3, 1e-3).unwrap().len(), g.len());
        let w = TwoValuedField::from_fn(g, 1, |_| TwoValue::symmetric(vec![1.0])).unwrap();
        assert!(detect_coincidence(&w, 1e-3, 1e-3).unwrap().is_empty());
    }

    #[test]
    fn single_point_has_dimension_zero() {
        let d = box_counting_dimension(&[[0.0, 0.0]], &[0.01, 0.1, 1.0]).unwrap();
        assert_eq!(d.dimension, 0.0);
        assert!(box_counting_dimension(&[], &[0.01, 0.1, 1.0]).is_err());
        assert!(box_counting_dimension(&[[0.0, 0.0]], &[0.1, 0.2, 0.3]).is_err());
    }

    #[test]
    fn segment_has_dimension_one() {
        let pts: Vec<[f64; 2]> = (0..=1000).map(|i| [i as f64 / 1000.0, 0.3]).collect();
        let d = box_counting_dimension(&pts, &[0.01, 0.02, 0.05, 0.1, 0.2]).unwrap();
        assert!((d.dimension - 1.0).abs() < 0.1, "{d:?}");
    }
}
