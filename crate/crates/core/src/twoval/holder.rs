use crate::error::{Error, Result};

use super::value::pair_distance_slices;

/// Sampled Hölder seminorm
/// `sup pair_distance(f(x_1), f(x_2)) / |x_1 - x_2|^α` over all node pairs.
///
/// `first` and `second` hold the two values at each point, `k` entries per
/// point; pass a single-valued field as `first == second`.
pub fn holder_seminorm(points: &[[f64; 2]], first: &[f64], second: &[f64], k: usize, alpha: f64) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Empty("Hölder seminorm needs at least two nodes"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("Hölder exponent {alpha} outside (0, 1]")));
    }
    if first.len() != points.len() * k || second.len() != first.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len() * k,
            got: first.len().min(second.len()),
        });
    }
    let at = |v: &'_ [f64], i: usize| -> Vec<f64> { v[i * k..(i + 1) * k].to_vec() };
    let mut best: f64 = 0.0;
    for i in 0..points.len() {
        let (a1, a2) = (at(first, i), at(second, i));
        for j in i + 1..points.len() {
            let d = (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
            if d == 0.0 {
                continue;
            }
            let (pd, _) = pair_distance_slices(&a1, &a2, &first[j * k..(j + 1) * k], &second[j * k..(j + 1) * k]);
            best = best.max(pd / d.powf(alpha));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gradient_has_zero_seminorm() {
        let pts: Vec<[f64; 2]> = (0..20).map(|i| [i as f64 * 0.1, (i * i) as f64 * 0.01]).collect();
        let first: Vec<f64> = pts.iter().flat_map(|_| [0.5, -1.0]).collect();
        let second: Vec<f64> = first.iter().map(|x| -x).collect();
        for alpha in [0.3, 1.0] {
            assert_eq!(holder_seminorm(&pts, &first, &second, 2, alpha).unwrap(), 0.0);
        }
        assert!(holder_seminorm(&pts[..1], &first[..2], &second[..2], 2, 0.5).is_err());
    }
}
