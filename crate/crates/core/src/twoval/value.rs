use crate::error::{Error, Result};

/// An unordered pair of points in `R^k`.
///
/// Storage order is not meaningful: every consumer treats `{first, second}`
/// and `{second, first}` identically.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoValue {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl TwoValue {
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::DimensionMismatch {
                expected: first.len(),
                got: second.len(),
            });
        }
        Ok(Self { first, second })
    }

    /// The symmetric pair `{w, -w}`.
    pub fn symmetric(w: Vec<f64>) -> Self {
        let second = w.iter().map(|x| -x).collect();
        Self { first: w, second }
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn swapped(&self) -> Self {
        Self {
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }

    /// `|u| = |u_1| + |u_2|`.
    pub fn norm(&self) -> f64 {
        euclid(&self.first) + euclid(&self.second)
    }

    pub fn is_symmetric(&self) -> bool {
        self.first.iter().zip(&self.second).all(|(a, b)| *a == -*b)
    }

    /// `|u_1 - u_2|`, the separation of the two values.
    pub fn separation(&self) -> f64 {
        dist(&self.first, &self.second)
    }

    /// `½(u_1 + u_2)`.
    pub fn average(&self) -> Vec<f64> {
        self.first
            .iter()
            .zip(&self.second)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }
}

pub(crate) fn euclid(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Min-over-pairings distance between two unordered pairs given as slices.
/// Returns the distance and whether the crossed pairing was the minimizer.
pub(crate) fn pair_distance_slices(a1: &[f64], a2: &[f64], b1: &[f64], b2: &[f64]) -> (f64, bool) {
    let straight = dist(a1, b1) + dist(a2, b2);
    let crossed = dist(a1, b2) + dist(a2, b1);
    if crossed < straight {
        (crossed, true)
    } else {
        (straight, false)
    }
}

/// `min{|u1-v1| + |u2-v2|, |u1-v2| + |u2-v1|}`.
pub fn pair_distance(u: &TwoValue, v: &TwoValue) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    Ok(pair_distance_slices(&u.first, &u.second, &v.first, &v.second).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tv(a: &[f64], b: &[f64]) -> TwoValue {
        TwoValue::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn swap_gives_zero_distance() {
        let u = tv(&[1.0, 2.0], &[-3.0, 0.5]);
        assert_eq!(pair_distance(&u, &u.swapped()).unwrap(), 0.0);
        let u = tv(&[2.0], &[-1.0]);
        let v = tv(&[-1.0], &[2.0]);
        assert_eq!(pair_distance(&u, &v).unwrap(), 0.0);
    }

    #[test]
    fn scalar_example() {
        let u = tv(&[1.0], &[0.0]);
        let v = tv(&[0.0], &[0.0]);
        assert_eq!(pair_distance(&u, &v).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let u = tv(&[1.0], &[0.0]);
        let v = tv(&[0.0, 1.0], &[0.0, 1.0]);
        assert!(matches!(pair_distance(&u, &v), Err(Error::DimensionMismatch { .. })));
        assert!(TwoValue::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn norm_and_symmetry() {
        let u = TwoValue::symmetric(vec![3.0, 4.0]);
        assert!(u.is_symmetric());
        assert_eq!(u.norm(), 10.0);
        assert_eq!(u.separation(), 10.0);
    }

    fn pair(k: usize) -> impl Strategy<Value = TwoValue> {
        (
            prop::collection::vec(-5.0f64..5.0, k),
            prop::collection::vec(-5.0f64..5.0, k),
        )
            .prop_map(|(a, b)| TwoValue { first: a, second: b })
    }

    fn triple() -> impl Strategy<Value = (TwoValue, TwoValue, TwoValue)> {
        (1usize..=4).prop_flat_map(|k| (pair(k), pair(k), pair(k)))
    }

    proptest! {
        #[test]
        fn metric_axioms((u, v, w) in triple()) {
            let duv = pair_distance(&u, &v).unwrap();
            let dvu = pair_distance(&v, &u).unwrap();
            prop_assert!(duv >= 0.0);
            prop_assert!((duv - dvu).abs() <= 1e-12);
            prop_assert_eq!(pair_distance(&u, &u).unwrap(), 0.0);
            let duw = pair_distance(&u, &w).unwrap();
            let dwv = pair_distance(&w, &v).unwrap();
            prop_assert!(duv <= duw + dwv + 1e-12);
            // swap invariance
            prop_assert_eq!(pair_distance(&u.swapped(), &v).unwrap(), duv);
        }
    }
}
