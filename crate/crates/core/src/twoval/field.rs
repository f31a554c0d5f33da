use crate::error::{Error, Result};

use super::grid::Grid;
use super::value::TwoValue;

/// A two-valued field sampled on a grid: an unordered pair of `R^k` values
/// per node, stored as two flat arrays of length `grid.len() * k`.
///
/// On polar grids `first` at node `(r, θ)` is the double-cover value at `θ`,
/// so the pairing is fixed by the parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoValuedField {
    pub grid: Grid,
    pub k: usize,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl TwoValuedField {
    pub fn new(grid: Grid, k: usize, first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        let want = grid.len() * k;
        for got in [first.len(), second.len()] {
            if got != want {
                return Err(Error::DimensionMismatch { expected: want, got });
            }
        }
        Ok(Self { grid, k, first, second })
    }

    pub fn from_fn<F: Fn([f64; 2]) -> TwoValue>(grid: Grid, k: usize, f: F) -> Result<Self> {
        let mut first = Vec::with_capacity(grid.len() * k);
        let mut second = Vec::with_capacity(grid.len() * k);
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            if v.dim() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: v.dim(),
                });
            }
            first.extend_from_slice(&v.first);
            second.extend_from_slice(&v.second);
        }
        Ok(Self { grid, k, first, second })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn first_at(&self, idx: usize) -> &[f64] {
        &self.first[idx * self.k..(idx + 1) * self.k]
    }

    pub fn second_at(&self, idx: usize) -> &[f64] {
        &self.second[idx * self.k..(idx + 1) * self.k]
    }

    pub fn value(&self, idx: usize) -> TwoValue {
        TwoValue {
            first: self.first_at(idx).to_vec(),
            second: self.second_at(idx).to_vec(),
        }
    }

    /// Swap the storage order at every node where `mask` is set.
    pub fn swap_where(&self, mask: &[bool]) -> Self {
        let mut out = self.clone();
        for (idx, &m) in mask.iter().enumerate().take(self.len()) {
            if m {
                let r = idx * self.k..(idx + 1) * self.k;
                for j in r {
                    std::mem::swap(&mut out.first[j], &mut out.second[j]);
                }
            }
        }
        out
    }
}

/// A single-valued `R^k` field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub k: usize,
    pub values: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: Grid, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * k {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * k,
                got: values.len(),
            });
        }
        Ok(Self { grid, k, values })
    }

    pub fn from_fn<F: Fn([f64; 2]) -> Vec<f64>>(grid: Grid, k: usize, f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len() * k);
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            if v.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: v.len(),
                });
            }
            values.extend_from_slice(&v);
        }
        Ok(Self { grid, k, values })
    }

    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.k..(idx + 1) * self.k]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Sheet choice on a recorded region: `signs[idx]` is `+1` when the selected
/// sheet at `idx` is the stored representative `w`, `-1` when it is `-w`,
/// and `0` outside the region.
#[derive(Debug, Clone, PartialEq)]
pub struct SheetLabels {
    pub region: Vec<usize>,
    pub signs: Vec<i8>,
}

impl SheetLabels {
    pub fn sign(&self, idx: usize) -> Option<f64> {
        match self.signs.get(idx) {
            Some(1) => Some(1.0),
            Some(-1) => Some(-1.0),
            _ => None,
        }
    }
}

/// A symmetric two-valued field `{w, -w}`. Only the representative `w` is
/// stored, so `second = -first` holds exactly at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricField {
    pub grid: Grid,
    pub k: usize,
    pub values: Vec<f64>,
    pub sheet_labels: Option<SheetLabels>,
}

impl SymmetricField {
    pub fn new(grid: Grid, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() * k {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * k,
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            k,
            values,
            sheet_labels: None,
        })
    }

    pub fn from_fn<F: Fn([f64; 2]) -> Vec<f64>>(grid: Grid, k: usize, f: F) -> Result<Self> {
        let v = VectorField::from_fn(grid, k, f)?;
        Self::new(grid, k, v.values)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.k..(idx + 1) * self.k]
    }

    pub fn value(&self, idx: usize) -> TwoValue {
        TwoValue::symmetric(self.at(idx).to_vec())
    }

    /// `|v_1 - v_2| = 2|w|`.
    pub fn separation(&self, idx: usize) -> f64 {
        2.0 * self.at(idx).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// The labeled sheet value at `idx`, if labels cover it.
    pub fn selected(&self, idx: usize) -> Option<Vec<f64>> {
        let s = self.sheet_labels.as_ref()?.sign(idx)?;
        Some(self.at(idx).iter().map(|x| s * x).collect())
    }

    pub fn to_two_valued(&self) -> TwoValuedField {
        TwoValuedField {
            grid: self.grid,
            k: self.k,
            first: self.values.clone(),
            second: self.values.iter().map(|x| -x).collect(),
        }
    }
}

/// Split `u` into its average `u_a = (u_1 + u_2)/2` and the symmetric part
/// `v = {±(u_1 - u_2)/2}`. Both are independent of storage order: swapping
/// the pair flips the representative of `v`, which is the same unordered
/// pair.
pub fn decompose(u: &TwoValuedField) -> (VectorField, SymmetricField) {
    let avg = u.first.iter().zip(&u.second).map(|(a, b)| 0.5 * (a + b)).collect();
    let half_diff = u.first.iter().zip(&u.second).map(|(a, b)| 0.5 * (a - b)).collect();
    (
        VectorField {
            grid: u.grid,
            k: u.k,
            values: avg,
        },
        SymmetricField {
            grid: u.grid,
            k: u.k,
            values: half_diff,
            sheet_labels: None,
        },
    )
}

/// `u = {u_a + w, u_a - w}`.
pub fn recompose(avg: &VectorField, v: &SymmetricField) -> Result<TwoValuedField> {
    if avg.grid != v.grid || avg.k != v.k {
        return Err(Error::InvalidInput(
            "average and symmetric part live on different grids".into(),
        ));
    }
    let first = avg.values.iter().zip(&v.values).map(|(a, w)| a + w).collect();
    let second = avg.values.iter().zip(&v.values).map(|(a, w)| a - w).collect();
    TwoValuedField::new(avg.grid, avg.k, first, second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twoval::grid::RectGrid;
    use crate::twoval::value::pair_distance;

    fn grid() -> Grid {
        Grid::Rect(RectGrid::centered(1.0, 4))
    }

    #[test]
    fn constant_pair_has_zero_symmetric_part() {
        let u =
            TwoValuedField::from_fn(grid(), 2, |_| TwoValue::new(vec![1.0, -2.0], vec![1.0, -2.0]).unwrap()).unwrap();
        let (a, v) = decompose(&u);
        assert!(a.values.chunks(2).all(|c| c == [1.0, -2.0]));
        assert!(v.values.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn symmetric_pair_has_zero_average() {
        let u = TwoValuedField::from_fn(grid(), 1, |x| TwoValue::symmetric(vec![x[0] + 2.0 * x[1]])).unwrap();
        let (a, v) = decompose(&u);
        assert!(a.values.iter().all(|x| *x == 0.0));
        for idx in 0..u.len() {
            assert_eq!(v.at(idx), u.first_at(idx));
        }
    }

    #[test]
    fn decompose_ignores_storage_order() {
        let u = TwoValuedField::from_fn(grid(), 1, |x| {
            TwoValue::new(vec![x[0].exp()], vec![x[1] - 0.3]).unwrap()
        })
        .unwrap();
        let mask: Vec<bool> = (0..u.len()).map(|i| i % 3 == 0).collect();
        let (a1, v1) = decompose(&u);
        let (a2, v2) = decompose(&u.swap_where(&mask));
        assert_eq!(a1, a2);
        for idx in 0..u.len() {
            assert_eq!(pair_distance(&v1.value(idx), &v2.value(idx)).unwrap(), 0.0);
        }
        let back = recompose(&a1, &v1).unwrap();
        for idx in 0..u.len() {
            assert!(pair_distance(&back.value(idx), &u.value(idx)).unwrap() <= 1e-15);
        }
    }

    #[test]
    fn labels_select_sheet() {
        let mut v = SymmetricField::from_fn(grid(), 1, |_| vec![2.0]).unwrap();
        let mut signs = vec![0i8; v.len()];
        signs[0] = -1;
        v.sheet_labels = Some(SheetLabels { region: vec![0], signs });
        assert_eq!(v.selected(0), Some(vec![-2.0]));
        assert_eq!(v.selected(1), None);
        assert_eq!(v.separation(3), 4.0);
    }
}
