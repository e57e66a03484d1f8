use std::sync::Arc;

use crate::error::{Error, Result};
use crate::funcspace::grid::{same_grid, Grid};

/// One function's values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Curve> {
        if values.len() != grid.len() {
            return Err(Error::InvalidCurve(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite value".into()));
        }
        Ok(Curve { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Curve {
        let values = vec![0.0; grid.len()];
        Curve { grid, values }
    }

    /// Evaluates `f` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Curve> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Curve::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn inner_product(&self, other: &Curve) -> Result<f64> {
        inner_product(self, other)
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Curve {
        Curve {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Curve) -> Result<Curve> {
        check_grids(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Curve { grid: self.grid.clone(), values })
    }

    pub fn sub(&self, other: &Curve) -> Result<Curve> {
        self.add_scaled(-1.0, other)
    }

    pub fn add(&self, other: &Curve) -> Result<Curve> {
        self.add_scaled(1.0, other)
    }
}

/// `sum_i w_i a(t_i) b(t_i)`.
pub fn inner_product(a: &Curve, b: &Curve) -> Result<f64> {
    check_grids(&a.grid, &b.grid)?;
    Ok(a.grid.dot(&a.values, &b.values))
}

pub fn norm(a: &Curve) -> f64 {
    a.grid.norm(&a.values)
}

pub(crate) fn check_grids(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if same_grid(a, b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `n >= 1` curves sharing one grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    grid: Arc<Grid>,
    n: usize,
    data: Vec<f64>,
}

impl FunctionalSample {
    /// Takes ownership of a row-major `n x D` buffer.
    pub fn from_flat(grid: Arc<Grid>, n: usize, data: Vec<f64>) -> Result<FunctionalSample> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if data.len() != n * grid.len() {
            return Err(Error::InvalidCurve(format!(
                "buffer of {} values is not {n} x {}",
                data.len(),
                grid.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite value".into()));
        }
        Ok(FunctionalSample { grid, n, data })
    }

    pub fn from_rows(grid: Arc<Grid>, rows: &[Vec<f64>]) -> Result<FunctionalSample> {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != grid.len()) {
            return Err(Error::InvalidCurve(format!(
                "row {i} has {} values, grid has {}",
                r.len(),
                grid.len()
            )));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_flat(grid, rows.len(), data)
    }

    pub fn from_curves(curves: &[Curve]) -> Result<FunctionalSample> {
        let first = curves.first().ok_or(Error::EmptySample)?;
        let grid = first.grid.clone();
        let mut data = Vec::with_capacity(curves.len() * grid.len());
        for c in curves {
            check_grids(&grid, &c.grid)?;
            data.extend_from_slice(&c.values);
        }
        Ok(FunctionalSample { grid, n: curves.len(), data })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points.
    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim())
    }

    pub fn curve(&self, i: usize) -> Curve {
        Curve { grid: self.grid.clone(), values: self.row(i).to_vec() }
    }

    pub fn curves(&self) -> Vec<Curve> {
        (0..self.n).map(|i| self.curve(i)).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn mean_curve(&self) -> Curve {
        let d = self.dim();
        let mut mean = vec![0.0; d];
        for row in self.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        Curve { grid: self.grid.clone(), values: mean }
    }

    /// Subtracts `center` from every curve.
    pub fn shifted(&self, center: &Curve) -> Result<FunctionalSample> {
        self.affine(1.0, &center.scaled(-1.0))
    }

    /// `c * X_i + a` for every curve.
    pub fn affine(&self, c: f64, a: &Curve) -> Result<FunctionalSample> {
        check_grids(&self.grid, &a.grid)?;
        let d = self.dim();
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(idx, v)| c * v + a.values[idx % d])
            .collect();
        Ok(FunctionalSample { grid: self.grid.clone(), n: self.n, data })
    }

    /// Union of two samples on the same grid, `self` first.
    pub fn concat(&self, other: &FunctionalSample) -> Result<FunctionalSample> {
        check_grids(&self.grid, &other.grid)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(FunctionalSample { grid: self.grid.clone(), n: self.n + other.n, data })
    }

    /// Keeps the curves at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<FunctionalSample> {
        let mut data = Vec::with_capacity(indices.len() * self.dim());
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidArgument(format!("index {i} out of range")));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::from_flat(self.grid.clone(), indices.len(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_one_has_unit_norm_on_unit_interval() {
        let g = Grid::uniform(0.0, 1.0, 11).unwrap();
        let one = Curve::from_fn(g.clone(), |_| 1.0).unwrap();
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-14);
        let c = Curve::from_fn(g, |_| -2.5).unwrap();
        assert!((c.norm() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn zero_curve_has_zero_norm() {
        let g = Grid::uniform(0.0, 1.0, 5).unwrap();
        assert_eq!(Curve::zeros(g).norm(), 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Curve::zeros(Grid::uniform(0.0, 1.0, 5).unwrap());
        let b = Curve::zeros(Grid::uniform(0.0, 2.0, 5).unwrap());
        assert_eq!(inner_product(&a, &b), Err(Error::GridMismatch));
    }

    #[test]
    fn equal_grids_behind_different_handles_match() {
        let a = Curve::zeros(Grid::uniform(0.0, 1.0, 5).unwrap());
        let b = Curve::zeros(Grid::uniform(0.0, 1.0, 5).unwrap());
        assert!(inner_product(&a, &b).is_ok());
    }

    #[test]
    fn curve_validation() {
        let g = Grid::uniform(0.0, 1.0, 3).unwrap();
        assert!(Curve::new(g.clone(), vec![1.0, 2.0]).is_err());
        assert!(Curve::new(g, vec![1.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn sample_mean_and_shift() {
        let g = Grid::uniform(0.0, 1.0, 3).unwrap();
        let s = FunctionalSample::from_rows(g, &[vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]).unwrap();
        let m = s.mean_curve();
        assert_eq!(m.values(), &[2.0, 2.0, 2.0]);
        let c = s.shifted(&m).unwrap();
        assert_eq!(c.row(0), &[-1.0, 0.0, 1.0]);
        assert!(FunctionalSample::from_rows(s.grid().clone(), &[]).is_err());
    }
}
