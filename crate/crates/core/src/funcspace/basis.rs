use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::funcspace::curve::{check_grids, Curve, FunctionalSample};
use crate::funcspace::grid::Grid;
use crate::linalg::sym_eigen_desc;

/// Tolerance on `|<phi_j, phi_k> - delta_jk|` accepted by [`Basis::new`].
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// Ordered orthonormal family of curves, optionally carrying eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    grid: Arc<Grid>,
    functions: Vec<Vec<f64>>,
    eigenvalues: Option<Vec<f64>>,
    total_variance: Option<f64>,
}

impl Basis {
    /// Validates orthonormality under the grid inner product and eigenvalue order.
    pub fn new(
        grid: Arc<Grid>,
        functions: Vec<Vec<f64>>,
        eigenvalues: Option<Vec<f64>>,
    ) -> Result<Basis> {
        if functions.is_empty() {
            return Err(Error::InvalidArgument("basis needs at least one function".into()));
        }
        if let Some(f) = functions.iter().find(|f| f.len() != grid.len()) {
            return Err(Error::InvalidCurve(format!(
                "basis function has {} values, grid has {}",
                f.len(),
                grid.len()
            )));
        }
        if let Some(ev) = &eigenvalues {
            if ev.len() != functions.len() {
                return Err(Error::InvalidArgument("one eigenvalue per function required".into()));
            }
            if ev.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidArgument("eigenvalues must be nonnegative".into()));
            }
            if ev.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::InvalidArgument("eigenvalues must be nonincreasing".into()));
            }
        }
        let deviation = gram_deviation(&grid, &functions);
        if !(deviation <= ORTHONORMALITY_TOL) {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Basis { grid, functions, eigenvalues, total_variance: None })
    }

    /// Gram-Schmidt (two passes) in the given order, so `span{f_1..f_k}` is kept for every `k`.
    pub fn orthonormalize(grid: Arc<Grid>, functions: Vec<Vec<f64>>) -> Result<Basis> {
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(functions.len());
        for (k, f) in functions.into_iter().enumerate() {
            match orthogonalize_against(&grid, f, &out) {
                Some(v) => out.push(v),
                None => {
                    return Err(Error::RankDeficient(format!(
                        "function {k} is linearly dependent on its predecessors"
                    )))
                }
            }
        }
        Basis::new(grid, out, None)
    }

    pub(crate) fn with_total_variance(mut self, total: f64) -> Basis {
        self.total_variance = Some(total);
        self
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.functions.len()
    }

    pub fn function(&self, k: usize) -> Curve {
        Curve::new(self.grid.clone(), self.functions[k].clone()).expect("validated basis function")
    }

    pub fn function_values(&self, k: usize) -> &[f64] {
        &self.functions[k]
    }

    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    /// Total variance of the sample a PCA basis was fitted to.
    pub fn total_variance(&self) -> Option<f64> {
        self.total_variance
    }

    /// Eigenvalue shares of the total variance, when both are known.
    pub fn explained_variance_fractions(&self) -> Option<Vec<f64>> {
        let ev = self.eigenvalues.as_ref()?;
        let total = self.total_variance.unwrap_or_else(|| ev.iter().sum());
        if total <= 0.0 {
            return None;
        }
        Some(ev.iter().map(|v| v / total).collect())
    }

    /// First `d` functions as a new basis.
    pub fn truncated(&self, d: usize) -> Result<Basis> {
        check_dim(d, self.size())?;
        Ok(Basis {
            grid: self.grid.clone(),
            functions: self.functions[..d].to_vec(),
            eigenvalues: self.eigenvalues.as_ref().map(|e| e[..d].to_vec()),
            total_variance: self.total_variance,
        })
    }

    /// `<x, phi_k>` for `k < d`, on raw grid values.
    pub fn project_values(&self, x: &[f64], d: usize) -> Result<Vec<f64>> {
        check_dim(d, self.size())?;
        if x.len() != self.grid.len() {
            return Err(Error::InvalidCurve("length does not match basis grid".into()));
        }
        Ok(self.functions[..d].iter().map(|f| self.grid.dot(x, f)).collect())
    }

    /// `sum_k c_k phi_k` on raw grid values.
    pub fn reconstruct_values(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (c, f) in coefficients.iter().zip(&self.functions) {
            if *c != 0.0 {
                out.iter_mut().zip(f).for_each(|(o, v)| *o += c * v);
            }
        }
        out
    }
}

fn check_dim(d: usize, max: usize) -> Result<()> {
    if d == 0 || d > max {
        Err(Error::DimensionOutOfRange { d, max })
    } else {
        Ok(())
    }
}

/// Orthogonalizes `f` against `basis` (two passes) and normalizes it.
/// Returns `None` when less than `1e-8` of the original norm survives.
fn orthogonalize_against(grid: &Grid, mut f: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let original = grid.norm(&f);
    if original == 0.0 || !original.is_finite() {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let c = grid.dot(&f, b);
            f.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
    let n = grid.norm(&f);
    if n <= 1e-8 * original {
        return None;
    }
    f.iter_mut().for_each(|x| *x /= n);
    Some(f)
}

pub(crate) fn gram_deviation(grid: &Grid, functions: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, a) in functions.iter().enumerate() {
        for (k, b) in functions.iter().enumerate().skip(j) {
            let target = if j == k { 1.0 } else { 0.0 };
            let dev = (grid.dot(a, b) - target).abs();
            if dev.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(dev);
        }
    }
    worst
}

/// Coordinates of an element of `span{phi_1, ..., phi_d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    values: Vec<f64>,
    basis: Arc<Basis>,
}

impl Coefficients {
    pub fn new(values: Vec<f64>, basis: Arc<Basis>) -> Result<Coefficients> {
        check_dim(values.len(), basis.size())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Coefficients { values, basis })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Euclidean norm of the coordinates, which equals the curve norm.
    pub fn norm(&self) -> f64 {
        crate::linalg::norm2(&self.values)
    }
}

/// Orthogonal projection of `x` onto the span of the first `d` basis functions.
pub fn project(x: &Curve, basis: &Arc<Basis>, d: usize) -> Result<Coefficients> {
    check_grids(x.grid(), basis.grid())?;
    let values = basis.project_values(x.values(), d)?;
    Ok(Coefficients { values, basis: basis.clone() })
}

pub fn reconstruct(c: &Coefficients) -> Curve {
    let values = c.basis.reconstruct_values(&c.values);
    Curve::new(c.basis.grid.clone(), values).expect("finite coefficients give a finite curve")
}

/// Functional principal components of a sample.
///
/// The sample is centered by its mean curve. With fewer curves than grid points
/// the `n x n` weighted Gram matrix is diagonalized, otherwise the `D x D`
/// weighted covariance. Eigenvalues are those of the sample covariance operator
/// (divisor `n - 1`). Directions with numerically zero variance are filled in
/// by Gram-Schmidt and carry eigenvalue 0.
pub fn pca(sample: &FunctionalSample, d: usize) -> Result<Basis> {
    let n = sample.n();
    let dim = sample.dim();
    check_dim(d, (n.saturating_sub(1)).min(dim))?;
    let grid = sample.grid().clone();
    let centered = sample.shifted(&sample.mean_curve())?;
    let denom = (n - 1) as f64;
    let total_variance: f64 = centered.rows().map(|r| grid.dot(r, r)).sum::<f64>() / denom;

    let mut functions: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut eigenvalues: Vec<f64> = Vec::with_capacity(d);
    if n < dim {
        let rows: Vec<&[f64]> = centered.rows().collect();
        let gram = DMatrix::from_fn(n, n, |i, j| grid.dot(rows[i], rows[j]) / denom);
        let (vals, vecs) = sym_eigen_desc(gram);
        let top = vals[0];
        if !(top > 0.0) || total_variance <= 0.0 {
            return Err(Error::RankDeficient("all curves are identical".into()));
        }
        for k in 0..d {
            if vals[k] <= 1e-10 * top {
                break;
            }
            let mut f = vec![0.0; dim];
            for (i, row) in rows.iter().enumerate() {
                let a = vecs[(i, k)];
                f.iter_mut().zip(row.iter()).for_each(|(o, v)| *o += a * v);
            }
            let scale = (denom * vals[k]).sqrt();
            f.iter_mut().for_each(|v| *v /= scale);
            functions.push(f);
            eigenvalues.push(vals[k]);
        }
    } else {
        let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        let x = DMatrix::from_row_slice(n, dim, centered.as_flat());
        cov.gemm_tr(1.0 / denom, &x, &x, 0.0);
        for i in 0..dim {
            for j in 0..dim {
                cov[(i, j)] *= sw[i] * sw[j];
            }
        }
        let (vals, vecs) = sym_eigen_desc(cov);
        let top = vals[0];
        if !(top > 0.0) || total_variance <= 0.0 {
            return Err(Error::RankDeficient("all curves are identical".into()));
        }
        for k in 0..d {
            if vals[k] <= 1e-10 * top {
                break;
            }
            functions.push((0..dim).map(|i| vecs[(i, k)] / sw[i]).collect());
            eigenvalues.push(vals[k]);
        }
    }

    // One ordered Gram-Schmidt pass removes round-off from the eigenvectors.
    let mut cleaned: Vec<Vec<f64>> = Vec::with_capacity(d);
    for f in functions {
        let v = orthogonalize_against(&grid, f, &cleaned)
            .ok_or_else(|| Error::RankDeficient("eigenfunction collapsed".into()))?;
        cleaned.push(v);
    }
    // Complete with zero-variance directions.
    let mut j = 0;
    while cleaned.len() < d && j < dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0 / grid.weights()[j].sqrt();
        if let Some(v) = orthogonalize_against(&grid, e, &cleaned) {
            cleaned.push(v);
            eigenvalues.push(0.0);
        }
        j += 1;
    }
    Ok(Basis::new(grid, cleaned, Some(eigenvalues))?.with_total_variance(total_variance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn bm_phi(k: usize) -> impl Fn(f64) -> f64 {
        move |t| SQRT_2 * ((k as f64 - 0.5) * PI * t).sin()
    }

    fn orthonormal_sines(grid: &Arc<Grid>, d: usize) -> Arc<Basis> {
        let fs = (1..=d)
            .map(|k| grid.points().iter().map(|&t| bm_phi(k)(t)).collect())
            .collect();
        Arc::new(Basis::orthonormalize(grid.clone(), fs).unwrap())
    }

    #[test]
    fn project_basis_element() {
        let g = Grid::uniform(0.0, 1.0, 250).unwrap();
        let b = orthonormal_sines(&g, 5);
        let phi2 = b.function(1);
        let c = project(&phi2, &b, 3).unwrap();
        assert!((c.values()[0]).abs() < 1e-6);
        assert!((c.values()[1] - 1.0).abs() < 1e-6);
        assert!((c.values()[2]).abs() < 1e-6);
        let c1 = project(&phi2, &b, 1).unwrap();
        assert_eq!(c1.dim(), 1);
        assert!(c1.values()[0].abs() < 1e-6);
    }

    #[test]
    fn projection_dimension_checked() {
        let g = Grid::uniform(0.0, 1.0, 50).unwrap();
        let b = orthonormal_sines(&g, 3);
        let x = Curve::zeros(g);
        assert!(matches!(project(&x, &b, 0), Err(Error::DimensionOutOfRange { .. })));
        assert!(matches!(project(&x, &b, 4), Err(Error::DimensionOutOfRange { .. })));
    }

    #[test]
    fn reconstruct_unit_and_zero() {
        let g = Grid::uniform(0.0, 1.0, 100).unwrap();
        let b = orthonormal_sines(&g, 4);
        let c = Coefficients::new(vec![1.0, 0.0, 0.0, 0.0], b.clone()).unwrap();
        assert_eq!(reconstruct(&c).values(), b.function_values(0));
        let z = Coefficients::new(vec![0.0; 4], b).unwrap();
        assert!(reconstruct(&z).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn non_orthonormal_family_rejected() {
        let g = Grid::uniform(0.0, 1.0, 10).unwrap();
        let f = vec![1.0; 10];
        assert!(matches!(
            Basis::new(g.clone(), vec![f.clone(), f.clone()], None),
            Err(Error::NotOrthonormal { .. })
        ));
        assert!(matches!(
            Basis::orthonormalize(g, vec![f.clone(), f]),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn pca_of_multiples_of_one_function() {
        let g = Grid::uniform(0.0, 1.0, 60).unwrap();
        let b = orthonormal_sines(&g, 1);
        let phi = b.function_values(0);
        for n in [10, 100] {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| phi.iter().map(|v| v * (i as f64 - 3.3)).collect())
                .collect();
            let s = FunctionalSample::from_rows(g.clone(), &rows).unwrap();
            let p = pca(&s, 3).unwrap();
            assert!((g.dot(p.function_values(0), phi).abs() - 1.0).abs() < 1e-8);
            let ev = p.eigenvalues().unwrap();
            assert!(ev[0] > 0.0);
            assert_eq!(&ev[1..], &[0.0, 0.0]);
            assert!(gram_deviation(&g, &(0..3).map(|k| p.function_values(k).to_vec()).collect::<Vec<_>>()) < 1e-8);
        }
    }

    #[test]
    fn pca_rejects_identical_curves() {
        let g = Grid::uniform(0.0, 1.0, 8).unwrap();
        let s = FunctionalSample::from_rows(g, &vec![vec![1.0; 8]; 4]).unwrap();
        assert!(matches!(pca(&s, 1), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn pca_dimension_limits() {
        let g = Grid::uniform(0.0, 1.0, 8).unwrap();
        let s = FunctionalSample::from_rows(g, &[vec![1.0; 8], vec![0.0; 8]]).unwrap();
        assert!(pca(&s, 1).is_ok());
        assert!(matches!(pca(&s, 2), Err(Error::DimensionOutOfRange { .. })));
    }
}
