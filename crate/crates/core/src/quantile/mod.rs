//! Sample spatial quantiles.
//!
//! The sample spatial `u`-quantile minimizes
//!
//! ```text
//! g(Q) = n^{-1} sum_i (||Q - X_i|| - ||X_i||) - <u, Q>
//! ```
//!
//! over `Q` in the span of the first `d` basis functions, with the data
//! projected onto the same span. Since the basis is orthonormal, the problem is
//! Euclidean in coefficient space, which is where everything in this module
//! operates. [`solve_quantile`] wraps the coefficient-level solver with the
//! centering workflow: subtract the mean curve, solve, add the mean back.

mod bahadur;
mod fan;
mod objective;
mod solver;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::funcspace::{check_grids, Basis, FunctionalSample};
use crate::linalg::norm2;

pub use bahadur::{bahadur_from_projected, bahadur_residual, BahadurReport};
pub use fan::{quantile_fan, FanMember};
pub use objective::{gradient, hessian, objective};
pub use solver::{solve_projected, solve_quantile, ProjectedSolution, QuantileSolution, SolveOptions};

/// A direction in the open unit ball of the dual space, in basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionU {
    coefficients: Vec<f64>,
    norm: f64,
}

impl DirectionU {
    pub fn new(coefficients: Vec<f64>) -> Result<DirectionU> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite direction coefficient".into()));
        }
        let norm = norm2(&coefficients);
        if norm >= 1.0 {
            return Err(Error::DirectionOutsideBall { norm });
        }
        Ok(DirectionU { coefficients, norm })
    }

    /// The zero direction (spatial median).
    pub fn zero(d: usize) -> DirectionU {
        DirectionU { coefficients: vec![0.0; d], norm: 0.0 }
    }

    /// `c * phi_k` for a 1-based basis index `k`.
    pub fn along(k: usize, c: f64, d: usize) -> Result<DirectionU> {
        if k == 0 || k > d {
            return Err(Error::DimensionOutOfRange { d: k, max: d });
        }
        let mut v = vec![0.0; d];
        v[k - 1] = c;
        DirectionU::new(v)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// First `d` coordinates, zero-padded. Truncation never increases the norm.
    pub fn truncated(&self, d: usize) -> Vec<f64> {
        (0..d).map(|k| self.coefficients.get(k).copied().unwrap_or(0.0)).collect()
    }
}

/// Data projected onto the first `d` basis functions, row-major `n x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSample {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl ProjectedSample {
    pub fn new(sample: &FunctionalSample, basis: &Arc<Basis>, d: usize) -> Result<ProjectedSample> {
        check_grids(sample.grid(), basis.grid())?;
        let mut data = Vec::with_capacity(sample.n() * d);
        for row in sample.rows() {
            data.extend(basis.project_values(row, d)?);
        }
        Ok(ProjectedSample { n: sample.n(), d, data })
    }

    pub fn from_coefficients(d: usize, data: Vec<f64>) -> Result<ProjectedSample> {
        if d == 0 || data.is_empty() || data.len() % d != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients do not form rows of length {d}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(ProjectedSample { n: data.len() / d, d, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.d)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Applies `x -> c * x + a` to every row.
    pub fn affine(&self, c: f64, a: &[f64]) -> ProjectedSample {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| c * v + a[i % self.d])
            .collect();
        ProjectedSample { n: self.n, d: self.d, data }
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.d];
        for row in self.rows() {
            m.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        m.iter_mut().for_each(|v| *v /= self.n as f64);
        m
    }
}
