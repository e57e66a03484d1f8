use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the quadrature weights of a [`Grid`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridKind {
    /// Equispaced points on `[a, b]` with trapezoid weights (Lebesgue measure).
    UniformInterval { a: f64, b: f64 },
    /// Points drawn from a normal probability measure, each weighted `1/D`.
    GaussianMeasure { mean: f64, variance: f64 },
    /// Caller-supplied points and weights.
    Custom,
}

/// Discretization points `t_1 < ... < t_D` together with quadrature weights.
///
/// The weights encode the measure the function space is built on, so the
/// inner product of two curves is `sum_i w_i a(t_i) b(t_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
    kind: GridKind,
}

impl Grid {
    /// `size` equispaced points on `[a, b]`, endpoints included, trapezoid weights.
    pub fn uniform(a: f64, b: f64, size: usize) -> Result<Arc<Grid>> {
        if size < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {size}")));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidGrid(format!("invalid interval [{a}, {b}]")));
        }
        let h = (b - a) / (size - 1) as f64;
        let points: Vec<f64> = (0..size)
            .map(|i| if i == size - 1 { b } else { a + h * i as f64 })
            .collect();
        let mut weights = vec![h; size];
        weights[0] = h / 2.0;
        weights[size - 1] = h / 2.0;
        Self::validated(points, weights, GridKind::UniformInterval { a, b })
    }

    /// `size` points drawn from `N(mean, variance)` and sorted, each with weight `1/size`.
    ///
    /// Norms on this grid are plain averages of `x(t)^2` over the drawn points.
    pub fn gaussian_measure<R: Rng + ?Sized>(
        mean: f64,
        variance: f64,
        size: usize,
        rng: &mut R,
    ) -> Result<Arc<Grid>> {
        if size < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {size}")));
        }
        if !(variance > 0.0 && variance.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidGrid(format!("invalid variance {variance}")));
        }
        let normal = Normal::new(mean, variance.sqrt())
            .map_err(|e| Error::InvalidGrid(e.to_string()))?;
        let mut points: Vec<f64> = (0..size).map(|_| normal.sample(rng)).collect();
        points.sort_by(f64::total_cmp);
        let weights = vec![1.0 / size as f64; size];
        Self::validated(points, weights, GridKind::GaussianMeasure { mean, variance })
    }

    /// Arbitrary strictly increasing points with positive weights.
    ///
    /// A single point is allowed here, which gives the scalar case.
    pub fn custom(points: Vec<f64>, weights: Vec<f64>) -> Result<Arc<Grid>> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("no points".into()));
        }
        Self::validated(points, weights, GridKind::Custom)
    }

    /// Grid from points alone. Equispaced points become a uniform-interval grid,
    /// anything else gets non-uniform trapezoid weights.
    pub fn from_points(points: Vec<f64>) -> Result<Arc<Grid>> {
        match points.len() {
            0 => Err(Error::InvalidGrid("no points".into())),
            1 => Self::custom(points, vec![1.0]),
            n => {
                let (a, b) = (points[0], points[n - 1]);
                let h = (b - a) / (n - 1) as f64;
                let equispaced = h > 0.0
                    && points
                        .iter()
                        .enumerate()
                        .all(|(i, &t)| (t - (a + h * i as f64)).abs() <= 1e-9 * (b - a).abs().max(1.0));
                if equispaced {
                    // same weights as `uniform`, so written grids read back identically
                    let mut weights = vec![h; n];
                    weights[0] = h / 2.0;
                    weights[n - 1] = h / 2.0;
                    Self::validated(points, weights, GridKind::UniformInterval { a, b })
                } else {
                    let weights = trapezoid_weights(&points);
                    Self::validated(points, weights, GridKind::Custom)
                }
            }
        }
    }

    fn validated(points: Vec<f64>, weights: Vec<f64>, kind: GridKind) -> Result<Arc<Grid>> {
        if points.len() != weights.len() {
            return Err(Error::InvalidGrid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite point".into()));
        }
        if let Some(i) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "points not strictly increasing at index {}",
                i + 1
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidGrid("weights must be positive and finite".into()));
        }
        Ok(Arc::new(Grid { points, weights, kind }))
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total mass of the discretized measure.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted inner product of two value vectors on this grid.
    #[inline]
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    #[inline]
    pub fn norm(&self, a: &[f64]) -> f64 {
        self.dot(a, a).max(0.0).sqrt()
    }

    /// Short description of the quadrature rule, recorded in report metadata.
    pub fn quadrature_label(&self) -> &'static str {
        match self.kind {
            GridKind::UniformInterval { .. } => "trapezoid",
            GridKind::GaussianMeasure { .. } => "equal-weights",
            GridKind::Custom => "custom",
        }
    }
}

/// Composite trapezoid weights for arbitrary increasing points.
pub fn trapezoid_weights(points: &[f64]) -> Vec<f64> {
    let n = points.len();
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (points[1] - points[0]) / 2.0
            } else if i == n - 1 {
                (points[n - 1] - points[n - 2]) / 2.0
            } else {
                (points[i + 1] - points[i - 1]) / 2.0
            }
        })
        .collect()
}

/// Whether two grid handles describe the same discretization.
pub fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}
