//! Discretized function spaces: grids with quadrature weights, curves,
//! samples of curves, orthonormal bases and functional PCA.

mod basis;
mod curve;
mod grid;
pub mod io;

pub use basis::{pca, project, reconstruct, Basis, Coefficients, ORTHONORMALITY_TOL};
pub use curve::{inner_product, norm, Curve, FunctionalSample};
pub use grid::{same_grid, trapezoid_weights, Grid, GridKind};

pub(crate) use curve::check_grids;

/// Default truncation level `floor(sqrt(n))`.
pub fn default_dimension(n: usize) -> usize {
    n.isqrt().max(1)
}
