//! Spatial distributions, spatial quantiles and spatial depth for functional
//! data observed on a grid.
//!
//! Curves live in a discretized `L2` space: a [`Grid`] carries the points and
//! the quadrature weights of the underlying measure, and every inner product
//! in the crate is taken under those weights. On top of that the crate
//! provides
//!
//! * Karhunen-Loeve samplers for Brownian motion, fractional Brownian motion,
//!   Gaussian-kernel processes and their `t` counterparts ([`simulate`]),
//! * the spatial sign and the empirical spatial distribution ([`spatial`]),
//! * sample spatial quantiles computed over a truncated basis by damped Newton
//!   iterations ([`quantile`]),
//! * spatial depth and DD-plot data ([`depth`]),
//! * the asymptotic efficiency of the spatial median against the mean
//!   ([`efficiency`]) and Monte Carlo rate studies ([`asymptotics`]).
//!
//! ```
//! use fdspatial::{funcspace::Grid, simulate, depth};
//!
//! let grid = Grid::uniform(0.0, 1.0, 50).unwrap();
//! let spec = simulate::ProcessSpec::brownian();
//! let sample = simulate::sample_process(&spec, &grid, 100, 7).unwrap();
//! let median_depth = depth::spatial_depth(&sample.mean_curve(), &sample).unwrap();
//! assert!(median_depth > 0.5);
//! ```

pub mod asymptotics;
pub mod depth;
pub mod efficiency;
pub mod error;
pub mod funcspace;
mod linalg;
pub mod quantile;
pub mod rng;
pub mod simulate;
pub mod spatial;
pub mod stats;

pub use error::{Error, Result};
pub use funcspace::{Basis, Coefficients, Curve, FunctionalSample, Grid, GridKind};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
