//! Karhunen-Loeve samplers.
//!
//! A process is `X = m + sum_k lambda_k Y_k phi_k` where `(lambda_k^2, phi_k)`
//! are eigenpairs of the covariance operator on the grid's measure. Brownian
//! motion uses its closed-form eigenpairs; every other kernel is diagonalized
//! numerically as `W^{1/2} K W^{1/2}` with `W` the quadrature weights.
//! For `t` coefficients, `Y_k = Z_k / sqrt(W / r)` with a single chi-square `W`
//! shared by all terms of one path.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::funcspace::{check_grids, Basis, Curve, FunctionalSample, Grid};
use crate::linalg::sym_eigen_desc;
use crate::rng;

/// Eigenvalues in `[-PSD_TOL, 0)` are clipped to zero; anything lower is an error.
pub const PSD_TOL: f64 = 1e-10;

/// Truncation used for closed-form Brownian motion when none is given.
pub const DEFAULT_BM_TRUNCATION: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `min(t, s)` with closed-form eigenpairs on `[0, 1]`.
    Brownian,
    /// `0.5 (t^{2H} + s^{2H} - |t - s|^{2H})`.
    FractionalBrownian { hurst: f64 },
    /// `min(t, s)`, diagonalized numerically.
    Min,
    /// `exp(-(t - s)^2)`.
    Gaussian,
    /// Kernel matrix given at the grid points.
    Custom(DMatrix<f64>),
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::FractionalBrownian { hurst } if !(*hurst > 0.0 && *hurst < 1.0) => {
                Err(Error::InvalidKernel(format!("Hurst index {hurst} outside (0, 1)")))
            }
            KernelSpec::Custom(m) => {
                if m.nrows() != m.ncols() {
                    return Err(Error::InvalidKernel("custom kernel matrix is not square".into()));
                }
                let asym = (m - m.transpose()).amax();
                if asym > 1e-8 {
                    return Err(Error::InvalidKernel(format!("custom kernel asymmetric by {asym:e}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Kernel value at `(t, s)`; `None` for custom matrices.
    pub fn eval(&self, t: f64, s: f64) -> Option<f64> {
        Some(match self {
            KernelSpec::Brownian | KernelSpec::Min => t.min(s),
            KernelSpec::FractionalBrownian { hurst } => {
                let h2 = 2.0 * hurst;
                0.5 * (t.abs().powf(h2) + s.abs().powf(h2) - (t - s).abs().powf(h2))
            }
            KernelSpec::Gaussian => (-(t - s).powi(2)).exp(),
            KernelSpec::Custom(_) => return None,
        })
    }

    /// Kernel matrix at the grid points.
    pub fn matrix(&self, grid: &Grid) -> Result<DMatrix<f64>> {
        self.validate()?;
        let d = grid.len();
        match self {
            KernelSpec::Custom(m) => {
                if m.nrows() != d {
                    return Err(Error::InvalidKernel(format!(
                        "custom kernel is {}x{}, grid has {d} points",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Ok(m.clone())
            }
            _ => {
                let t = grid.points();
                Ok(DMatrix::from_fn(d, d, |i, j| self.eval(t[i], t[j]).expect("analytic kernel")))
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            KernelSpec::Brownian => "brownian".into(),
            KernelSpec::FractionalBrownian { hurst } => format!("fractional-brownian(H={hurst})"),
            KernelSpec::Min => "min".into(),
            KernelSpec::Gaussian => "gaussian".into(),
            KernelSpec::Custom(m) => format!("custom({}x{})", m.nrows(), m.ncols()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientLaw {
    Gaussian,
    /// `Z_k / sqrt(W / df)`, one `W ~ chi^2(df)` per path.
    StudentT { df: u32 },
}

impl CoefficientLaw {
    /// `Var(Y_k)`, if finite.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            CoefficientLaw::Gaussian => Some(1.0),
            CoefficientLaw::StudentT { df } if df > 2 => Some(df as f64 / (df as f64 - 2.0)),
            CoefficientLaw::StudentT { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            CoefficientLaw::Gaussian => "gaussian".into(),
            CoefficientLaw::StudentT { df } => format!("student-t({df})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub kernel: KernelSpec,
    pub law: CoefficientLaw,
    /// Mean curve; zero when absent.
    pub mean: Option<Curve>,
    /// Number of KL terms; `None` picks [`DEFAULT_BM_TRUNCATION`] for closed-form
    /// Brownian motion and the grid size for numerical kernels.
    pub truncation: Option<usize>,
}

impl ProcessSpec {
    pub fn new(kernel: KernelSpec, law: CoefficientLaw) -> ProcessSpec {
        ProcessSpec { kernel, law, mean: None, truncation: None }
    }

    pub fn brownian() -> ProcessSpec {
        Self::new(KernelSpec::Brownian, CoefficientLaw::Gaussian)
    }

    pub fn fractional_brownian(hurst: f64) -> ProcessSpec {
        Self::new(KernelSpec::FractionalBrownian { hurst }, CoefficientLaw::Gaussian)
    }

    /// `t` process with the `min(t, s)` covariance kernel.
    pub fn t_process(df: u32) -> ProcessSpec {
        Self::new(KernelSpec::Min, CoefficientLaw::StudentT { df })
    }

    pub fn gaussian_kernel() -> ProcessSpec {
        Self::new(KernelSpec::Gaussian, CoefficientLaw::Gaussian)
    }

    pub fn with_law(mut self, law: CoefficientLaw) -> ProcessSpec {
        self.law = law;
        self
    }

    pub fn with_mean(mut self, mean: Curve) -> ProcessSpec {
        self.mean = Some(mean);
        self
    }

    pub fn with_truncation(mut self, truncation: usize) -> ProcessSpec {
        self.truncation = Some(truncation);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if let CoefficientLaw::StudentT { df } = self.law {
            if df < 3 {
                return Err(Error::InvalidProcess(format!(
                    "t coefficients need at least 3 degrees of freedom, got {df}"
                )));
            }
        }
        if self.truncation == Some(0) {
            return Err(Error::InvalidProcess("truncation must be at least 1".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("{} kernel, {} coefficients", self.kernel.label(), self.law.label())
    }

    /// Mean values on `grid` (zeros when the spec has no mean).
    pub fn mean_values(&self, grid: &Arc<Grid>) -> Result<Vec<f64>> {
        match &self.mean {
            Some(m) => {
                check_grids(m.grid(), grid)?;
                Ok(m.values().to_vec())
            }
            None => Ok(vec![0.0; grid.len()]),
        }
    }
}

/// `(lambda_k, phi_k)` for standard Brownian motion on `[0, 1]`:
/// `lambda_k = 1 / ((k - 1/2) pi)`, `phi_k(t) = sqrt(2) sin((k - 1/2) pi t)`.
pub fn bm_eigenpair(k: usize, grid: &Arc<Grid>) -> Result<(f64, Curve)> {
    if k == 0 {
        return Err(Error::InvalidArgument("eigenpair index starts at 1".into()));
    }
    let pts = grid.points();
    if pts[0] < -1e-12 || pts[pts.len() - 1] > 1.0 + 1e-12 {
        return Err(Error::GridNotUnitInterval);
    }
    let freq = (k as f64 - 0.5) * PI;
    let phi = Curve::from_fn(grid.clone(), |t| SQRT_2 * (freq * t).sin())?;
    Ok((1.0 / freq, phi))
}

/// Orthonormalized closed-form Brownian eigenfunctions, with eigenvalues `lambda_k^2`.
///
/// The closed-form functions are only orthonormal up to quadrature error, so
/// they are passed through ordered Gram-Schmidt; `span{phi_1..phi_k}` is kept.
pub fn bm_basis(grid: &Arc<Grid>, d: usize) -> Result<Basis> {
    if d == 0 || d > grid.len() {
        return Err(Error::DimensionOutOfRange { d, max: grid.len() });
    }
    let mut functions = Vec::with_capacity(d);
    let mut eigenvalues = Vec::with_capacity(d);
    for k in 1..=d {
        let (lambda, phi) = bm_eigenpair(k, grid)?;
        functions.push(phi.into_values());
        eigenvalues.push(lambda * lambda);
    }
    let ortho = Basis::orthonormalize(grid.clone(), functions)?;
    let functions = (0..d).map(|k| ortho.function_values(k).to_vec()).collect();
    Basis::new(grid.clone(), functions, Some(eigenvalues))
}

/// Top-`d` eigenpairs of the covariance operator of `kernel` on the grid measure.
///
/// Diagonalizes `W^{1/2} K W^{1/2}`; eigenfunctions are the eigenvectors scaled
/// by `W^{-1/2}`, which makes them orthonormal under the grid inner product.
pub fn kernel_eigen(kernel: &KernelSpec, grid: &Arc<Grid>, d: usize) -> Result<Basis> {
    let size = grid.len();
    if d == 0 || d > size {
        return Err(Error::DimensionOutOfRange { d, max: size });
    }
    let k = kernel.matrix(grid)?;
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(size, size, |i, j| {
        // symmetrize exactly
        0.5 * (k[(i, j)] + k[(j, i)]) * sw[i] * sw[j]
    });
    let (vals, vecs) = sym_eigen_desc(a);
    let min = *vals.last().expect("nonempty");
    if min < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let eigenvalues: Vec<f64> = vals[..d].iter().map(|v| v.max(0.0)).collect();
    let functions = (0..d)
        .map(|c| (0..size).map(|i| vecs[(i, c)] / sw[i]).collect())
        .collect();
    Basis::new(grid.clone(), functions, Some(eigenvalues))
}

/// Truncated KL expansion on a grid: scales `lambda_k` and functions `phi_k`
/// evaluated at the grid points.
#[derive(Debug, Clone)]
pub struct KlExpansion {
    grid: Arc<Grid>,
    scales: Vec<f64>,
    functions: Vec<Vec<f64>>,
    law: CoefficientLaw,
    mean: Vec<f64>,
}

impl KlExpansion {
    pub fn new(spec: &ProcessSpec, grid: &Arc<Grid>) -> Result<KlExpansion> {
        spec.validate()?;
        let mean = spec.mean_values(grid)?;
        let (scales, functions) = match spec.kernel {
            KernelSpec::Brownian => {
                let t = spec.truncation.unwrap_or(DEFAULT_BM_TRUNCATION);
                let mut scales = Vec::with_capacity(t);
                let mut functions = Vec::with_capacity(t);
                for k in 1..=t {
                    let (lambda, phi) = bm_eigenpair(k, grid)?;
                    scales.push(lambda);
                    functions.push(phi.into_values());
                }
                (scales, functions)
            }
            _ => {
                let available = grid.len();
                let t = spec.truncation.unwrap_or(available);
                if t > available {
                    return Err(Error::TruncationTooLarge { requested: t, available });
                }
                let basis = kernel_eigen(&spec.kernel, grid, t)?;
                let ev = basis.eigenvalues().expect("kernel basis has eigenvalues");
                (
                    ev.iter().map(|v| v.sqrt()).collect(),
                    (0..t).map(|k| basis.function_values(k).to_vec()).collect(),
                )
            }
        };
        Ok(KlExpansion { grid: grid.clone(), scales, functions, law: spec.law, mean })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `lambda_k`, the standard deviations of the KL scores for Gaussian coefficients.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.functions
    }

    pub fn law(&self) -> CoefficientLaw {
        self.law
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn truncation(&self) -> usize {
        self.scales.len()
    }

    /// Fills `out` with the scores `lambda_k Y_k` of one path.
    pub fn draw_scores<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (o, s) in out.iter_mut().zip(&self.scales) {
            let z: f64 = StandardNormal.sample(rng);
            *o = s * z;
        }
        if let CoefficientLaw::StudentT { df } = self.law {
            let w = ChiSquared::new(df as f64).expect("df >= 3").sample(rng);
            let factor = (df as f64 / w).sqrt();
            out.iter_mut().for_each(|o| *o *= factor);
        }
    }

    /// Scores of `n` paths, row-major `n x truncation`. Path `i` uses substream `i`.
    pub fn sample_scores(&self, n: usize, seed: u64) -> Vec<f64> {
        let t = self.truncation();
        let mut out = vec![0.0; n * t];
        out.par_chunks_mut(t).enumerate().for_each(|(i, row)| {
            let mut rng = rng::stream(seed, i as u64);
            self.draw_scores(&mut rng, row);
        });
        out
    }

    /// Grid values `m + sum_k score_k phi_k` for row-major scores.
    pub fn paths_from_scores(&self, scores: &[f64], n: usize) -> Vec<f64> {
        let t = self.truncation();
        let d = self.grid.len();
        let s = DMatrix::from_row_slice(n, t, scores);
        let phi = DMatrix::from_fn(t, d, |k, i| self.functions[k][i]);
        let x = s * phi;
        let mut out = Vec::with_capacity(n * d);
        for i in 0..n {
            out.extend((0..d).map(|j| x[(i, j)] + self.mean[j]));
        }
        out
    }
}

/// `n` i.i.d. truncated-KL paths; identical `(spec, grid, n, seed)` give identical output.
pub fn sample_process(
    spec: &ProcessSpec,
    grid: &Arc<Grid>,
    n: usize,
    seed: u64,
) -> Result<FunctionalSample> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let kl = KlExpansion::new(spec, grid)?;
    let scores = kl.sample_scores(n, seed);
    FunctionalSample::from_flat(grid.clone(), n, kl.paths_from_scores(&scores, n))
}
