//! Asymptotic relative efficiency of the spatial median against the mean.
//!
//! For a distribution symmetric about its mean `m`, the sample mean has limiting
//! covariance `Sigma` and the sample spatial median has `V0 = J^{-1} Lambda J^{-1}`
//! with
//!
//! ```text
//! J      = E[(I - v v^T) / ||X - m||]
//! Lambda = E[v v^T],        v = (m - X) / ||m - X||.
//! ```
//!
//! The efficiency is `trace(Sigma) / trace(V0)`. Covariances are replaced by
//! their `D x D` versions at the grid points. `J` and `Lambda` are Monte Carlo
//! averages from two independent streams, accumulated in the coordinates
//! `y = W^{1/2} (X - m)` where the grid inner product is Euclidean.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::Grid;
use crate::linalg::sym_inverse_floored;
use crate::rng;
use crate::simulate::{KernelSpec, KlExpansion, ProcessSpec};

/// Default Monte Carlo size for each of `J` and `Lambda`.
pub const DEFAULT_MC: usize = 200_000;
/// Relative eigenvalue floor used when inverting `J`.
pub const J_FLOOR: f64 = 1e-10;
/// Condition numbers of `J` above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

const CHUNKS: usize = 16;
const BATCH: usize = 2048;
const TAG_J: u64 = 0x4a;
const TAG_LAMBDA: u64 = 0x4c;
const TAG_SIGMA: u64 = 0x53;

/// Orthonormal coordinates in which `J` and `Lambda` are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coordinates {
    /// `W^{1/2}` times grid values.
    Grid,
    /// KL scores (eigenbasis of the discretized covariance).
    KarhunenLoeve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct V0Estimate {
    pub trace: f64,
    /// Condition number of the estimated `J`.
    pub j_condition: f64,
    /// Eigenvalues of `J` raised to the relative floor.
    pub floor_activations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub trace_sigma: f64,
    pub trace_v0: f64,
    pub are: f64,
    pub process: String,
    #[serde(rename = "D")]
    pub grid_size: usize,
    pub grid_kind: String,
    pub quadrature: String,
    pub mc_size: usize,
    pub seed: u64,
    pub trace_sigma_method: String,
    pub j_condition: f64,
    pub floor_activations: usize,
    pub generator: String,
    pub version: String,
}

/// KL expansion of the discretized process: Brownian motion is diagonalized
/// numerically like every other kernel, using all `D` eigenpairs by default.
pub fn discretized_expansion(spec: &ProcessSpec, grid: &Arc<Grid>) -> Result<KlExpansion> {
    let mut spec = spec.clone();
    if spec.kernel == KernelSpec::Brownian {
        spec.kernel = KernelSpec::Min;
    }
    KlExpansion::new(&spec, grid)
}

fn variance_of(spec: &ProcessSpec) -> Result<f64> {
    spec.law.variance().ok_or_else(|| {
        Error::DivergentMoment(format!("{} has no finite second moment", spec.law.label()))
    })
}

/// `trace(Sigma) = Var(Y) sum_k lambda_k^2` over the discretization.
///
/// Closed form; `mc` and `seed` are accepted for interface symmetry and unused.
pub fn sigma_trace(spec: &ProcessSpec, grid: &Arc<Grid>, _mc: usize, _seed: u64) -> Result<f64> {
    let var = variance_of(spec)?;
    let kl = discretized_expansion(spec, grid)?;
    Ok(var * kl.scales().iter().map(|s| s * s).sum::<f64>())
}

/// Monte Carlo average of `||X - m||^2` with its standard error.
pub fn sigma_trace_mc(spec: &ProcessSpec, grid: &Arc<Grid>, mc: usize, seed: u64) -> Result<(f64, f64)> {
    variance_of(spec)?;
    let kl = discretized_expansion(spec, grid)?;
    let seed = rng::derive_seed(seed, TAG_SIGMA, 0);
    let t = kl.truncation();
    let mut buf = vec![0.0; t];
    let (mut sum, mut sum2) = (0.0, 0.0);
    for i in 0..mc {
        let mut r = rng::stream(seed, i as u64);
        kl.draw_scores(&mut r, &mut buf);
        let v: f64 = buf.iter().map(|x| x * x).sum();
        sum += v;
        sum2 += v * v;
    }
    let mean = sum / mc as f64;
    let var = (sum2 / mc as f64 - mean * mean).max(0.0);
    Ok((mean, (var / mc as f64).sqrt()))
}

/// What one Monte Carlo pass accumulates.
#[derive(Clone, Copy)]
enum Accumulate {
    J,
    Lambda,
}

/// `(sum_i weight(y_i) y_i y_i^T, sum_i 1 / ||y_i||)` over `mc` draws.
fn accumulate(
    kl: &KlExpansion,
    to_coords: Option<&DMatrix<f64>>,
    what: Accumulate,
    mc: usize,
    seed: u64,
) -> (DMatrix<f64>, f64) {
    let t = kl.truncation();
    let dim = to_coords.map_or(t, |e| e.nrows());
    let bounds: Vec<(usize, usize)> = (0..CHUNKS)
        .map(|c| (c * mc / CHUNKS, (c + 1) * mc / CHUNKS))
        .collect();
    let partials: Vec<(DMatrix<f64>, f64)> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let mut outer = DMatrix::<f64>::zeros(dim, dim);
            let mut inv_sum = 0.0;
            let mut start = lo;
            while start < hi {
                let len = BATCH.min(hi - start);
                let mut scores = DMatrix::<f64>::zeros(len, t);
                let mut row = vec![0.0; t];
                for b in 0..len {
                    let mut r = rng::stream(seed, (start + b) as u64);
                    kl.draw_scores(&mut r, &mut row);
                    for k in 0..t {
                        scores[(b, k)] = row[k];
                    }
                }
                let mut y = match to_coords {
                    Some(e) => scores * e.transpose(),
                    None => scores,
                };
                for b in 0..len {
                    let r = y.row(b).norm();
                    let scale = match what {
                        Accumulate::J => {
                            inv_sum += 1.0 / r;
                            r.powf(-1.5)
                        }
                        Accumulate::Lambda => 1.0 / r,
                    };
                    y.row_mut(b).scale_mut(scale);
                }
                outer.gemm_tr(1.0, &y, &y, 1.0);
                start += len;
            }
            (outer, inv_sum)
        })
        .collect();
    // fixed-order reduction
    let mut outer = DMatrix::<f64>::zeros(dim, dim);
    let mut inv_sum = 0.0;
    for (m, s) in partials {
        outer += m;
        inv_sum += s;
    }
    (outer, inv_sum)
}

/// `trace(J^{-1} Lambda J^{-1})` at `u = 0` for a process symmetric about its mean.
pub fn v0_estimate(spec: &ProcessSpec, grid: &Arc<Grid>, mc: usize, seed: u64) -> Result<V0Estimate> {
    v0_estimate_in(spec, grid, mc, seed, Coordinates::Grid)
}

pub fn v0_estimate_in(
    spec: &ProcessSpec,
    grid: &Arc<Grid>,
    mc: usize,
    seed: u64,
    coords: Coordinates,
) -> Result<V0Estimate> {
    if mc < 2 {
        return Err(Error::InvalidArgument("need at least 2 Monte Carlo draws".into()));
    }
    let kl = discretized_expansion(spec, grid)?;
    // columns W^{1/2} phi_k
    let embed = match coords {
        Coordinates::Grid => {
            let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
            Some(DMatrix::from_fn(grid.len(), kl.truncation(), |i, k| sw[i] * kl.functions()[k][i]))
        }
        Coordinates::KarhunenLoeve => None,
    };
    let seed_j = rng::derive_seed(seed, TAG_J, 0);
    let seed_l = rng::derive_seed(seed, TAG_LAMBDA, 0);
    let (outer_j, inv_sum) = accumulate(&kl, embed.as_ref(), Accumulate::J, mc, seed_j);
    let (outer_l, _) = accumulate(&kl, embed.as_ref(), Accumulate::Lambda, mc, seed_l);
    let m = mc as f64;
    let dim = outer_j.nrows();
    let j = DMatrix::<f64>::identity(dim, dim) * (inv_sum / m) - outer_j / m;
    let lambda = outer_l / m;
    let (j_inv, floor_activations, j_condition) = sym_inverse_floored(&j, J_FLOOR);
    if !(j_condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            condition: j_condition,
            suggestion: "regularize J (e.g. drop null directions of the kernel or use a coarser grid)".into(),
        });
    }
    if floor_activations > 0 {
        log::info!("J inverse: {floor_activations} eigenvalues raised to the relative floor {J_FLOOR:e}");
    }
    let left = &j_inv * &lambda;
    let v0 = left * &j_inv;
    Ok(V0Estimate { trace: v0.trace(), j_condition, floor_activations })
}

/// Full efficiency report; deterministic given `seed`.
pub fn are(spec: &ProcessSpec, grid: &Arc<Grid>, mc: usize, seed: u64) -> Result<EfficiencyReport> {
    let trace_sigma = sigma_trace(spec, grid, mc, seed)?;
    let v0 = v0_estimate(spec, grid, mc, seed)?;
    if !(trace_sigma > 0.0 && trace_sigma.is_finite() && v0.trace > 0.0 && v0.trace.is_finite()) {
        return Err(Error::InvalidProcess(format!(
            "non-positive trace (Sigma {trace_sigma}, V0 {})",
            v0.trace
        )));
    }
    Ok(EfficiencyReport {
        trace_sigma,
        trace_v0: v0.trace,
        are: trace_sigma / v0.trace,
        process: spec.label(),
        grid_size: grid.len(),
        grid_kind: format!("{:?}", grid.kind()),
        quadrature: grid.quadrature_label().into(),
        mc_size: mc,
        seed,
        trace_sigma_method: "closed form: Var(Y) * sum of discretized eigenvalues".into(),
        j_condition: v0.j_condition,
        floor_activations: v0.floor_activations,
        generator: rng::GENERATOR.into(),
        version: crate::VERSION.into(),
    })
}

/// One cell of the standard efficiency sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub label: String,
    /// Published value this cell is compared against.
    pub reference: f64,
    pub tolerance: f64,
    pub report: EfficiencyReport,
}

impl TableCell {
    pub fn within_tolerance(&self) -> bool {
        (self.report.are - self.reference).abs() <= self.tolerance
    }
}

/// Which process family a sweep cell uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellProcess {
    FractionalBrownian(f64),
    TProcess(u32),
    GaussianKernel,
    GaussianKernelT(u32),
}

/// `(label, process, reference value, tolerance)` for the standard sweep.
pub fn standard_cells() -> Vec<(String, CellProcess, Option<f64>, f64)> {
    let mut cells = Vec::new();
    for i in 1..=9 {
        let h = i as f64 / 10.0;
        let reference = match i {
            1 => Some(0.923),
            5 => Some(0.83),
            9 => Some(0.718),
            _ => None,
        };
        cells.push((format!("fbm H={h:.1}"), CellProcess::FractionalBrownian(h), reference, 0.03));
    }
    cells.push(("t(3) min-kernel".into(), CellProcess::TProcess(3), Some(2.135), 0.08));
    cells.push(("t(9) min-kernel".into(), CellProcess::TProcess(9), Some(1.006), 0.04));
    cells.push(("gaussian-kernel".into(), CellProcess::GaussianKernel, Some(0.834), 0.03));
    cells.push(("gaussian-kernel t(3)".into(), CellProcess::GaussianKernelT(3), Some(2.247), 0.08));
    cells.push(("gaussian-kernel t(9)".into(), CellProcess::GaussianKernelT(9), Some(1.013), 0.04));
    cells
}

/// Grid and process for a sweep cell: equispaced `[0, 1]` for `[0, 1]`-indexed
/// processes, `D` draws from `N(0, 1/2)` with equal weights for the
/// Gaussian-kernel ones.
pub fn cell_setup(cell: CellProcess, grid_size: usize, seed: u64) -> Result<(ProcessSpec, Arc<Grid>)> {
    use crate::simulate::CoefficientLaw;
    Ok(match cell {
        CellProcess::FractionalBrownian(h) => {
            let spec = if (h - 0.5).abs() < 1e-12 {
                ProcessSpec::brownian()
            } else {
                ProcessSpec::fractional_brownian(h)
            };
            (spec, Grid::uniform(0.0, 1.0, grid_size)?)
        }
        CellProcess::TProcess(df) => (ProcessSpec::t_process(df), Grid::uniform(0.0, 1.0, grid_size)?),
        CellProcess::GaussianKernel | CellProcess::GaussianKernelT(_) => {
            let mut r = rng::stream(rng::derive_seed(seed, 0x47, 0), 0);
            let grid = Grid::gaussian_measure(0.0, 0.5, grid_size, &mut r)?;
            let law = match cell {
                CellProcess::GaussianKernelT(df) => CoefficientLaw::StudentT { df },
                _ => CoefficientLaw::Gaussian,
            };
            (ProcessSpec::gaussian_kernel().with_law(law), grid)
        }
    })
}

/// Runs every cell of the standard sweep (cells without a published value get
/// reference `NaN`).
pub fn standard_table(grid_size: usize, mc: usize, seed: u64) -> Result<Vec<TableCell>> {
    standard_cells()
        .into_iter()
        .map(|(label, cell, reference, tolerance)| {
            let (spec, grid) = cell_setup(cell, grid_size, seed)?;
            let report = are(&spec, &grid, mc, seed)?;
            Ok(TableCell { label, reference: reference.unwrap_or(f64::NAN), tolerance, report })
        })
        .collect()
}
