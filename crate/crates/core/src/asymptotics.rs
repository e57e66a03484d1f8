//! Monte Carlo checks of convergence rates.
//!
//! The population spatial distribution `S_x` is replaced by its value on a
//! large reference sample. Studies report medians over replications and the
//! least-squares slope of `log(error)` on `log(n)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{Curve, FunctionalSample, Grid};
use crate::linalg::norm2;
use crate::quantile::{bahadur_from_projected, solve_projected, DirectionU, ProjectedSample, SolveOptions};
use crate::rng;
use crate::simulate::{KlExpansion, ProcessSpec};
use crate::spatial::{spatial_sum_batch, SpatialDistValue};
use crate::stats::{log_log_slope, median};

pub const DEFAULT_REFERENCE_SIZE: usize = 100_000;
pub const DEFAULT_INTEGRATION_DRAWS: usize = 200;

const CHUNK: usize = 4096;
const TAG_REFERENCE: u64 = 0x5245;
const TAG_SAMPLE: u64 = 0x534d;
const TAG_PROBES: u64 = 0x5052;
const TAG_BAHADUR: u64 = 0x4248;

/// Reference value of `S_x` with its Monte Carlo error `sqrt((1 - ||S_x||^2) / n_ref)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceValue {
    pub value: SpatialDistValue,
    pub mc_error: f64,
    pub reference_size: usize,
}

/// Paths `start..end` of the stream family `seed`; path `i` matches row `i` of
/// `sample_process(spec, grid, n, seed)`.
fn paths_range(kl: &KlExpansion, start: usize, end: usize, seed: u64) -> Vec<f64> {
    let t = kl.truncation();
    let n = end - start;
    let mut scores = vec![0.0; n * t];
    for (b, row) in scores.chunks_mut(t).enumerate() {
        let mut r = rng::stream(seed, (start + b) as u64);
        kl.draw_scores(&mut r, row);
    }
    kl.paths_from_scores(&scores, n)
}

/// `S_x` at every probe from `n_ref` reference paths, generated and reduced in fixed-size chunks.
pub fn reference_spatial_dists(
    spec: &ProcessSpec,
    probes: &FunctionalSample,
    n_ref: usize,
    seed: u64,
) -> Result<Vec<ReferenceValue>> {
    if n_ref == 0 {
        return Err(Error::EmptySample);
    }
    let grid = probes.grid();
    let kl = KlExpansion::new(spec, grid)?;
    let (m, d) = (probes.n(), probes.dim());
    let seed = rng::derive_seed(seed, TAG_REFERENCE, 0);
    let chunks: Vec<(usize, usize)> =
        (0..n_ref.div_ceil(CHUNK)).map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n_ref))).collect();
    let partials: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let data = paths_range(&kl, lo, hi, seed);
            spatial_sum_batch(grid, probes.as_flat(), m, &data, hi - lo)
        })
        .collect();
    let mut total = vec![0.0; m * d];
    for p in partials {
        total.iter_mut().zip(&p).for_each(|(t, v)| *t += v);
    }
    let inv = 1.0 / n_ref as f64;
    total
        .chunks(d)
        .map(|row| {
            let curve = Curve::new(grid.clone(), row.iter().map(|v| v * inv).collect())?;
            let value = SpatialDistValue::hilbert(curve);
            let mc_error = ((1.0 - value.norm().powi(2)).max(0.0) * inv).sqrt();
            Ok(ReferenceValue { value, mc_error, reference_size: n_ref })
        })
        .collect()
}

/// Single-point version of [`reference_spatial_dists`].
pub fn reference_spatial_dist(spec: &ProcessSpec, x: &Curve, n_ref: usize, seed: u64) -> Result<ReferenceValue> {
    let probes = FunctionalSample::from_curves(std::slice::from_ref(x))?;
    Ok(reference_spatial_dists(spec, &probes, n_ref, seed)?.remove(0))
}

/// Errors of one replication at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationErrors {
    pub replication: usize,
    pub n: usize,
    /// `max_x ||S_hat_x - S_x||` over the probes.
    pub sup_error: f64,
    /// Mean over the probes of `||S_hat_x - S_x||^2`.
    pub integrated_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub study: String,
    pub process: String,
    pub grid_size: usize,
    pub n_values: Vec<usize>,
    /// Median over replications, per `n`.
    pub sup_errors: Vec<f64>,
    /// Median over replications, per `n`.
    pub integrated_errors: Vec<f64>,
    pub fitted_slope_sup: f64,
    pub fitted_slope_int: f64,
    pub replications: usize,
    pub seed: u64,
    pub probes: usize,
    pub reference_size: usize,
    /// Largest Monte Carlo error of the reference values.
    pub reference_mc_error: f64,
    /// The probe set is finite; the gap to a supremum over a compact set is not estimated.
    pub note: String,
    pub raw: Vec<ReplicationErrors>,
    pub generator: String,
    pub version: String,
}

impl RateReport {
    /// Per-`n` medians as CSV: `n,sup_error,integrated_error`.
    pub fn medians_csv(&self) -> String {
        let mut s = String::from("n,sup_error,integrated_error\n");
        for ((n, a), b) in self.n_values.iter().zip(&self.sup_errors).zip(&self.integrated_errors) {
            s.push_str(&format!("{n},{a},{b}\n"));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub n_values: Vec<usize>,
    pub replications: usize,
    pub reference_size: usize,
    pub seed: u64,
}

impl StudyOptions {
    pub fn new(n_values: Vec<usize>, replications: usize, seed: u64) -> StudyOptions {
        StudyOptions { n_values, replications, reference_size: DEFAULT_REFERENCE_SIZE, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.n_values.len() < 2 || self.n_values.windows(2).any(|w| w[0] >= w[1]) || self.n_values[0] == 0 {
            return Err(Error::InvalidArgument("n_values must be at least two increasing positive sizes".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument("need at least one replication".into()));
        }
        Ok(())
    }
}

fn rate_study(study: &str, spec: &ProcessSpec, probes: &FunctionalSample, opts: &StudyOptions) -> Result<RateReport> {
    opts.validate()?;
    let grid = probes.grid().clone();
    let reference = reference_spatial_dists(spec, probes, opts.reference_size, opts.seed)?;
    let kl = KlExpansion::new(spec, &grid)?;
    let (m, d) = (probes.n(), probes.dim());
    let k = opts.n_values.len();
    let raw: Vec<ReplicationErrors> = (0..opts.replications * k)
        .into_par_iter()
        .map(|job| {
            let (rep, ni) = (job / k, job % k);
            let n = opts.n_values[ni];
            let seed = rng::derive_seed(opts.seed, TAG_SAMPLE, job as u64);
            let data = paths_range(&kl, 0, n, seed);
            let sums = spatial_sum_batch(&grid, probes.as_flat(), m, &data, n);
            let inv = 1.0 / n as f64;
            let mut sup: f64 = 0.0;
            let mut sq = 0.0;
            for (row, r) in sums.chunks(d).zip(&reference) {
                let diff: Vec<f64> = row.iter().zip(r.value.values()).map(|(a, b)| a * inv - b).collect();
                let e2 = grid.dot(&diff, &diff);
                sup = sup.max(e2.sqrt());
                sq += e2;
            }
            ReplicationErrors { replication: rep, n, sup_error: sup, integrated_error: sq / m as f64 }
        })
        .collect();
    let per_n = |f: fn(&ReplicationErrors) -> f64| -> Vec<f64> {
        (0..k)
            .map(|ni| median(&raw.iter().filter(|e| e.n == opts.n_values[ni]).map(f).collect::<Vec<_>>()))
            .collect()
    };
    let sup_errors = per_n(|e| e.sup_error);
    let integrated_errors = per_n(|e| e.integrated_error);
    Ok(RateReport {
        study: study.into(),
        process: spec.label(),
        grid_size: grid.len(),
        fitted_slope_sup: log_log_slope(&opts.n_values, &sup_errors),
        fitted_slope_int: log_log_slope(&opts.n_values, &integrated_errors),
        n_values: opts.n_values.clone(),
        sup_errors,
        integrated_errors,
        replications: opts.replications,
        seed: opts.seed,
        probes: m,
        reference_size: opts.reference_size,
        reference_mc_error: reference.iter().map(|r| r.mc_error).fold(0.0, f64::max),
        note: "finite probe set stands in for a compact set; errors are against a reference-sample estimate of S_x".into(),
        raw,
        generator: rng::GENERATOR.into(),
        version: crate::VERSION.into(),
    })
}

/// Uniform error `max_{x in K} ||S_hat_x - S_x||` over a finite probe set `K`.
pub fn gc_rate_study(spec: &ProcessSpec, probes: &FunctionalSample, opts: &StudyOptions) -> Result<RateReport> {
    rate_study("gc", spec, probes, opts)
}

/// Integrated squared error, with the integral over `mu` replaced by an average
/// over `draws` fixed points drawn from the process itself.
pub fn integrated_error_study(
    spec: &ProcessSpec,
    grid: &Arc<Grid>,
    draws: usize,
    opts: &StudyOptions,
) -> Result<RateReport> {
    let probes = crate::simulate::sample_process(spec, grid, draws, rng::derive_seed(opts.seed, TAG_PROBES, 0))?;
    rate_study("integrated", spec, &probes, opts)
}

/// `count` probe curves drawn from the process (seeded independently of the study samples).
pub fn probe_set(spec: &ProcessSpec, grid: &Arc<Grid>, count: usize, seed: u64) -> Result<FunctionalSample> {
    crate::simulate::sample_process(spec, grid, count, rng::derive_seed(seed, TAG_PROBES, 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BahadurStudyReport {
    pub process: String,
    pub d: usize,
    pub direction: Vec<f64>,
    pub n_values: Vec<usize>,
    /// Median remainder norm per `n`.
    pub residual_norms: Vec<f64>,
    /// Median linear-term norm per `n`.
    pub linear_term_norms: Vec<f64>,
    pub fitted_slope_residual: f64,
    pub fitted_slope_linear: f64,
    pub replications: usize,
    pub reference_size: usize,
    pub seed: u64,
    pub generator: String,
    pub version: String,
}

impl BahadurStudyReport {
    pub fn medians_csv(&self) -> String {
        let mut s = String::from("n,residual_norm,linear_term_norm\n");
        for ((n, a), b) in self.n_values.iter().zip(&self.residual_norms).zip(&self.linear_term_norms) {
            s.push_str(&format!("{n},{a},{b}\n"));
        }
        s
    }
}

/// First `d` KL scores of `n` paths on substreams `0..n` of `seed`.
fn kl_scores(kl: &KlExpansion, d: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut buf = vec![0.0; kl.truncation()];
    let mut out = Vec::with_capacity(n * d);
    for i in 0..n {
        let mut r = rng::stream(seed, i as u64);
        kl.draw_scores(&mut r, &mut buf);
        out.extend_from_slice(&buf[..d]);
    }
    out
}

/// Bahadur remainder over replications, in the coordinates of the first `d`
/// KL eigenfunctions (centered at the process mean).
///
/// The reference sample is centrally symmetrized (each draw paired with its
/// negative). At `u = 0` the population quantile is the center by symmetry;
/// otherwise it is solved on the reference sample.
pub fn bahadur_study(
    spec: &ProcessSpec,
    grid: &Arc<Grid>,
    d: usize,
    u: &DirectionU,
    opts: &StudyOptions,
) -> Result<BahadurStudyReport> {
    opts.validate()?;
    let kl = KlExpansion::new(spec, grid)?;
    if d == 0 || d > kl.truncation() {
        return Err(Error::DimensionOutOfRange { d, max: kl.truncation() });
    }
    let half = opts.reference_size.div_ceil(2);
    let mut ref_data = kl_scores(&kl, d, half, rng::derive_seed(opts.seed, TAG_BAHADUR, u64::MAX));
    let mirrored: Vec<f64> = ref_data.iter().map(|v| -v).collect();
    ref_data.extend(mirrored);
    let reference = ProjectedSample::from_coefficients(d, ref_data)?;
    let solve = SolveOptions { center: false, ..Default::default() };
    let q_pop = if norm2(&u.truncated(d)) == 0.0 {
        vec![0.0; d]
    } else {
        solve_projected(&reference, u, &solve)?.q
    };
    let k = opts.n_values.len();
    let raw: Vec<Result<(f64, f64)>> = (0..opts.replications * k)
        .into_par_iter()
        .map(|job| {
            let n = opts.n_values[job % k];
            let data = kl_scores(&kl, d, n, rng::derive_seed(opts.seed, TAG_BAHADUR, job as u64));
            let sample = ProjectedSample::from_coefficients(d, data)?;
            let rep = bahadur_from_projected(&sample, u, &q_pop, &reference, &solve)?;
            Ok((rep.residual_norm, rep.linear_term_norm))
        })
        .collect();
    let raw: Vec<(f64, f64)> = raw.into_iter().collect::<Result<_>>()?;
    let per_n = |pick: fn(&(f64, f64)) -> f64| -> Vec<f64> {
        (0..k)
            .map(|ni| median(&raw.iter().skip(ni).step_by(k).map(pick).collect::<Vec<_>>()))
            .collect()
    };
    let residual_norms = per_n(|r| r.0);
    let linear_term_norms = per_n(|r| r.1);
    Ok(BahadurStudyReport {
        process: spec.label(),
        d,
        direction: u.truncated(d),
        fitted_slope_residual: log_log_slope(&opts.n_values, &residual_norms),
        fitted_slope_linear: log_log_slope(&opts.n_values, &linear_term_norms),
        n_values: opts.n_values.clone(),
        residual_norms,
        linear_term_norms,
        replications: opts.replications,
        reference_size: reference.n(),
        seed: opts.seed,
        generator: rng::GENERATOR.into(),
        version: crate::VERSION.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_reference_matches_direct_sum() {
        let g = Grid::uniform(0.0, 1.0, 16).unwrap();
        let spec = ProcessSpec::brownian();
        let probes = probe_set(&spec, &g, 3, 1).unwrap();
        let n_ref = CHUNK + 37;
        let refs = reference_spatial_dists(&spec, &probes, n_ref, 9).unwrap();
        let sample = crate::simulate::sample_process(&spec, &g, n_ref, rng::derive_seed(9, TAG_REFERENCE, 0)).unwrap();
        for (j, r) in refs.iter().enumerate() {
            let exact = crate::spatial::empirical_spatial_dist(&probes.curve(j), &sample).unwrap();
            for (a, b) in r.value.values().iter().zip(exact.values()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rate_study_is_reproducible_and_bounded() {
        let g = Grid::uniform(0.0, 1.0, 12).unwrap();
        let spec = ProcessSpec::brownian();
        let probes = probe_set(&spec, &g, 4, 3).unwrap();
        let opts = StudyOptions { n_values: vec![20, 80], replications: 3, reference_size: 2000, seed: 5 };
        let a = gc_rate_study(&spec, &probes, &opts).unwrap();
        let b = gc_rate_study(&spec, &probes, &opts).unwrap();
        assert_eq!(a, b);
        for e in &a.raw {
            assert!(e.integrated_error <= e.sup_error * e.sup_error + 1e-15);
            assert!(e.integrated_error > 0.0);
        }
    }

    #[test]
    fn rejects_bad_n_values() {
        let g = Grid::uniform(0.0, 1.0, 8).unwrap();
        let spec = ProcessSpec::brownian();
        let probes = probe_set(&spec, &g, 2, 3).unwrap();
        let opts = StudyOptions::new(vec![100, 50], 2, 0);
        assert!(matches!(gc_rate_study(&spec, &probes, &opts), Err(Error::InvalidArgument(_))));
    }
}
