//! Spatial signs and spatial distributions.
//!
//! In a Hilbert space the spatial sign of `x` is `x / ||x||` (zero at the
//! origin) and the spatial distribution at `x` is the mean spatial sign of
//! `x - X`. The `l_p` sign for `1 < p < inf` is the norming functional
//! `sign(x_i) |x_i|^{p-1} / ||x||_p^{p-1}`, available for finite coefficient
//! vectors.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::funcspace::{check_grids, Curve, FunctionalSample, Grid};

/// Relative threshold below which a difference counts as zero:
/// `||x|| <= ZERO_TOL * (1 + reference)`.
pub const ZERO_TOL: f64 = 1e-12;

#[inline]
pub(crate) fn is_zero(norm: f64, reference: f64) -> bool {
    norm <= ZERO_TOL * (1.0 + reference)
}

/// Spatial sign of a curve.
pub fn sgn_hilbert(x: &Curve) -> Curve {
    let n = x.norm();
    if is_zero(n, 0.0) {
        Curve::zeros(x.grid().clone())
    } else {
        x.scaled(1.0 / n)
    }
}

/// Spatial sign in `l_p`, returned as a dual (`l_q`) vector of unit norm.
pub fn sgn_lp(x: &[f64], p: f64) -> Result<Vec<f64>> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Ok(vec![0.0; x.len()]);
    }
    // work with x / max|x| to keep the powers in range
    let norm_p = x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p);
    let denom = norm_p.powf(p - 1.0);
    Ok(x
        .iter()
        .map(|v| v.signum() * (v.abs() / scale).powf(p - 1.0) / denom)
        .collect())
}

/// `l_p` norm of a finite vector.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v.abs() / scale).powf(p)).sum::<f64>().powf(1.0 / p)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpatialRepresentation {
    /// Riesz representer in the Hilbert case.
    Hilbert(Curve),
    /// Dual coefficient vector in the `l_p` case, with the dual exponent `q`.
    Dual { values: Vec<f64>, q: f64 },
}

/// Value of a spatial distribution at one point, with its norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialDistValue {
    representation: SpatialRepresentation,
    norm: f64,
}

impl SpatialDistValue {
    pub fn hilbert(curve: Curve) -> SpatialDistValue {
        let norm = curve.norm();
        SpatialDistValue { representation: SpatialRepresentation::Hilbert(curve), norm }
    }

    pub fn representation(&self) -> &SpatialRepresentation {
        &self.representation
    }

    /// The representer curve (Hilbert case only).
    pub fn curve(&self) -> Option<&Curve> {
        match &self.representation {
            SpatialRepresentation::Hilbert(c) => Some(c),
            SpatialRepresentation::Dual { .. } => None,
        }
    }

    pub fn values(&self) -> &[f64] {
        match &self.representation {
            SpatialRepresentation::Hilbert(c) => c.values(),
            SpatialRepresentation::Dual { values, .. } => values,
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }
}

/// Mean spatial sign of `x - X_i` over raw grid values; coincident data add zero.
pub(crate) fn spatial_sum<'a>(
    grid: &Grid,
    x: &[f64],
    rows: impl Iterator<Item = &'a [f64]>,
    out: &mut [f64],
) -> usize {
    let x_norm = grid.norm(x);
    let mut diff = vec![0.0; x.len()];
    let mut count = 0;
    for row in rows {
        count += 1;
        diff.iter_mut().zip(x.iter().zip(row)).for_each(|(d, (a, b))| *d = a - b);
        let r = grid.norm(&diff);
        if is_zero(r, x_norm.max(grid.norm(row))) {
            continue;
        }
        let inv = 1.0 / r;
        out.iter_mut().zip(&diff).for_each(|(o, d)| *o += d * inv);
    }
    count
}

/// `n^{-1} sum_i SGN(x - X_i)`.
pub fn empirical_spatial_dist(x: &Curve, sample: &FunctionalSample) -> Result<SpatialDistValue> {
    check_grids(x.grid(), sample.grid())?;
    let values = spatial_dist_values(sample.grid(), x.values(), sample)?;
    Ok(SpatialDistValue::hilbert(Curve::new(x.grid().clone(), values)?))
}

pub(crate) fn spatial_dist_values(
    grid: &Arc<Grid>,
    x: &[f64],
    sample: &FunctionalSample,
) -> Result<Vec<f64>> {
    if sample.n() == 0 {
        return Err(Error::EmptySample);
    }
    let mut acc = vec![0.0; x.len()];
    let n = spatial_sum(grid, x, sample.rows(), &mut acc);
    let inv = 1.0 / n as f64;
    acc.iter_mut().for_each(|v| *v *= inv);
    Ok(acc)
}

/// Empirical spatial distribution in `l_p` for finite coefficient vectors.
pub fn empirical_spatial_dist_lp(x: &[f64], points: &[Vec<f64>], p: f64) -> Result<SpatialDistValue> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut acc = vec![0.0; x.len()];
    for pt in points {
        if pt.len() != x.len() {
            return Err(Error::InvalidArgument("dimension mismatch".into()));
        }
        let diff: Vec<f64> = x.iter().zip(pt).map(|(a, b)| a - b).collect();
        if is_zero(lp_norm(&diff, p), lp_norm(x, p).max(lp_norm(pt, p))) {
            continue;
        }
        for (a, s) in acc.iter_mut().zip(sgn_lp(&diff, p)?) {
            *a += s;
        }
    }
    let inv = 1.0 / points.len() as f64;
    acc.iter_mut().for_each(|v| *v *= inv);
    let q = p / (p - 1.0);
    let norm = lp_norm(&acc, q);
    Ok(SpatialDistValue { representation: SpatialRepresentation::Dual { values: acc, q }, norm })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityEntry {
    /// `<S(x) - S(y), x - y>`.
    pub value: f64,
    /// `x` and `y` coincide; excluded from the violation count.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub entries: Vec<MonotonicityEntry>,
    pub violations: usize,
}

/// Checks strict monotonicity of the empirical spatial distribution over pairs.
pub fn monotonicity_probe(
    sample: &FunctionalSample,
    pairs: &[(Curve, Curve)],
) -> Result<MonotonicityReport> {
    let mut entries = Vec::with_capacity(pairs.len());
    let mut violations = 0;
    for (x, y) in pairs {
        let diff = x.sub(y)?;
        let degenerate = is_zero(diff.norm(), x.norm().max(y.norm()));
        let value = if degenerate {
            0.0
        } else {
            let sx = empirical_spatial_dist(x, sample)?;
            let sy = empirical_spatial_dist(y, sample)?;
            let ds = sx.curve().expect("hilbert").sub(sy.curve().expect("hilbert"))?;
            ds.inner_product(&diff)?
        };
        if !degenerate && value <= 0.0 {
            violations += 1;
        }
        entries.push(MonotonicityEntry { value, degenerate });
    }
    Ok(MonotonicityReport { entries, violations })
}

/// Sums `sum_i SGN(x_j - X_i)` for many probes at once, row-major `m x D`.
///
/// Distances come from the expansion `|x|^2 + |X|^2 - 2<x, X>`, so pairs closer
/// than about `1e-7` times their scale count as coincident. Meant for Monte
/// Carlo studies; [`empirical_spatial_dist`] is the exact path.
pub(crate) fn spatial_sum_batch(grid: &Grid, probes: &[f64], m: usize, data: &[f64], n: usize) -> Vec<f64> {
    use nalgebra::DMatrix;
    let d = grid.len();
    let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let p_raw = DMatrix::from_row_slice(m, d, probes);
    let x_raw = DMatrix::from_row_slice(n, d, data);
    let p_s = DMatrix::from_fn(m, d, |i, k| p_raw[(i, k)] * sw[k]);
    let x_s = DMatrix::from_fn(n, d, |i, k| x_raw[(i, k)] * sw[k]);
    let pn: Vec<f64> = (0..m).map(|i| p_s.row(i).norm_squared()).collect();
    let xn: Vec<f64> = (0..n).map(|i| x_s.row(i).norm_squared()).collect();
    let mut inv = &p_s * x_s.transpose();
    let mut row_sums = vec![0.0; m];
    for j in 0..n {
        for i in 0..m {
            let scale = pn[i] + xn[j];
            let r2 = scale - 2.0 * inv[(i, j)];
            let v = if r2 <= 64.0 * f64::EPSILON * scale { 0.0 } else { 1.0 / r2.sqrt() };
            inv[(i, j)] = v;
            row_sums[i] += v;
        }
    }
    let mut out = inv * x_raw;
    for i in 0..m {
        for k in 0..d {
            out[(i, k)] = row_sums[i] * p_raw[(i, k)] - out[(i, k)];
        }
    }
    let mut flat = Vec::with_capacity(m * d);
    for i in 0..m {
        flat.extend(out.row(i).iter());
    }
    flat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::Grid;

    fn grid3() -> Arc<Grid> {
        Grid::uniform(0.0, 1.0, 3).unwrap()
    }

    #[test]
    fn sign_of_zero_is_zero() {
        let z = Curve::zeros(grid3());
        assert_eq!(sgn_hilbert(&z).norm(), 0.0);
    }

    #[test]
    fn sign_is_homogeneous() {
        let x = Curve::new(grid3(), vec![1.0, -2.0, 0.5]).unwrap();
        let a = sgn_hilbert(&x.scaled(5.0));
        let b = sgn_hilbert(&x);
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_sign_reduces_for_p2_and_unit_vector() {
        let x = [3.0, -4.0];
        let s = sgn_lp(&x, 2.0).unwrap();
        assert!((s[0] - 0.6).abs() < 1e-15 && (s[1] + 0.8).abs() < 1e-15);
        for p in [1.5, 3.0, 4.0] {
            assert_eq!(sgn_lp(&[1.0, 0.0, 0.0], p).unwrap(), vec![1.0, 0.0, 0.0]);
        }
        assert_eq!(sgn_lp(&[0.0, 0.0], 3.0).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(sgn_lp(&x, 1.0), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn batch_matches_exact_path() {
        let g = Grid::from_points(vec![0.0, 0.1, 0.35, 0.6, 1.0]).unwrap();
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|i| (0..5).map(|k| ((i * 5 + k) as f64 * 0.37).sin()).collect())
            .collect();
        let s = FunctionalSample::from_rows(g.clone(), &rows).unwrap();
        let probes = [rows[2].clone(), vec![0.1, -0.2, 0.3, 0.0, 0.5]].concat();
        let batch = spatial_sum_batch(&g, &probes, 2, s.as_flat(), 7);
        for j in 0..2 {
            let exact = spatial_dist_values(&g, &probes[j * 5..(j + 1) * 5], &s).unwrap();
            for k in 0..5 {
                assert!((batch[j * 5 + k] / 7.0 - exact[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_point_sample() {
        let g = grid3();
        let a = Curve::new(g.clone(), vec![1.0, 2.0, 3.0]).unwrap();
        let b = Curve::new(g.clone(), vec![-1.0, 0.0, 2.0]).unwrap();
        let s = FunctionalSample::from_curves(&[a.clone(), b.clone()]).unwrap();
        let mid = a.add(&b).unwrap().scaled(0.5);
        assert!(empirical_spatial_dist(&mid, &s).unwrap().norm() < 1e-15);
        let at_a = empirical_spatial_dist(&a, &s).unwrap();
        assert!((at_a.norm() - 0.5).abs() < 1e-15);
        let expected = sgn_hilbert(&a.sub(&b).unwrap()).scaled(0.5);
        for (u, v) in at_a.values().iter().zip(expected.values()) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_pair_is_degenerate() {
        let g = grid3();
        let a = Curve::new(g.clone(), vec![1.0, 2.0, 3.0]).unwrap();
        let s = FunctionalSample::from_curves(std::slice::from_ref(&a)).unwrap();
        let r = monotonicity_probe(&s, &[(a.clone(), a)]).unwrap();
        assert!(r.entries[0].degenerate);
        assert_eq!(r.entries[0].value, 0.0);
        assert_eq!(r.violations, 0);
    }
}
