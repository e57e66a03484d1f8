use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::quantile::{DirectionU, ProjectedSample};
use crate::spatial::is_zero;

fn check(q: &[f64], sample: &ProjectedSample) -> Result<()> {
    if q.len() != sample.dim() {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, sample has {}",
            q.len(),
            sample.dim()
        )));
    }
    Ok(())
}

/// `n^{-1} sum_i (||Q - X_i|| - ||X_i||) - <u, Q>`.
pub fn objective(q: &[f64], sample: &ProjectedSample, u: &DirectionU) -> Result<f64> {
    check(q, sample)?;
    Ok(objective_raw(q, sample, &u.truncated(q.len())))
}

pub(crate) fn objective_raw(q: &[f64], sample: &ProjectedSample, u: &[f64]) -> f64 {
    let mut sum = 0.0;
    for row in sample.rows() {
        let mut dist = 0.0;
        let mut own = 0.0;
        for (a, b) in q.iter().zip(row) {
            dist += (a - b) * (a - b);
            own += b * b;
        }
        sum += dist.sqrt() - own.sqrt();
    }
    sum / sample.n() as f64 - crate::linalg::dot(u, q)
}

/// Index of a datum coinciding with `q`, if any.
pub(crate) fn coincident_datum(q: &[f64], sample: &ProjectedSample) -> Option<usize> {
    let qn = norm2(q);
    sample.rows().position(|row| {
        let r = q.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        is_zero(r, qn.max(norm2(row)))
    })
}

/// `n^{-1} sum_i (Q - X_i) / ||Q - X_i|| - u`.
///
/// Fails with [`Error::CoincidentDatum`] when `Q` sits on a data point, where
/// the objective is not differentiable.
pub fn gradient(q: &[f64], sample: &ProjectedSample, u: &DirectionU) -> Result<Vec<f64>> {
    check(q, sample)?;
    if let Some(index) = coincident_datum(q, sample) {
        return Err(Error::CoincidentDatum { index });
    }
    let u = u.truncated(q.len());
    let mut g = vec![0.0; q.len()];
    let mut diff = vec![0.0; q.len()];
    for row in sample.rows() {
        diff.iter_mut().zip(q.iter().zip(row)).for_each(|(d, (a, b))| *d = a - b);
        let r = norm2(&diff);
        g.iter_mut().zip(&diff).for_each(|(gi, di)| *gi += di / r);
    }
    let inv = 1.0 / sample.n() as f64;
    Ok(g.iter().zip(&u).map(|(gi, ui)| gi * inv - ui).collect())
}

/// `n^{-1} sum_i (I / r_i - w_i w_i^T / r_i^3)` with `w_i = Q - X_i`, `r_i = ||w_i||`.
pub fn hessian(q: &[f64], sample: &ProjectedSample) -> Result<DMatrix<f64>> {
    check(q, sample)?;
    if let Some(index) = coincident_datum(q, sample) {
        return Err(Error::CoincidentDatum { index });
    }
    Ok(hessian_raw(q, sample))
}

pub(crate) fn hessian_raw(q: &[f64], sample: &ProjectedSample) -> DMatrix<f64> {
    let d = q.len();
    let n = sample.n();
    let mut scaled = DMatrix::<f64>::zeros(n, d);
    let mut inv_sum = 0.0;
    for (i, row) in sample.rows().enumerate() {
        let r = q.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        inv_sum += 1.0 / r;
        let s = r.powf(-1.5);
        for j in 0..d {
            scaled[(i, j)] = (q[j] - row[j]) * s;
        }
    }
    let inv_n = 1.0 / n as f64;
    let mut h = DMatrix::<f64>::identity(d, d) * (inv_sum * inv_n);
    h.gemm_tr(-inv_n, &scaled, &scaled, 1.0);
    // exact symmetry
    let ht = h.transpose();
    (h + ht) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(rows: &[&[f64]]) -> ProjectedSample {
        let d = rows[0].len();
        ProjectedSample::from_coefficients(d, rows.iter().flat_map(|r| r.iter().copied()).collect())
            .unwrap()
    }

    #[test]
    fn objective_special_values() {
        let s = sample(&[&[1.0, 2.0]]);
        let u = DirectionU::zero(2);
        assert!((objective(&[1.0, 2.0], &s, &u).unwrap() + 5f64.sqrt()).abs() < 1e-15);
        let s = sample(&[&[1.0, 2.0], &[-3.0, 0.5], &[0.0, 7.0]]);
        assert_eq!(objective(&[0.0, 0.0], &s, &u).unwrap(), 0.0);
    }

    #[test]
    fn gradient_points_toward_symmetric_pair() {
        let s = sample(&[&[-1.0, 0.0], &[1.0, 0.0]]);
        let g = gradient(&[3.0, 0.0], &s, &DirectionU::zero(2)).unwrap();
        // the descent direction -g points back toward the segment
        assert!(g[0] > 0.0 && g[1].abs() < 1e-15);
        assert!((g[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_point_hessian_closed_form() {
        let r = 2.5;
        let s = sample(&[&[0.0, 0.0, 0.0]]);
        let h = hessian(&[r, 0.0, 0.0], &s).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0 / r, 1.0 / r]));
        assert!((h - expected).amax() < 1e-15);
    }

    #[test]
    fn coincident_point_is_signalled() {
        let s = sample(&[&[1.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(
            gradient(&[1.0, 1.0], &s, &DirectionU::zero(2)),
            Err(Error::CoincidentDatum { index: 0 })
        );
        assert_eq!(hessian(&[0.0, 0.0], &s), Err(Error::CoincidentDatum { index: 1 }));
    }

    #[test]
    fn direction_must_be_inside_ball() {
        assert!(matches!(DirectionU::new(vec![0.6, 0.8]), Err(Error::DirectionOutsideBall { .. })));
        assert!(DirectionU::new(vec![0.6, 0.79]).is_ok());
    }
}
