use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{Basis, FunctionalSample};
use crate::linalg::{norm2, sym_inverse_floored};
use crate::quantile::objective::hessian_raw;
use crate::quantile::{solve_projected, DirectionU, ProjectedSample, SolveOptions};

/// Size of the Bahadur remainder
/// `R_n = (Q_hat - Q_n) + n^{-1} sum_i J^{-1} (SGN(Q_n - X_i) - u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BahadurReport {
    pub residual_norm: f64,
    /// Norm of the linear term `n^{-1} sum_i J^{-1} score_i`.
    pub linear_term_norm: f64,
    pub n: usize,
    pub d: usize,
    /// Size of the sample standing in for the population.
    pub reference_size: usize,
}

/// Bahadur remainder with population quantities taken from a large reference sample.
///
/// Both samples are projected onto the first `d` basis functions and solved
/// without centering.
pub fn bahadur_residual(
    sample: &FunctionalSample,
    u: &DirectionU,
    basis: &Arc<Basis>,
    d: usize,
    reference: &FunctionalSample,
) -> Result<BahadurReport> {
    let ps = ProjectedSample::new(sample, basis, d)?;
    let pr = ProjectedSample::new(reference, basis, d)?;
    let opts = SolveOptions { center: false, ..Default::default() };
    let q_ref = solve_projected(&pr, u, &opts)?.q;
    bahadur_from_projected(&ps, u, &q_ref, &pr, &opts)
}

/// Coefficient-space version with a given population quantile `q_pop`; the
/// Hessian at `q_pop` is averaged over `reference`.
pub fn bahadur_from_projected(
    sample: &ProjectedSample,
    u: &DirectionU,
    q_pop: &[f64],
    reference: &ProjectedSample,
    opts: &SolveOptions,
) -> Result<BahadurReport> {
    let d = sample.dim();
    let uu = u.truncated(d);
    let j = hessian_raw(q_pop, reference);
    let (j_inv, _, condition) = sym_inverse_floored(&j, 1e-10);
    if !(condition <= 1e12) {
        return Err(Error::IllConditioned {
            condition,
            suggestion: "reduce d or enlarge the reference sample".into(),
        });
    }
    let opts = SolveOptions { center: false, ..opts.clone() };
    let q_hat = solve_projected(sample, u, &opts)?.q;

    let mut mean_score = vec![0.0; d];
    for row in sample.rows() {
        let diff: Vec<f64> = q_pop.iter().zip(row).map(|(a, b)| a - b).collect();
        let r = norm2(&diff);
        if r > 0.0 {
            mean_score.iter_mut().zip(&diff).for_each(|(m, v)| *m += v / r);
        }
    }
    let inv_n = 1.0 / sample.n() as f64;
    mean_score.iter_mut().zip(&uu).for_each(|(m, ui)| *m = *m * inv_n - ui);
    let linear = &j_inv * nalgebra::DVector::from_vec(mean_score);
    let residual: Vec<f64> = (0..d).map(|k| q_hat[k] - q_pop[k] + linear[k]).collect();
    Ok(BahadurReport {
        residual_norm: norm2(&residual),
        linear_term_norm: linear.norm(),
        n: sample.n(),
        d,
        reference_size: reference.n(),
    })
}
