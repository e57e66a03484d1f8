use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::funcspace::{default_dimension, pca, Basis, FunctionalSample};
use crate::quantile::{solve_quantile, DirectionU, QuantileSolution, SolveOptions};

/// One curve of a quantile fan: the quantile for `u = c * phi_k`.
/// The median has `k = 0` and `c = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FanMember {
    pub k: usize,
    pub c: f64,
    pub solution: QuantileSolution,
}

/// Quantiles for `u = +-c phi_k` over all requested `(k, c)`, plus the median.
///
/// Without a basis, the first `d` functional principal components of the
/// sample are used (`d` defaults to `floor(sqrt(n))`, capped at `n - 1`).
pub fn quantile_fan(
    sample: &FunctionalSample,
    basis: Option<Arc<Basis>>,
    d: Option<usize>,
    ks: &[usize],
    cs: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<FanMember>> {
    let basis = match basis {
        Some(b) => b,
        None => {
            let dd = d.unwrap_or_else(|| default_dimension(sample.n()).min(sample.n().saturating_sub(1)).max(1));
            Arc::new(pca(sample, dd)?)
        }
    };
    let d = d.unwrap_or_else(|| default_dimension(sample.n()).min(basis.size()));
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > d) {
        return Err(Error::DimensionOutOfRange { d: k, max: d });
    }
    let mut requests: Vec<(usize, f64)> = vec![(0, 0.0)];
    for &k in ks {
        for &c in cs {
            requests.push((k, c));
            requests.push((k, -c));
        }
    }
    requests
        .par_iter()
        .map(|&(k, c)| {
            let u = if k == 0 { DirectionU::zero(d) } else { DirectionU::along(k, c, d)? };
            let solution = solve_quantile(sample, &u, &basis, Some(d), opts)?;
            Ok(FanMember { k, c, solution })
        })
        .collect()
}
