//! Spatial depth `1 - ||S(x)||` and DD-plot data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{check_grids, Curve, FunctionalSample};
use crate::spatial::spatial_dist_values;

/// Empirical spatial depth of `x`, in `[0, 1]`.
///
/// Equal to `1 - ||empirical_spatial_dist(x, sample)||`; a datum equal to `x`
/// contributes a zero sign rather than being removed.
pub fn spatial_depth(x: &Curve, sample: &FunctionalSample) -> Result<f64> {
    check_grids(x.grid(), sample.grid())?;
    depth_of_values(x.values(), sample)
}

fn depth_of_values(x: &[f64], sample: &FunctionalSample) -> Result<f64> {
    let s = spatial_dist_values(sample.grid(), x, sample)?;
    Ok((1.0 - sample.grid().norm(&s)).clamp(0.0, 1.0))
}

/// Depth of every query curve, in query order.
pub fn depth_profile(sample: &FunctionalSample, queries: &FunctionalSample) -> Result<Vec<f64>> {
    check_grids(sample.grid(), queries.grid())?;
    let rows: Vec<&[f64]> = queries.rows().collect();
    rows.par_iter().map(|q| depth_of_values(q, sample)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Sample1,
    Sample2,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::Sample1 => "sample1",
            Source::Sample2 => "sample2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DDPoint {
    pub depth_in_sample1: f64,
    pub depth_in_sample2: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DDPlotMetadata {
    pub n1: usize,
    pub n2: usize,
    pub grid_size: usize,
    /// Observations scored against their own sample keep their own (zero) term.
    pub self_terms_included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DDPlotData {
    pub points: Vec<DDPoint>,
    pub metadata: DDPlotMetadata,
}

impl DDPlotData {
    /// Points strictly above the diagonal (deeper in sample 2), per source.
    pub fn count_above_diagonal(&self, source: Source) -> usize {
        self.points
            .iter()
            .filter(|p| p.source == source && p.depth_in_sample2 > p.depth_in_sample1)
            .count()
    }
}

/// Depth of every pooled observation with respect to both samples.
pub fn dd_plot(sample1: &FunctionalSample, sample2: &FunctionalSample) -> Result<DDPlotData> {
    check_grids(sample1.grid(), sample2.grid())?;
    if sample1.n() == 0 || sample2.n() == 0 {
        return Err(Error::EmptySample);
    }
    let pooled = sample1.concat(sample2)?;
    let d1 = depth_profile(sample1, &pooled)?;
    let d2 = depth_profile(sample2, &pooled)?;
    let points = d1
        .into_iter()
        .zip(d2)
        .enumerate()
        .map(|(i, (a, b))| DDPoint {
            depth_in_sample1: a,
            depth_in_sample2: b,
            source: if i < sample1.n() { Source::Sample1 } else { Source::Sample2 },
        })
        .collect();
    Ok(DDPlotData {
        points,
        metadata: DDPlotMetadata {
            n1: sample1.n(),
            n2: sample2.n(),
            grid_size: sample1.dim(),
            self_terms_included: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::Grid;

    #[test]
    fn midpoint_of_symmetric_pair_has_depth_one() {
        let g = Grid::uniform(0.0, 1.0, 4).unwrap();
        let a = Curve::new(g.clone(), vec![1.0, 0.5, -2.0, 3.0]).unwrap();
        let s = FunctionalSample::from_curves(&[a.clone(), a.scaled(-1.0)]).unwrap();
        assert_eq!(spatial_depth(&Curve::zeros(g), &s).unwrap(), 1.0);
    }

    #[test]
    fn self_dd_plot_is_diagonal() {
        let g = Grid::uniform(0.0, 1.0, 3).unwrap();
        let s = FunctionalSample::from_rows(g, &[vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 0.0], vec![-1.0, 2.0, 0.5]])
            .unwrap();
        let dd = dd_plot(&s, &s).unwrap();
        assert_eq!(dd.points.len(), 6);
        assert!(dd.points.iter().all(|p| (p.depth_in_sample1 - p.depth_in_sample2).abs() <= 1e-12));
        assert_eq!(dd.points[3].source, Source::Sample2);
    }

    #[test]
    fn mismatched_grids() {
        let a = FunctionalSample::from_rows(Grid::uniform(0.0, 1.0, 2).unwrap(), &[vec![0.0, 1.0]]).unwrap();
        let b = FunctionalSample::from_rows(Grid::uniform(0.0, 2.0, 2).unwrap(), &[vec![0.0, 1.0]]).unwrap();
        assert_eq!(dd_plot(&a, &b), Err(Error::GridMismatch));
    }
}
