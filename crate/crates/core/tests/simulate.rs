use std::f64::consts::PI;

use fdspatial::simulate::{kernel_eigen, sample_process, CoefficientLaw, KernelSpec, KlExpansion, ProcessSpec};
use fdspatial::stats::{mean, variance};
use fdspatial::{Curve, Grid};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn closed_bm(k: usize) -> f64 {
    1.0 / ((k as f64 - 0.5) * PI).powi(2)
}

#[test]
fn min_kernel_eigenvalues_match_closed_form() {
    let g = Grid::uniform(0.0, 1.0, 500).unwrap();
    let b = kernel_eigen(&KernelSpec::Min, &g, 5).unwrap();
    for (k, ev) in b.eigenvalues().unwrap().iter().enumerate() {
        let c = closed_bm(k + 1);
        assert!((ev - c).abs() / c < 0.01, "k={}: {ev} vs {c}", k + 1);
    }
}

#[test]
fn brownian_variance_at_one() {
    let g = Grid::uniform(0.0, 1.0, 50).unwrap();
    let s = sample_process(&ProcessSpec::brownian(), &g, 10_000, 1).unwrap();
    let end: Vec<f64> = s.rows().map(|r| r[49]).collect();
    // 100-term truncation leaves sum_{k>100} lambda_k^2 ~ 1e-3 of variance
    assert!((variance(&end) - 1.0).abs() < 0.05);
}

#[test]
fn empirical_covariance_matches_min_kernel() {
    let g = Grid::uniform(0.0, 1.0, 11).unwrap();
    let n = 20_000;
    let s = sample_process(&ProcessSpec::brownian(), &g, n, 2).unwrap();
    for (i, j) in [(2, 5), (5, 5), (3, 10), (10, 10), (7, 9)] {
        let prod: Vec<f64> = s.rows().map(|r| r[i] * r[j]).collect();
        let cov = mean(&prod);
        let se = (variance(&prod) / n as f64).sqrt();
        let target = g.points()[i].min(g.points()[j]);
        assert!((cov - target).abs() <= 3.0 * se + 2e-3, "({i},{j}): {cov} vs {target} (se {se})");
    }
}

#[test]
fn sample_mean_approaches_process_mean() {
    let g = Grid::uniform(0.0, 1.0, 40).unwrap();
    let m = Curve::from_fn(g.clone(), |t| 1.0 + (4.0 * t).cos()).unwrap();
    for spec in [ProcessSpec::brownian(), ProcessSpec::fractional_brownian(0.7), ProcessSpec::t_process(5)] {
        let spec = spec.with_mean(m.clone());
        let n = 10_000;
        let s = sample_process(&spec, &g, n, 3).unwrap();
        let kl = KlExpansion::new(&spec, &g).unwrap();
        let trace: f64 = kl.scales().iter().map(|s| s * s).sum::<f64>() * spec.law.variance().unwrap();
        let dev = s.mean_curve().sub(&m).unwrap().sup_norm();
        assert!(dev <= 3.0 * (trace / n as f64).sqrt(), "{}: {dev}", spec.label());
    }
}

#[test]
fn t3_paths_have_heavy_tails() {
    let g = Grid::uniform(0.0, 1.0, 10).unwrap();
    let s = sample_process(&ProcessSpec::t_process(3), &g, 100_000, 4).unwrap();
    let end: Vec<f64> = s.rows().map(|r| r[9]).collect();
    let m = mean(&end);
    let m2 = end.iter().map(|v| (v - m).powi(2)).sum::<f64>() / end.len() as f64;
    let m4 = end.iter().map(|v| (v - m).powi(4)).sum::<f64>() / end.len() as f64;
    assert!(m4 / (m2 * m2) > 3.0);
}

/// Jarque-Bera p-value (asymptotic chi-square with 2 degrees of freedom).
fn jarque_bera_p(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = mean(x);
    let c = |p: i32| x.iter().map(|v| (v - m).powi(p)).sum::<f64>() / n;
    let (m2, m3, m4) = (c(2), c(3), c(4));
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    let jb = n / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
    1.0 - ChiSquared::new(2.0).unwrap().cdf(jb)
}

#[test]
fn gaussian_linear_functionals_pass_jarque_bera() {
    let g = Grid::uniform(0.0, 1.0, 60).unwrap();
    let functionals = [
        Curve::from_fn(g.clone(), |t| t).unwrap(),
        Curve::from_fn(g.clone(), |t| (7.0 * t).sin()).unwrap(),
        Curve::from_fn(g.clone(), |t| if t > 0.5 { 1.0 } else { -2.0 }).unwrap(),
    ];
    for (seed, spec) in [ProcessSpec::brownian(), ProcessSpec::fractional_brownian(0.2)].into_iter().enumerate() {
        let s = sample_process(&spec, &g, 10_000, 10 + seed as u64).unwrap();
        for l in &functionals {
            let vals: Vec<f64> = s.rows().map(|r| g.dot(r, l.values())).collect();
            assert!(jarque_bera_p(&vals) > 0.001);
        }
    }
}

#[test]
fn kl_truncation_error_matches_tail_sum() {
    let g = Grid::uniform(0.0, 1.0, 400).unwrap();
    let spec = ProcessSpec::brownian();
    let full = sample_process(&spec, &g, 4000, 5).unwrap();
    let d = 5;
    let short = sample_process(&spec.clone().with_truncation(d), &g, 4000, 5).unwrap();
    let err: Vec<f64> = full
        .rows()
        .zip(short.rows())
        .map(|(a, b)| {
            let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            g.dot(&diff, &diff)
        })
        .collect();
    let tail: f64 = (d + 1..=100).map(closed_bm).sum();
    assert!((mean(&err) - tail).abs() / tail < 0.05, "{} vs {tail}", mean(&err));
}

#[test]
fn t_process_shares_one_chi_square_per_path() {
    // with a shared W the coefficient ratio Y_1 / Y_2 is Cauchy regardless of df
    let g = Grid::uniform(0.0, 1.0, 20).unwrap();
    let kl = KlExpansion::new(&ProcessSpec::t_process(3), &g).unwrap();
    let n = 50_000;
    let scores = kl.sample_scores(n, 6);
    let t = kl.truncation();
    let s = kl.scales();
    let both_large = (0..n)
        .filter(|i| (scores[i * t] / s[0]).abs() > 3.0 && (scores[i * t + 1] / s[1]).abs() > 3.0)
        .count() as f64
        / n as f64;
    // independent t(3) coordinates would give P(|T| > 3)^2 ~ 0.0033; a shared W makes
    // large values co-occur
    assert!(both_large > 0.006, "{both_large}");
    assert_eq!(kl.law(), CoefficientLaw::StudentT { df: 3 });
}
