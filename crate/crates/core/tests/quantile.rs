use std::sync::Arc;

use fdspatial::funcspace::pca;
use fdspatial::quantile::{
    bahadur_residual, gradient, hessian, objective, quantile_fan, solve_projected, solve_quantile, DirectionU,
    ProjectedSample, SolveOptions,
};
use fdspatial::rng;
use fdspatial::simulate::{bm_basis, sample_process, ProcessSpec};
use fdspatial::{FunctionalSample, Grid};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_sample(seed: u64, n: usize, d: usize) -> ProjectedSample {
    let mut r = rng::stream(seed, 0);
    ProjectedSample::from_coefficients(d, (0..n * d).map(|_| r.sample(StandardNormal)).collect()).unwrap()
}

#[test]
fn midpoint_convexity() {
    let s = random_sample(1, 25, 4);
    let u = DirectionU::new(vec![0.2, -0.1, 0.3, 0.0]).unwrap();
    let mut r = rng::stream(2, 0);
    for _ in 0..100 {
        let a: Vec<f64> = (0..4).map(|_| r.sample::<f64, _>(StandardNormal) * 2.0).collect();
        let b: Vec<f64> = (0..4).map(|_| r.sample::<f64, _>(StandardNormal) * 2.0).collect();
        let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let lhs = objective(&m, &s, &u).unwrap();
        let rhs = 0.5 * (objective(&a, &s, &u).unwrap() + objective(&b, &s, &u).unwrap());
        assert!(lhs <= rhs + 1e-12);
    }
}

#[test]
fn gradient_is_bounded_and_hessian_is_psd() {
    let g = Grid::uniform(0.0, 1.0, 60).unwrap();
    let sample = sample_process(&ProcessSpec::brownian(), &g, 80, 3).unwrap();
    let basis = Arc::new(bm_basis(&g, 8).unwrap());
    let ps = ProjectedSample::new(&sample, &basis, 8).unwrap();
    let mut r = rng::stream(4, 0);
    for _ in 0..50 {
        let q: Vec<f64> = (0..8).map(|_| r.sample::<f64, _>(StandardNormal) * 0.5).collect();
        let gr = gradient(&q, &ps, &DirectionU::zero(8)).unwrap();
        assert!(gr.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1.0 + 1e-12);
        let h = hessian(&q, &ps).unwrap();
        assert!(h.symmetric_eigenvalues().min() >= -1e-10);
    }
}

#[test]
fn finite_difference_oracles() {
    let mut r = rng::stream(5, 0);
    for case in 0..50 {
        let s = random_sample(100 + case, 15, 3);
        let u = DirectionU::new(vec![0.3, 0.1, -0.4]).unwrap();
        let q: Vec<f64> = (0..3).map(|_| r.random_range(-1.5..1.5)).collect();
        let g = gradient(&q, &s, &u).unwrap();
        let h = hessian(&q, &s).unwrap();
        let eps = 1e-6;
        let mut fd_h = DMatrix::zeros(3, 3);
        for k in 0..3 {
            let mut a = q.clone();
            let mut b = q.clone();
            a[k] += eps;
            b[k] -= eps;
            let fd = (objective(&a, &s, &u).unwrap() - objective(&b, &s, &u).unwrap()) / (2.0 * eps);
            assert!((fd - g[k]).abs() <= 1e-5 * g.iter().map(|v| v.abs()).fold(1e-3, f64::max));
            let (ga, gb) = (gradient(&a, &s, &u).unwrap(), gradient(&b, &s, &u).unwrap());
            for j in 0..3 {
                fd_h[(j, k)] = (ga[j] - gb[j]) / (2.0 * eps);
            }
        }
        assert!((&fd_h - &h).norm() <= 1e-4 * h.norm());
    }
}

#[test]
fn one_dimensional_quantiles_bracket_order_statistics() {
    let n = 1001;
    let s = random_sample(6, n, 1);
    let mut sorted = s.as_flat().to_vec();
    sorted.sort_by(f64::total_cmp);
    let opts = SolveOptions { center: false, ..Default::default() };
    for tau in [0.1, 0.3, 0.5, 0.8, 0.95] {
        let q = solve_projected(&s, &DirectionU::new(vec![2.0 * tau - 1.0]).unwrap(), &opts).unwrap().q[0];
        let k = n as f64 * tau;
        assert!(sorted[k.floor() as usize - 1] <= q && q <= sorted[(k.ceil() as usize).min(n - 1)]);
    }
}

#[test]
fn affine_and_orthogonal_equivariance() {
    let s = random_sample(7, 40, 5);
    let u = DirectionU::new(vec![0.1, 0.5, -0.2, 0.0, 0.3]).unwrap();
    let opts = SolveOptions::default();
    let q = solve_projected(&s, &u, &opts).unwrap().q;
    let shift = [1.0, -2.0, 0.5, 3.0, 0.0];
    let qa = solve_projected(&s.affine(0.4, &shift), &u, &opts).unwrap().q;
    for k in 0..5 {
        assert!((qa[k] - (0.4 * q[k] + shift[k])).abs() < 1e-6);
    }
    // solving on {A X_i} with direction u gives A Q(A^T u)
    let mut r = rng::stream(8, 0);
    let a = DMatrix::from_fn(5, 5, |_, _| r.sample::<f64, _>(StandardNormal)).qr().q();
    let apply = |m: &DMatrix<f64>, v: &[f64]| -> Vec<f64> {
        (m * nalgebra::DVector::from_column_slice(v)).iter().copied().collect()
    };
    let rotated: Vec<f64> = s.rows().flat_map(|row| apply(&a, row)).collect();
    let rs = ProjectedSample::from_coefficients(5, rotated).unwrap();
    let q_rot = solve_projected(&rs, &u, &opts).unwrap().q;
    let at_u = DirectionU::new(apply(&a.transpose(), u.coefficients())).unwrap();
    let expected = apply(&a, &solve_projected(&s, &at_u, &opts).unwrap().q);
    for (x, y) in q_rot.iter().zip(&expected) {
        assert!((x - y).abs() < 1e-6);
    }
}

#[test]
fn brownian_fan_ordering() {
    let g = Grid::uniform(0.0, 1.0, 100).unwrap();
    for (n, seed) in [(50, 9), (2500, 10)] {
        let s = sample_process(&ProcessSpec::brownian(), &g, n, seed).unwrap();
        let cs = [0.0, 0.25, 0.5, 0.75];
        let fan = quantile_fan(&s, None, None, &[1, 2, 3], &cs, &SolveOptions::default()).unwrap();
        let basis = fan[0].solution.coefficients.basis().clone();
        let median = &fan[0].solution.curve;
        assert!(median.sup_norm() < 0.5, "n={n}: {}", median.sup_norm());
        for k in 1..=3 {
            let phi = basis.function(k - 1);
            let mut along: Vec<(f64, f64)> = fan
                .iter()
                .filter(|m| m.k == k)
                .map(|m| (m.c, m.solution.curve.sub(median).unwrap().inner_product(&phi).unwrap()))
                .collect();
            along.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert!(along.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-8));
            // opposite signs on opposite sides, c = 0 reproduces the median
            for (c, score) in &along {
                if *c == 0.0 {
                    assert!(score.abs() < 1e-8);
                } else {
                    assert!(c.signum() == score.signum());
                }
            }
        }
    }
}

#[test]
fn antisymmetry_on_symmetrized_sample() {
    let g = Grid::uniform(0.0, 1.0, 40).unwrap();
    let s = sample_process(&ProcessSpec::brownian(), &g, 60, 11).unwrap();
    let neg = s.affine(-1.0, &fdspatial::Curve::zeros(g.clone())).unwrap();
    let sym = s.concat(&neg).unwrap();
    let basis = Arc::new(pca(&sym, 10).unwrap());
    let opts = SolveOptions { center: false, ..Default::default() };
    for k in 1..=3 {
        let up = solve_quantile(&sym, &DirectionU::along(k, 0.6, 10).unwrap(), &basis, Some(10), &opts).unwrap();
        let dn = solve_quantile(&sym, &DirectionU::along(k, -0.6, 10).unwrap(), &basis, Some(10), &opts).unwrap();
        assert!(up.curve.add(&dn.curve).unwrap().sup_norm() < 1e-6);
    }
}

#[test]
fn bahadur_remainder_shrinks_faster_than_linear_term() {
    let g = Grid::uniform(0.0, 1.0, 50).unwrap();
    let spec = ProcessSpec::brownian();
    let basis = Arc::new(bm_basis(&g, 3).unwrap());
    let reference = sample_process(&spec, &g, 100_000, 12).unwrap();
    let n_values = [100, 400, 1600];
    let mut med_res = Vec::new();
    let mut med_lin = Vec::new();
    for (i, &n) in n_values.iter().enumerate() {
        let mut res = Vec::new();
        let mut lin = Vec::new();
        for rep in 0..30 {
            let s = sample_process(&spec, &g, n, rng::derive_seed(13, i as u64, rep)).unwrap();
            let b = bahadur_residual(&s, &DirectionU::zero(3), &basis, 3, &reference).unwrap();
            res.push(b.residual_norm);
            lin.push(b.linear_term_norm * (n as f64).sqrt());
        }
        med_res.push(fdspatial::stats::median(&res));
        med_lin.push(fdspatial::stats::median(&lin));
    }
    assert!(med_res.windows(2).all(|w| w[1] < w[0]), "{med_res:?}");
    // sqrt(n) * linear term stays on the CLT scale
    let spread = med_lin.iter().cloned().fold(0.0, f64::max) / med_lin.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1.5, "{med_lin:?}");
}

#[test]
fn sample_of_one_returns_the_datum() {
    let g = Grid::uniform(0.0, 1.0, 10).unwrap();
    let s = FunctionalSample::from_rows(g.clone(), &[(0..10).map(|i| (i as f64).sin()).collect()]).unwrap();
    let basis = Arc::new(bm_basis(&g, 5).unwrap());
    let sol = solve_quantile(&s, &DirectionU::zero(5), &basis, Some(5), &SolveOptions::default()).unwrap();
    assert!(sol.curve.sub(&s.curve(0)).unwrap().sup_norm() < 1e-10);
}
