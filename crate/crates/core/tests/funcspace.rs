use std::sync::Arc;

use fdspatial::funcspace::io::{read_sample, write_sample};
use fdspatial::funcspace::{pca, project, reconstruct, Basis, Coefficients};
use fdspatial::simulate::{bm_basis, bm_eigenpair, sample_process, ProcessSpec};
use fdspatial::{Curve, FunctionalSample, Grid};
use proptest::prelude::*;

fn grid250() -> Arc<Grid> {
    Grid::uniform(0.0, 1.0, 250).unwrap()
}

#[test]
fn closed_form_eigenfunctions_under_quadrature() {
    let g = grid250();
    let (_, p1) = bm_eigenpair(1, &g).unwrap();
    let (_, p2) = bm_eigenpair(2, &g).unwrap();
    assert!((p1.inner_product(&p1).unwrap() - 1.0).abs() < 1e-4);
    assert!((p1.norm() - 1.0).abs() < 1e-4);
    // trapezoid error of 2 sin^2(t pi / 2) with h = 1/249, computed independently
    let h: f64 = 1.0 / 249.0;
    let trap: f64 = (0..250)
        .map(|i| {
            let t = i as f64 * h;
            let w = if i == 0 || i == 249 { h / 2.0 } else { h };
            w * 2.0 * (std::f64::consts::FRAC_PI_2 * t).sin().powi(2)
        })
        .sum();
    assert!((p1.inner_product(&p1).unwrap() - trap).abs() < 1e-12);
    assert!(p1.inner_product(&p2).unwrap().abs() < 1e-4);
}

#[test]
fn constant_curve_norm() {
    let g = Grid::uniform(0.0, 1.0, 17).unwrap();
    let c = Curve::from_fn(g, |_| -2.5).unwrap();
    assert!((c.norm() - 2.5).abs() < 1e-12);
}

#[test]
fn projection_of_basis_element_and_round_trip() {
    let g = grid250();
    let b = Arc::new(bm_basis(&g, 10).unwrap());
    let phi2 = b.function(1);
    let c = project(&phi2, &b, 3).unwrap();
    for (v, e) in c.values().iter().zip([0.0, 1.0, 0.0]) {
        assert!((v - e).abs() < 1e-6);
    }
    assert!(project(&phi2, &b, 1).unwrap().values()[0].abs() < 1e-6);
    let coefs = Coefficients::new(vec![0.3, -1.2, 0.0, 2.0, 0.7], b.clone()).unwrap();
    let back = project(&reconstruct(&coefs), &b, 5).unwrap();
    for (a, e) in back.values().iter().zip(coefs.values()) {
        assert!((a - e).abs() < 1e-8);
    }
}

#[test]
fn truncation_error_decreases_with_d() {
    let g = grid250();
    let x = sample_process(&ProcessSpec::brownian(), &g, 1, 5).unwrap().curve(0);
    let b = Arc::new(bm_basis(&g, 50).unwrap());
    let errs: Vec<f64> = (1..=50)
        .map(|d| x.sub(&reconstruct(&project(&x, &b, d).unwrap())).unwrap().norm())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(errs[49] < errs[0]);
}

#[test]
fn pca_of_brownian_sample() {
    let g = grid250();
    let s = sample_process(&ProcessSpec::brownian(), &g, 2500, 2024).unwrap();
    let b = pca(&s, 5).unwrap();
    let frac = b.explained_variance_fractions().unwrap();
    for (f, target) in frac.iter().zip([0.811, 0.09, 0.0324]) {
        assert!((f - target).abs() <= 0.01, "{f} vs {target}");
    }
    let ev = b.eigenvalues().unwrap();
    for k in 0..3 {
        let closed = 1.0 / ((k as f64 + 0.5) * std::f64::consts::PI).powi(2);
        assert!((ev[k] - closed).abs() / closed < 0.1, "k={k}: {} vs {closed}", ev[k]);
    }
    // first component is +-phi_1
    let (_, p1) = bm_eigenpair(1, &g).unwrap();
    assert!(b.function(0).inner_product(&p1).unwrap().abs() > 0.99);
}

fn curve_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, d)
}

proptest! {
    #[test]
    fn cauchy_schwarz(a in curve_strategy(12), b in curve_strategy(12)) {
        let g = Grid::from_points((0..12).map(|i| (i as f64).powf(1.3)).collect()).unwrap();
        let a = Curve::new(g.clone(), a).unwrap();
        let b = Curve::new(g, b).unwrap();
        let ip = a.inner_product(&b).unwrap();
        prop_assert!(ip.abs() <= a.norm() * b.norm() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn parseval_and_contraction(x in curve_strategy(40), d in 1usize..=20) {
        let g = Grid::uniform(0.0, 1.0, 40).unwrap();
        let b = Arc::new(bm_basis(&g, 20).unwrap());
        let x = Curve::new(g, x).unwrap();
        let c = project(&x, &b, d).unwrap();
        let r = reconstruct(&c);
        let sum_sq: f64 = c.values().iter().map(|v| v * v).sum();
        prop_assert!((r.norm().powi(2) - sum_sq).abs() <= 1e-8 * (1.0 + sum_sq));
        prop_assert!(r.norm() <= x.norm() + 1e-8);
    }

    #[test]
    fn csv_round_trip(rows in proptest::collection::vec(curve_strategy(6), 1..8), weighted in any::<bool>()) {
        let g = if weighted {
            Grid::custom(vec![0.0, 0.5, 0.7, 1.1, 2.0, 3.5], vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap()
        } else {
            Grid::uniform(-1.0, 2.0, 6).unwrap()
        };
        let s = FunctionalSample::from_rows(g, &rows).unwrap();
        let mut buf = Vec::new();
        write_sample(&mut buf, &s).unwrap();
        let back = read_sample(buf.as_slice()).unwrap();
        prop_assert_eq!(back.as_flat(), s.as_flat());
        prop_assert_eq!(back.grid().points(), s.grid().points());
        prop_assert_eq!(back.grid().weights(), s.grid().weights());
    }

    #[test]
    fn pca_basis_is_orthonormal(seed in 0u64..1000) {
        let g = Grid::uniform(0.0, 1.0, 30).unwrap();
        let s = sample_process(&ProcessSpec::brownian(), &g, 12, seed).unwrap();
        let b = pca(&s, 11).unwrap();
        let funcs: Vec<Vec<f64>> = (0..11).map(|k| b.function_values(k).to_vec()).collect();
        prop_assert!(Basis::new(g, funcs, None).is_ok());
    }
}
