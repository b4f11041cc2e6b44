mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{convergence_order, fixture, integrate_gk};
use nlslab::grid::{apply_h, make_grid, radial_derivative, RadialField, FOUR_PI};
use nlslab::spectral::{check_assumptions, project_continuous, solve_ground, solve_ground_sampled, PotentialSpec};
use nlslab::LabError;

#[test]
fn gaussian_moment_matches_adaptive_quadrature() {
    let grid = make_grid(40.0, 4000, 1.0).unwrap();
    let g: Vec<f64> = grid.nodes().iter().map(|r| (-r * r).exp()).collect();
    let ours = grid.integrate(&g).unwrap() / FOUR_PI;
    let oracle = integrate_gk(|r| r * r * (-r * r).exp(), 0.0, 40.0, 1e-14);
    assert!((oracle - PI.sqrt() / 4.0).abs() < 1e-12);
    assert!((ours - oracle).abs() < 1e-8, "{ours} vs {oracle}");
}

#[test]
fn exponential_integral_matches_closed_form() {
    let grid = make_grid(40.0, 4000, 1.0).unwrap();
    let g: Vec<f64> = grid.nodes().iter().map(|r| (-2.0 * r).exp()).collect();
    // 4π Γ(3)/2³ = π
    let v = grid.integrate(&g).unwrap();
    assert!((v - PI).abs() / PI < 1e-6, "{v}");
}

#[test]
fn unit_ball_and_zero_integrand() {
    let grid = make_grid(1.0, 1000, 1.0).unwrap();
    assert!((grid.integrate(&vec![1.0; 1000]).unwrap() - FOUR_PI / 3.0).abs() < 1e-9);
    assert_eq!(grid.integrate(&vec![0.0; 1000]).unwrap(), 0.0);
    assert!(matches!(make_grid(0.0, 100, 1.0), Err(LabError::InvalidParameter(_))));
}

#[test]
fn derivative_of_constant_vanishes() {
    let grid = make_grid(10.0, 500, 3.0).unwrap();
    let d = radial_derivative(&RadialField::from_real_fn(&grid, |_| 2.5));
    assert!(d.max_abs() <= 1e-12);
}

#[test]
fn derivative_of_square_is_second_order() {
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [200, 400, 800, 1600] {
        let grid = make_grid(2.0, n, 1.0).unwrap();
        let d = radial_derivative(&RadialField::from_real_fn(&grid, |r| r * r));
        let err = grid.nodes().iter().zip(d.values()).map(|(r, v)| (v.re - 2.0 * r).abs()).fold(0.0, f64::max);
        hs.push(grid.min_spacing());
        errs.push(err.max(1e-300));
    }
    if errs.iter().all(|e| *e < 1e-12) {
        return;
    }
    let order = convergence_order(&hs, &errs);
    assert!(order > 1.8, "order {order}, errors {errs:?}");
}

#[test]
fn derivative_of_sine() {
    let grid = make_grid(6.0, 20000, 1.0).unwrap();
    let d = radial_derivative(&RadialField::from_real_fn(&grid, f64::sin));
    let err = grid.nodes().iter().zip(d.values()).map(|(r, v)| (v.re - r.cos()).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn bound_state_is_an_eigenfunction() {
    let fx = fixture(40.0, 4000, 20.0);
    let h_phi = apply_h(&fx.spectral.phi0, &fx.pot.v).unwrap();
    let res = h_phi.axpy(Complex64::new(-fx.spectral.e0, 0.0), &fx.spectral.phi0).unwrap();
    assert!(res.norm_l2() <= 1e-6 * fx.spectral.phi0.norm_l2(), "{}", res.norm_l2());
}

#[test]
fn free_laplacian_of_gaussian_is_second_order() {
    let mut hs = Vec::new();
    let mut errs = Vec::new();
    for n in [500, 1000, 2000, 4000] {
        let grid = make_grid(10.0, n, 1.0).unwrap();
        let f = RadialField::from_real_fn(&grid, |r| (-r * r).exp());
        let hf = apply_h(&f, &vec![0.0; n]).unwrap();
        let err = grid
            .nodes()
            .iter()
            .zip(hf.values())
            .map(|(r, v)| (v.re + (4.0 * r * r - 6.0) * (-r * r).exp()).abs())
            .fold(0.0, f64::max);
        hs.push(grid.min_spacing());
        errs.push(err);
    }
    assert!(errs[3] < 1e-4);
    let order = convergence_order(&hs, &errs);
    assert!(order > 1.8, "order {order}, errors {errs:?}");
}

#[test]
fn assumption_checks() {
    let grid = make_grid(40.0, 2000, 10.0).unwrap();
    assert!(check_assumptions(&PotentialSpec::gaussian_well(5.0, 1.0), &grid).unwrap().all_pass());
    // Coulomb-like tail: |V| r stays of order one out to r_max.
    let r: Vec<f64> = (0..=400).map(|k| 0.1 * k as f64).collect();
    let v: Vec<f64> = r.iter().map(|x| -2.0 / (1.0 + x)).collect();
    let slow = PotentialSpec::tabulated(r, v).unwrap();
    assert!(!check_assumptions(&slow, &grid).unwrap().all_pass());
}

#[test]
fn free_operator_has_no_bound_state() {
    let grid = make_grid(40.0, 2000, 10.0).unwrap();
    assert!(matches!(solve_ground(&PotentialSpec::free(), &grid), Err(LabError::NoBoundState(_))));
}

#[test]
fn binding_threshold_by_bisection() {
    let grid = make_grid(60.0, 3000, 20.0).unwrap();
    let bound = |a: f64| solve_ground(&PotentialSpec::gaussian_well(a, 1.0), &grid).is_ok();
    let (mut lo, mut hi) = (0.5, 5.0);
    assert!(!bound(lo) && bound(hi));
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s = solve_ground(&PotentialSpec::gaussian_well(hi * 1.2, 1.0), &grid).unwrap();
    assert_eq!(s.n_neg, 1);
    assert!(s.e0 < 0.0 && s.e0 > -0.1, "e0 = {}", s.e0);
}

#[test]
fn continuous_projection() {
    let fx = fixture(30.0, 1500, 10.0);
    let p = project_continuous(&fx.spectral.phi0, &fx.spectral).unwrap();
    assert!(p.max_abs() <= 1e-10);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = RadialField::from_fn(&fx.grid, |r| Complex64::new(a[0] + a[1] * r, a[2] + a[3] * r) * (-r * r / 4.0).exp());
    let pf = project_continuous(&f, &fx.spectral).unwrap();
    let ppf = project_continuous(&pf, &fx.spectral).unwrap();
    assert!(ppf.sub(&pf).unwrap().max_abs() <= 1e-10);
    assert!(pf.inner(&fx.spectral.phi0).unwrap().norm() <= 1e-10);
}

#[test]
fn deep_well_reports_multiple_bound_states() {
    let grid = make_grid(40.0, 2000, 10.0).unwrap();
    let pot = PotentialSpec::gaussian_well(60.0, 1.0).sample(&grid).unwrap();
    assert!(matches!(solve_ground_sampled(&pot), Err(LabError::MultipleBoundStates(_))));
}
