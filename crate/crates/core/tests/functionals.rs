mod common;

use std::f64::consts::PI;

use num_complex::Complex64;

use common::fixture;
use nlslab::functionals::{
    apply_scaling, dichotomy_classify, evaluate, scaling_derivative, DichotomyCalibration, DichotomyCase,
    FunctionalTag, ScalingOp, Sigma, DEFAULT_T_MAX,
};
use nlslab::grid::{make_grid, RadialField};
use nlslab::solitons::{small_mass_surrogate, solve_excited, SolitonBranchPoint};
use nlslab::spectral::SampledPotential;

fn gaussian(c: f64) -> impl Fn(f64) -> f64 {
    move |r| c * (-r * r).exp()
}

#[test]
fn gaussian_functionals_match_closed_forms() {
    let grid = make_grid(10.0, 200_000, 1.0).unwrap();
    let pot = SampledPotential::zero(&grid);
    let c = 0.7;
    let phi = RadialField::from_real_fn(&grid, gaussian(c));
    let rep = evaluate(&phi, &pot, Sigma::Focusing).unwrap();
    // ∫ e^{−a r²} dx = (π/a)^{3/2}, ∫ r² e^{−a r²} dx = 3/(2a) (π/a)^{3/2}
    let m = c * c / 2.0 * (PI / 2.0).powf(1.5);
    let h0 = 0.5 * 4.0 * c * c * 0.75 * (PI / 2.0).powf(1.5);
    let g = c.powi(4) / 4.0 * (PI / 4.0).powf(1.5);
    assert!((rep.m - m).abs() / m < 1e-8, "M {} vs {m}", rep.m);
    assert!((rep.h0 - h0).abs() / h0 < 1e-8, "H0 {} vs {h0}", rep.h0);
    assert!((rep.g - g).abs() / g < 1e-8, "G {} vs {g}", rep.g);
}

#[test]
fn soliton_has_vanishing_virial() {
    let fx = fixture(30.0, 8000, 100.0);
    let p = solve_excited(&fx.spectral, &fx.pot, 5.0).unwrap();
    let rep = evaluate(&p.phi, &fx.pot, Sigma::Focusing).unwrap();
    assert!(rep.k2.abs() <= 1e-6 * (rep.h0.abs() + rep.g.abs() + 1.0), "K2 = {}", rep.k2);
}

#[test]
fn scaling_identity_and_mass() {
    let fx = fixture(30.0, 3000, 20.0);
    let phi = RadialField::from_real_fn(&fx.grid, |r| 0.8 * (-r * r / 2.0).exp());
    let same = apply_scaling(&phi, ScalingOp { p: 2.0, t: 0.0 }, DEFAULT_T_MAX).unwrap();
    assert_eq!(same, phi);
    let m0 = evaluate(&phi, &fx.pot, Sigma::Focusing).unwrap().m;
    let s = apply_scaling(&phi, ScalingOp { p: 2.0, t: 0.3 }, DEFAULT_T_MAX).unwrap();
    let m1 = evaluate(&s, &fx.pot, Sigma::Focusing).unwrap().m;
    assert!((m1 - m0).abs() / m0 < 1e-5);
}

#[test]
fn energy_slope_along_l2_dilation_is_k2() {
    let fx = fixture(30.0, 6000, 20.0);
    let phi = RadialField::from_real_fn(&fx.grid, |r| 1.2 * (-r * r / 2.0).exp());
    let rep = evaluate(&phi, &fx.pot, Sigma::Focusing).unwrap();
    let t = 1e-3;
    let e = |t: f64| {
        let s = apply_scaling(&phi, ScalingOp { p: 2.0, t }, DEFAULT_T_MAX).unwrap();
        evaluate(&s, &fx.pot, Sigma::Focusing).unwrap().e
    };
    let fd = (e(t) - e(-t)) / (2.0 * t);
    assert!((fd - rep.k2).abs() / rep.k2.abs() < 1e-3, "fd {fd} vs K2 {}", rep.k2);
    let de = scaling_derivative(FunctionalTag::E, &phi, 2.0, &fx.pot, Sigma::Focusing).unwrap();
    assert!((fd - de).abs() / de.abs() < 1e-3, "fd {fd} vs closed form {de}");
}

#[test]
fn generator_identities_at_p2() {
    let fx = fixture(30.0, 3000, 20.0);
    let phi = RadialField::from_fn(&fx.grid, |r| Complex64::new(0.9, 0.2 * r) * (-r * r / 3.0).exp());
    let rep = evaluate(&phi, &fx.pot, Sigma::Focusing).unwrap();
    let dm = scaling_derivative(FunctionalTag::M, &phi, 2.0, &fx.pot, Sigma::Focusing).unwrap();
    assert_eq!(dm, 0.0);
    let dh = scaling_derivative(FunctionalTag::H0, &phi, 2.0, &fx.pot, Sigma::Focusing).unwrap();
    assert!((dh - 2.0 * rep.h0).abs() <= 1e-12 * rep.h0);
}

fn calibration() -> (DichotomyCalibration, Vec<SolitonBranchPoint>, common::Fixture) {
    let fx = fixture(30.0, 16000, 200.0);
    let ground = fx.ground(1.5, 0.1);
    let excited: Vec<_> =
        [20.0, 50.0, 100.0, 200.0].iter().map(|w| solve_excited(&fx.spectral, &fx.pot, *w).unwrap()).collect();
    let mu_hat = small_mass_surrogate(&ground.points, &excited).unwrap();
    let g: Vec<_> = ground.points.iter().map(|p| p.report).collect();
    let x: Vec<_> = excited.iter().map(|p| p.report).collect();
    (DichotomyCalibration::from_branches(&g, &x, mu_hat).unwrap(), excited, fx)
}

#[test]
fn dichotomy_cases() {
    let (cal, excited, fx) = calibration();
    let small = fx.spectral.phi0.scale(Complex64::new(0.3, 0.0));
    let rep = evaluate(&small, &fx.pot, Sigma::Focusing).unwrap();
    assert_eq!(dichotomy_classify(&rep, &cal).unwrap().case, DichotomyCase::Small);

    let x = excited.iter().find(|p| p.report.m <= cal.mu_hat).expect("an excited point below the surrogate");
    assert_eq!(dichotomy_classify(&x.report, &cal).unwrap().case, DichotomyCase::Large);

    // narrow bump with H⁰ of order one and small mass
    let bump = RadialField::from_real_fn(&fx.grid, |r| 1.15 * (-(r / 0.25).powi(2)).exp());
    let rep = evaluate(&bump, &fx.pot, Sigma::Focusing).unwrap();
    assert!(rep.m < 0.1 && rep.h0 > 0.1 && rep.h0 < 10.0);
    let v = dichotomy_classify(&rep, &cal);
    assert_eq!(v.map(|v| v.case), Ok(DichotomyCase::Intermediate), "report {rep:?}, calibration {cal:?}");
}
