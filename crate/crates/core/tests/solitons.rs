mod common;

use num_complex::Complex64;

use common::{fixture, Fixture};
use nlslab::functionals::{dichotomy_classify, DichotomyCalibration, DichotomyCase, Sigma};
use nlslab::grid::make_grid;
use nlslab::lab::defocusing_omegas;
use nlslab::solitons::{
    continue_defocusing, energy_curves, estimate_kappa, small_mass_surrogate, solve_excited, solve_q,
    stationary_residual, KappaContext, KappaSampler, SolitonBranchPoint,
};
use nlslab::LabError;

fn q_on(n: usize) -> SolitonBranchPoint {
    solve_q(&make_grid(30.0, n, 500.0).unwrap()).unwrap()
}

#[test]
fn q_satisfies_the_free_pohozaev_identities() {
    let q = q_on(16000);
    let r = q.report;
    assert!(r.k2_0.abs() <= 1e-5 * r.h0, "K2_0 = {}", r.k2_0);
    assert!((r.e0 - r.g / 2.0).abs() <= 1e-5 * r.e0.abs(), "E0 = {}, G/2 = {}", r.e0, r.g / 2.0);
}

#[test]
fn q_values_are_grid_converged() {
    let a = q_on(16000).report;
    let b = q_on(32000).report;
    assert!((a.m - b.m).abs() <= 1e-4 * b.m);
    assert!((a.e0 - b.e0).abs() <= 1e-4 * b.e0.abs());
}

fn ground_fixture() -> Fixture {
    fixture(40.0, 16000, 20.0)
}

#[test]
fn ground_frequency_tends_to_the_eigenvalue() {
    let fx = ground_fixture();
    let b = fx.ground(0.4, 0.05);
    let gap: Vec<f64> = b.omegas().iter().map(|w| (w + fx.spectral.e0).abs()).collect();
    assert!(gap[..4].windows(2).all(|w| w[0] < w[1]), "{gap:?}");
    assert!(gap[0] < 1e-2);
}

#[test]
fn ground_mass_is_quadratic_with_quartic_correction() {
    let fx = ground_fixture();
    let b = fx.ground(0.4, 0.05);
    // least squares of M − z²/2 against z⁴
    let (mut num, mut den) = (0.0, 0.0);
    for (z, m) in b.z_values.iter().zip(&b.mass_curve) {
        num += (m - z * z / 2.0) * z.powi(4);
        den += z.powi(8);
    }
    let c = num / den;
    assert!(c > 0.0, "c = {c}");
    for (z, m) in b.z_values.iter().zip(&b.mass_curve) {
        assert!((m - z * z / 2.0).abs() <= 1.5 * c * z.powi(4), "z = {z}");
    }
}

#[test]
fn ground_points_are_gauge_covariant() {
    let fx = ground_fixture();
    let b = fx.ground(0.5, 0.1);
    for p in &b.points {
        assert!(p.satisfies_invariants());
        let rotated = p.phi.scale(Complex64::from_polar(1.0, 1.3));
        let res = stationary_residual(&rotated, p.omega, &fx.pot, Sigma::Focusing).unwrap();
        assert!(res <= 1e-8 * p.residual_scale(), "{res}");
    }
}

#[test]
fn defocusing_branch_is_monotone_and_satisfies_the_energy_relation() {
    let fx = fixture(250.0, 16000, 50.0);
    let omegas = defocusing_omegas(fx.spectral.e0, 20);
    let b = continue_defocusing(&fx.spectral, &fx.pot, &omegas).unwrap();
    let m = b.masses();
    assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
    for k in 1..omegas.len() - 1 {
        let (p, q) = (&b.points[k - 1].report, &b.points[k + 1].report);
        let dw = omegas[k + 1] - omegas[k - 1];
        let de = (q.e - p.e) / dw;
        let dm = (q.m - p.m) / dw;
        let rel = (de + omegas[k] * dm).abs() / de.abs();
        assert!(rel <= 1e-2, "omega {}: relative error {rel}", omegas[k]);
    }
    let h1: Vec<f64> = b.points.iter().map(|p| p.phi.norm_h1()).collect();
    assert!(h1.windows(2).all(|w| w[1] < w[0]));
    assert!(h1[19] < 0.5 * h1[0]);
    assert!(b.points.iter().all(|p| p.satisfies_invariants()));
}

#[test]
fn defocusing_rejects_frequencies_outside_the_gap() {
    let fx = fixture(40.0, 2000, 20.0);
    let r = continue_defocusing(&fx.spectral, &fx.pot, &[-fx.spectral.e0 + 0.1]);
    assert!(matches!(r, Err(LabError::Precondition(_))));
}

struct Branches {
    fx: Fixture,
    ground: Vec<SolitonBranchPoint>,
    excited: Vec<SolitonBranchPoint>,
}

fn branches() -> Branches {
    let fx = fixture(30.0, 32000, 500.0);
    let ground = fx.ground(2.6, 0.1).points;
    let excited = [5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 400.0]
        .iter()
        .map(|w| solve_excited(&fx.spectral, &fx.pot, *w).unwrap())
        .collect();
    Branches { fx, ground, excited }
}

#[test]
fn excited_branch_properties() {
    let b = branches();
    let q = q_on(32000).report;
    let reference = q.m * q.e0;
    for p in &b.excited {
        assert!(p.satisfies_invariants(), "omega {}", p.omega);
    }
    let smallest = b.excited.iter().min_by(|a, c| a.report.m.total_cmp(&c.report.m)).unwrap();
    let ratio = smallest.report.m * smallest.report.e / reference;
    assert!((ratio - 1.0).abs() <= 0.1, "ratio {ratio}");

    let mu_hat = small_mass_surrogate(&b.ground, &b.excited).unwrap();
    let g: Vec<_> = b.ground.iter().map(|p| p.report).collect();
    let x: Vec<_> = b.excited.iter().map(|p| p.report).collect();
    let cal = DichotomyCalibration::from_branches(&g, &x, mu_hat).unwrap();
    for p in b.excited.iter().filter(|p| p.report.m <= mu_hat) {
        assert_eq!(dichotomy_classify(&p.report, &cal).unwrap().case, DichotomyCase::Large);
    }
}

#[test]
fn ground_and_excited_energy_curves() {
    let b = branches();
    let mut mu: Vec<f64> = b.excited.iter().map(|p| p.report.m).filter(|m| *m <= 3.0).collect();
    mu.sort_by(f64::total_cmp);
    let c = energy_curves(&b.ground, Some(&b.excited), &mu).unwrap();
    assert!(c.e0.iter().all(|e| *e < 0.0));
    let ratio = c.e0[0] / mu[0] / b.fx.spectral.e0;
    assert!(ratio > 0.5 && ratio < 2.0, "{ratio}");
    assert!(c.e1.windows(2).all(|w| w[1] < w[0]), "{:?}", c.e1);
    let d = energy_curves(&b.ground, None, &mu).unwrap();
    assert!(d.e1.iter().all(|e| e.is_infinite() && *e > 0.0));
}

#[test]
fn kappa_estimate() {
    // Mass low enough that ground-like fields stay below the gradient gate.
    let fx = fixture(30.0, 32000, 500.0);
    let x = solve_excited(&fx.spectral, &fx.pot, 800.0).unwrap();
    let mu = x.report.m;
    let ctx = KappaContext { pot: &fx.pot, excited: &x, e1: x.report.e, gate: 1.0 };
    let sampler = KappaSampler { samples: 8, ..KappaSampler::default() };
    let mut values = Vec::new();
    for delta in [1.0, 1e-3, 1e-6] {
        let k = estimate_kappa(&ctx, Sigma::Focusing, mu, delta, &sampler).unwrap();
        assert!(k.feasible > 0 && !k.regime_violation, "delta {delta}: {k:?}");
        let shifted = k.excited_sample.expect("ladder reaches E1 - delta");
        assert!(shifted >= k.value);
        values.push(k.value);
    }
    assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    assert!(values[2] < values[0]);
    assert!(matches!(
        estimate_kappa(&ctx, Sigma::Defocusing, mu, 0.1, &sampler),
        Err(LabError::Precondition(_))
    ));
}
