mod common;

use num_complex::Complex64;

use common::{fixture, Fixture};
use nlslab::evolution::{run, EvolutionConfig, Outcome};
use nlslab::functionals::{evaluate, Sigma};
use nlslab::grid::RadialField;
use nlslab::modulation::{decompose, st_norm_accumulate, zdot_residual, ModulationContext};
use nlslab::spectral::project_continuous;
use nlslab::LabError;

fn context() -> (Fixture, ModulationContext) {
    let fx = fixture(60.0, 4000, 20.0);
    let branch = fx.ground(1.5, 0.05);
    let ctx = ModulationContext::new(fx.spectral.clone(), &branch).unwrap();
    (fx, ctx)
}

#[test]
fn rotated_soliton_gives_rotated_coordinate() {
    let (_, ctx) = context();
    let z0 = Complex64::new(0.7, 0.0);
    for theta in [0.4, 2.0, -2.9] {
        let rot = Complex64::from_polar(1.0, theta);
        let u = ctx.phi(z0).unwrap().scale(rot);
        let f = decompose(&u, &ctx, None, 0.0).unwrap();
        assert!((f.z - rot * z0).norm() <= 1e-9, "theta {theta}: {}", f.z);
        assert!(f.eta.norm_l2() <= 1e-9);
    }
}

/// Central differences of z ↦ Φ[z] in the real and imaginary directions.
fn tangents(ctx: &ModulationContext, z: Complex64) -> [RadialField; 2] {
    let h = 1e-5;
    let d = |dz: Complex64| {
        let a = ctx.phi(z + dz).unwrap();
        let b = ctx.phi(z - dz).unwrap();
        a.sub(&b).unwrap().scale(Complex64::new(0.5 / h, 0.0))
    };
    [d(Complex64::new(h, 0.0)), d(Complex64::new(0.0, h))]
}

#[test]
fn orthogonal_perturbation_keeps_the_coordinate() {
    let (fx, ctx) = context();
    let z0 = Complex64::new(0.6, 0.2);
    let phi = ctx.phi(z0).unwrap();
    let bump = RadialField::from_fn(&fx.grid, |r| Complex64::new(1.0, 0.5) * (-(r - 4.0).powi(2)).exp());
    let b = project_continuous(&bump, &fx.spectral).unwrap();
    // enforce ⟨iη|∂_kΦ⟩ = 0 by adding a combination of i∂_jΦ
    let d = tangents(&ctx, z0);
    let i = Complex64::new(0.0, 1.0);
    let id: Vec<RadialField> = d.iter().map(|x| x.scale(i)).collect();
    let g = |a: &RadialField, c: &RadialField| a.real_inner(c).unwrap();
    let ib = b.scale(i);
    let m = [[g(&id[0].scale(i), &d[0]), g(&id[1].scale(i), &d[0])], [g(&id[0].scale(i), &d[1]), g(&id[1].scale(i), &d[1])]];
    let rhs = [-g(&ib, &d[0]), -g(&ib, &d[1])];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let a0 = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let a1 = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    let eta = b.axpy(Complex64::new(a0, 0.0), &id[0]).unwrap().axpy(Complex64::new(a1, 0.0), &id[1]).unwrap();
    for eps in [1e-2, 5e-3, 2.5e-3] {
        let u = phi.axpy(Complex64::new(eps, 0.0), &eta).unwrap();
        let f = decompose(&u, &ctx, None, 0.0).unwrap();
        let drift = (f.z - z0).norm();
        assert!(drift <= eps * eps, "eps {eps}: drift {drift}");
        assert!(f.orth_residual <= 1e-8 * u.norm_l2());
    }
}

#[test]
fn zero_field_is_not_applicable() {
    let (fx, ctx) = context();
    let r = decompose(&RadialField::zeros(&fx.grid), &ctx, None, 0.0);
    assert!(matches!(r, Err(LabError::NotApplicable(_))));
}

#[test]
fn soliton_orbit_has_small_coordinate_residual_and_virial() {
    let (fx, ctx) = context();
    let z = Complex64::new(0.9, 0.0);
    let phi = ctx.phi(z).unwrap();
    let cfg = EvolutionConfig { t_max: 1.0, sample_interval: 0.02, keep_frames: true, ..EvolutionConfig::default() };
    let (rec, _) = run(&phi, &fx.pot, Sigma::Focusing, &cfg, Some(&ctx)).unwrap();
    for w in rec.frames.windows(3) {
        let r = zdot_residual(&w[0], &w[1], &w[2], &ctx, Sigma::Focusing).unwrap();
        assert!(r.norm() <= 1e-4 * w[1].z.norm(), "t = {}: {}", w[1].t, r.norm());
    }
    for s in &rec.samples {
        assert!(s.virial_lhs.abs() <= 1e-4 && s.virial_rhs.abs() <= 1e-4, "{} {}", s.virial_lhs, s.virial_rhs);
    }
}

fn radiating_residual(dt: f64, spacing: f64) -> f64 {
    let (fx, ctx) = context();
    let z = Complex64::new(0.9, 0.0);
    let bump = RadialField::from_real_fn(&fx.grid, |r| 0.02 * (-(r - 3.0).powi(2)).exp());
    let u0 = ctx.phi(z).unwrap().add(&bump).unwrap();
    let cfg = EvolutionConfig {
        t_max: 1.0,
        dt_max: dt,
        sample_interval: spacing,
        sample_steps: usize::MAX,
        keep_frames: true,
        ..EvolutionConfig::default()
    };
    let (rec, _) = run(&u0, &fx.pot, Sigma::Focusing, &cfg, Some(&ctx)).unwrap();
    rec.frames
        .windows(3)
        .map(|w| zdot_residual(&w[0], &w[1], &w[2], &ctx, Sigma::Focusing).unwrap().norm())
        .fold(0.0, f64::max)
}

#[test]
fn radiating_residual_shrinks_under_refinement() {
    let coarse = radiating_residual(0.01, 0.04);
    let fine = radiating_residual(0.005, 0.02);
    assert!(fine < 0.5 * coarse, "coarse {coarse}, fine {fine}");
}

#[test]
fn blowup_run_has_negative_virial_rate() {
    let cfg = nlslab::lab::RunConfig::default();
    let setup = nlslab::lab::Setup::new(&cfg, cfg.grid).unwrap();
    let u0 = nlslab::lab::build_datum(&cfg, &nlslab::lab::DatumRecipe::Excited { omega: 20.0, scale_t: 0.3 }, &setup)
        .unwrap();
    let ecfg = EvolutionConfig { t_max: 1.0, ..cfg.evolution_config() };
    let (rec, v) = run(&u0, &setup.pot, Sigma::Focusing, &ecfg, None).unwrap();
    assert_eq!(v.outcome, Outcome::BlowUp);
    assert!(rec.samples.iter().all(|s| s.virial_rhs < 0.0));
}

#[test]
fn st_norm_of_zero_and_of_free_flight() {
    let (fx, _) = context();
    let zero = vec![RadialField::zeros(&fx.grid); 3];
    assert_eq!(st_norm_accumulate(&[0.0, 1.0, 2.0], &zero), 0.0);

    let pot = nlslab::spectral::SampledPotential::zero(&fx.grid);
    let u0 = RadialField::from_real_fn(&fx.grid, |r| 0.3 * (-r * r / 2.0).exp());
    assert!(evaluate(&u0, &pot, Sigma::Focusing).unwrap().m < 1.0);
    let cfg = EvolutionConfig { t_max: 15.0, ..EvolutionConfig::default() };
    let (rec, _) = run(&u0, &pot, Sigma::Focusing, &cfg, None).unwrap();
    let last = rec.samples.last().unwrap();
    let earlier = rec.samples.iter().rev().find(|s| s.t <= last.t - 2.5).unwrap();
    let growth = (last.st_integral - earlier.st_integral) / last.st_integral;
    assert!(growth < 0.01, "growth {growth}");
}

/// |lhs − rhs| at t = 0.2 with a wide well, so the potential term outside
/// the cutoff radius is not negligible (V(6) ≈ −0.1).
fn wide_well_virial_defect(n: usize, dt: f64) -> (f64, f64) {
    let grid = nlslab::grid::make_grid(30.0, n, 1.0).unwrap();
    let pot = nlslab::spectral::PotentialSpec::gaussian_well(1.0, 4.0).sample(&grid).unwrap();
    let u0 = RadialField::from_fn(&grid, |r| Complex64::new(0.5, 0.3 * r) * (-(r / 2.0).powi(2)).exp());
    let cfg = EvolutionConfig {
        t_max: 0.2,
        dt_max: dt,
        theta: 1e6,
        sample_interval: 0.1,
        sample_steps: usize::MAX,
        virial_radius: 6.0,
        ..EvolutionConfig::default()
    };
    let (rec, _) = run(&u0, &pot, Sigma::Focusing, &cfg, None).unwrap();
    let s = rec.samples.last().unwrap();
    ((s.virial_lhs - s.virial_rhs).abs(), s.virial_lhs.abs())
}

#[test]
fn virial_identity_holds_with_a_wide_potential() {
    let (coarse, scale) = wide_well_virial_defect(6000, 0.002);
    let (fine, _) = wide_well_virial_defect(12000, 0.001);
    assert!(fine < 0.3 * coarse, "coarse {coarse}, fine {fine}");
    assert!(fine < 1e-3 * scale, "fine {fine}, scale {scale}");
}
