//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line and
//! fails on `FAIL`.

mod common;

use std::sync::OnceLock;

use num_complex::Complex64;

use common::convergence_order;
use nlslab::evolution::{run, EvolutionConfig, Outcome, TrajectoryRecord};
use nlslab::functionals::{dichotomy_classify, DichotomyCase, Sigma};
use nlslab::grid::{make_grid, RadialField};
use nlslab::lab::{
    bifurcation_report, build_datum, defocusing_omegas, modulation_context, q_reference, sweep_classification,
    DatumRecipe, RunConfig, Setup, SweepContext, SweepTable,
};
use nlslab::solitons::{continue_defocusing, continue_ground, solve_q};
use nlslab::spectral::{PotentialSpec, SampledPotential};

fn criterion(n: usize, name: &str, pass: bool, detail: String) {
    println!("criterion {n:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn focusing() -> RunConfig {
    RunConfig::default()
}

fn defocusing() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.sigma = Sigma::Defocusing;
    cfg
}

fn default_sweep() -> &'static SweepTable {
    static CELL: OnceLock<SweepTable> = OnceLock::new();
    CELL.get_or_init(|| sweep_classification(&focusing()).unwrap())
}

#[test]
fn c01_soliton_invariants() {
    let f = bifurcation_report(&focusing()).unwrap();
    let d = bifurcation_report(&defocusing()).unwrap();
    let cfg = focusing();
    let q = solve_q(&make_grid(cfg.soliton_grid.r_max, cfg.soliton_grid.n, cfg.soliton_grid.stretch).unwrap()).unwrap();
    let points: Vec<_> = f
        .ground
        .points
        .iter()
        .chain(&f.excited)
        .chain(&d.ground.points)
        .chain(&d.defocusing.as_ref().unwrap().points)
        .chain(std::iter::once(&q))
        .collect();
    let bad: Vec<f64> = points.iter().filter(|p| !p.satisfies_invariants()).map(|p| p.omega).collect();
    let worst_k2 = points
        .iter()
        .map(|p| p.report.k2.abs() / (p.report.h0 + p.report.g.abs() + 1.0))
        .fold(0.0, f64::max);
    let worst_res = points.iter().map(|p| p.residual / p.residual_scale()).fold(0.0, f64::max);
    criterion(
        1,
        "soliton invariants",
        bad.is_empty() && f.excited_failures.is_empty(),
        format!(
            "{} points, worst |K2|/scale {worst_k2:.2e}, worst residual/scale {worst_res:.2e}, failures at omega {bad:?}",
            points.len()
        ),
    );
}

#[test]
fn c02_excited_energy_asymptotic() {
    let cfg = focusing();
    let rep = bifurcation_report(&cfg).unwrap();
    let ratio = rep.smallest_mass_ratio().unwrap();
    let (coarse, fine) = rep.reference.unwrap();
    let fine2 = q_reference(&cfg, 2.0).unwrap();
    let refine = ((coarse - fine).abs() / fine.abs()).max((coarse - fine2).abs() / fine2.abs());
    criterion(
        2,
        "excited energy asymptotic",
        (ratio - 1.0).abs() <= 0.1 && refine <= 1e-4,
        format!("mu*E1/(M(Q)E0(Q)) = {ratio:.4}, reference {coarse:.8} with refined-grid change {refine:.2e}"),
    );
}

#[test]
fn c03_ground_bifurcation() {
    let cfg = focusing();
    let setup = Setup::new(&cfg, cfg.ground_grid).unwrap();
    let spectral = setup.spectral().unwrap();
    let zs: Vec<f64> = (1..=8).map(|k| 0.05 * k as f64).collect();
    let b = continue_ground(spectral, &setup.pot, Sigma::Focusing, &zs).unwrap();
    let gaps: Vec<f64> = b.omegas().iter().map(|w| (w + spectral.e0).abs()).collect();
    let monotone = gaps[..4].windows(2).all(|w| w[0] < w[1]);
    let dev: Vec<f64> = zs.iter().zip(&b.points).map(|(z, p)| p.report.m - z * z / 2.0).collect();
    let c = zs.iter().zip(&dev).map(|(z, d)| d * z.powi(4)).sum::<f64>() / zs.iter().map(|z| z.powi(8)).sum::<f64>();
    let fits = zs.iter().zip(&dev).all(|(z, d)| d.abs() <= 1.5 * c * z.powi(4));
    criterion(
        3,
        "ground bifurcation",
        monotone && c > 0.0 && fits,
        format!("|Omega+e0| over 4 smallest z {:?}, fitted c = {c:.4e}", &gaps[..4]),
    );
}

#[test]
fn c04_defocusing_branch() {
    let cfg = defocusing();
    let setup = Setup::new(&cfg, cfg.defocusing_grid).unwrap();
    let spectral = setup.spectral().unwrap();
    let omegas = defocusing_omegas(spectral.e0, 20);
    let b = continue_defocusing(spectral, &setup.pot, &omegas).unwrap();
    let m = b.masses();
    let decreasing = m.windows(2).all(|w| w[1] < w[0]);
    let worst = (1..omegas.len() - 1)
        .map(|k| {
            let (p, q) = (&b.points[k - 1].report, &b.points[k + 1].report);
            let dw = omegas[k + 1] - omegas[k - 1];
            let (de, dm) = ((q.e - p.e) / dw, (q.m - p.m) / dw);
            (de + omegas[k] * dm).abs() / de.abs()
        })
        .fold(0.0, f64::max);
    criterion(
        4,
        "defocusing branch",
        omegas.len() == 20 && decreasing && worst <= 1e-2,
        format!("M from {:.4e} to {:.4e}, worst dE + omega dM relative {worst:.2e}", m[0], m[19]),
    );
}

fn conserving_run(cfg: &RunConfig, setup: &Setup, recipe: DatumRecipe) -> TrajectoryRecord {
    let u0 = build_datum(cfg, &recipe, setup).unwrap();
    // window beyond T keeps the run going to T = 10
    let ecfg = EvolutionConfig { t_max: 10.0, window: 20.0, ..cfg.evolution_config() };
    let (rec, v) = run(&u0, &setup.pot, cfg.sigma, &ecfg, None).unwrap();
    assert!((v.t_detect - 10.0).abs() < 1e-9, "{recipe:?} stopped early: {}", v.evidence);
    rec
}

#[test]
fn c05_conservation() {
    let mut worst = (0.0f64, 0.0f64);
    let mut runs = 0;
    for cfg in [focusing(), defocusing()] {
        let setup = Setup::new(&cfg, cfg.grid).unwrap();
        let mut recipes = vec![
            DatumRecipe::Gaussian { amplitude: 0.2, width: 1.5, center: 0.0 },
            DatumRecipe::Gaussian { amplitude: 0.5, width: 1.0, center: 2.0 },
        ];
        if cfg.sigma == Sigma::Focusing {
            recipes.push(DatumRecipe::Soliton { z: 0.8 });
        }
        for r in recipes {
            let rec = conserving_run(&cfg, &setup, r);
            worst.0 = worst.0.max(rec.max_mass_drift());
            worst.1 = worst.1.max(rec.max_energy_drift());
            runs += 1;
        }
    }
    criterion(
        5,
        "conservation",
        worst.0 <= 1e-6 && worst.1 <= 1e-6,
        format!("{runs} runs to T = 10, worst mass drift {:.2e}, worst energy drift {:.2e}", worst.0, worst.1),
    );
}

/// |lhs − rhs| of the virial monitor at t = 0.5 with fixed step dt on a
/// uniform grid of n nodes.
fn virial_defect(n: usize, dt: f64) -> f64 {
    let grid = make_grid(60.0, n, 1.0).unwrap();
    let pot: SampledPotential = PotentialSpec::gaussian_well(5.0, 1.0).sample(&grid).unwrap();
    let u0 = RadialField::from_fn(&grid, |r| {
        Complex64::new(0.5 * (-r * r / 2.0).exp(), 0.2 * r * (-(r - 1.0).powi(2)).exp())
    });
    let cfg = EvolutionConfig {
        t_max: 0.5,
        dt_max: dt,
        theta: 1e6,
        sample_interval: 0.25,
        sample_steps: usize::MAX,
        window: 10.0,
        virial_radius: 6.0,
        ..EvolutionConfig::default()
    };
    let (rec, _) = run(&u0, &pot, Sigma::Focusing, &cfg, None).unwrap();
    let s = rec.samples.last().unwrap();
    assert!((s.t - 0.5).abs() < 1e-9);
    (s.virial_lhs - s.virial_rhs).abs()
}

#[test]
fn c06_virial_identity() {
    let levels = [(6000, 0.01), (12000, 0.005), (24000, 0.0025), (48000, 0.00125)];
    let h: Vec<f64> = levels.iter().map(|(n, _)| 60.0 / *n as f64).collect();
    let err: Vec<f64> = levels.iter().map(|&(n, dt)| virial_defect(n, dt)).collect();
    let order = convergence_order(&h, &err);
    criterion(6, "virial identity", order >= 1.8, format!("defects {}, observed order {order:.3}", err.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" ")));
}

#[test]
fn c07_classification() {
    let t = default_sweep();
    let s = &t.summary;
    let persists = t.verdicts.iter().filter(|v| v.outcomes().any(|o| o == Outcome::BlowUp)).all(|v| v.persistence == Some(true));
    criterion(
        7,
        "classification",
        s.total == 40 && s.decided > 0 && s.agreement_rate >= 0.95 && s.unpredicted_blowups == 0 && persists,
        format!(
            "{} data, {} excluded, {} decided, agreement {:.3}, unpredicted blow-ups {}, persistence violations {}",
            s.total, s.excluded, s.decided, s.agreement_rate, s.unpredicted_blowups, s.persistence_violations
        ),
    );
}

/// Linear interpolation of (M, H⁰) pairs sorted by mass, clamped at the ends.
fn h0_at(branch: &[(f64, f64)], m: f64) -> f64 {
    let k = branch.partition_point(|p| p.0 < m);
    if k == 0 {
        return branch[0].1;
    }
    if k == branch.len() {
        return branch[k - 1].1;
    }
    let ((m0, h0), (m1, h1)) = (branch[k - 1], branch[k]);
    h0 + (h1 - h0) * (m - m0) / (m1 - m0)
}

#[test]
fn c08_dichotomy_gap() {
    let t = default_sweep();
    let cal = t.calibration.expect("focusing sweep has a calibration");
    let (mut nonpositive, mut middle, mut sampled_small) = (0, 0, 0);
    let mut large = Vec::new();
    for rep in t.verdicts.iter().flat_map(|v| &v.reports) {
        // Err means outside the regime: M above the surrogate or K2·M too large
        let Ok(v) = dichotomy_classify(rep, &cal) else { continue };
        if rep.k2 <= 0.0 {
            nonpositive += 1;
            middle += usize::from(v.case == DichotomyCase::Intermediate);
        }
        match v.case {
            DichotomyCase::Small => sampled_small += 1,
            DichotomyCase::Large => large.push((rep.m, rep.h0)),
            DichotomyCase::Intermediate => {}
        }
    }
    // Case (i) reference: ground solitons (K2 = 0) of the same mass.
    let cfg = focusing();
    let ctx = SweepContext::new(&cfg, cfg.grid).unwrap();
    let mut ground: Vec<(f64, f64)> = ctx
        .ground
        .as_ref()
        .unwrap()
        .points
        .iter()
        .filter(|p| p.report.m <= cal.mu_hat)
        .map(|p| (p.report.m, p.report.h0))
        .collect();
    ground.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ground_small = ctx
        .ground
        .as_ref()
        .unwrap()
        .points
        .iter()
        .filter(|p| p.report.m <= cal.mu_hat)
        .all(|p| dichotomy_classify(&p.report, &cal).map(|v| v.case) == Ok(DichotomyCase::Small));
    let gap = large.iter().map(|&(m, h)| h / h0_at(&ground, m)).fold(f64::INFINITY, f64::min);
    criterion(
        8,
        "dichotomy gap",
        middle == 0 && ground_small && !large.is_empty() && gap > 10.0,
        format!(
            "{nonpositive} sampled fields with K2 <= 0 and M <= {:.4}, {middle} of them case (ii); \
             {} sampled case (iii) and {sampled_small} sampled case (i); \
             smallest H0 ratio of case (iii) to the ground soliton of equal mass {gap:.1}",
            cal.mu_hat,
            large.len(),
        ),
    );
}

#[test]
fn c09_modulation_fidelity() {
    let cfg = focusing();
    let setup = Setup::new(&cfg, cfg.grid).unwrap();
    let ctx = modulation_context(&cfg, &setup).unwrap().unwrap();
    let phi = ctx.phi(Complex64::new(0.5, 0.0)).unwrap();
    let bump = RadialField::from_real_fn(&setup.grid, |r| 0.1 * (-(r - 3.0).powi(2)).exp());
    let u0 = phi.add(&bump).unwrap();
    let ecfg = EvolutionConfig { t_max: 10.0, keep_frames: true, keep_fields: true, ..cfg.evolution_config() };
    let (rec, _) = run(&u0, &setup.pot, Sigma::Focusing, &ecfg, Some(&ctx)).unwrap();
    assert_eq!(rec.frames.len(), rec.samples.len());
    let orth = rec
        .frames
        .iter()
        .zip(&rec.fields)
        .map(|(f, u)| f.orth_residual / u.norm_l2())
        .fold(0.0, f64::max);
    let split = rec.frames.iter().zip(&rec.fields).map(|(f, u)| f.mass_split_error(u).unwrap()).fold(0.0, f64::max);
    criterion(
        9,
        "modulation fidelity",
        orth <= 1e-8 && split <= 1e-6,
        format!("{} frames, worst relative orthogonality {orth:.2e}, worst mass split {split:.2e}", rec.frames.len()),
    );
}

#[test]
fn c10_scattering_diagnostics() {
    let cfg = focusing();
    let setup = Setup::new(&cfg, cfg.grid).unwrap();
    let ctx = modulation_context(&cfg, &setup).unwrap().unwrap();
    let u0 = build_datum(&cfg, &DatumRecipe::Gaussian { amplitude: 0.2, width: 1.5, center: 0.0 }, &setup).unwrap();
    let ecfg = EvolutionConfig { t_max: 20.0, window: 30.0, ..cfg.evolution_config() };
    let (rec, _) = run(&u0, &setup.pot, Sigma::Focusing, &ecfg, Some(&ctx)).unwrap();
    let last = rec.samples.last().unwrap();
    let window = cfg.time.window;
    let tail: Vec<_> = rec.samples.iter().filter(|s| s.t >= last.t - window).collect();
    let zs: Vec<f64> = tail.iter().map(|s| s.z_abs().unwrap()).collect();
    let (lo, hi) = zs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), z| (a.min(*z), b.max(*z)));
    let oscillation = (hi - lo) / hi;
    let peak = rec.samples.iter().map(|s| s.xi_l6).fold(0.0, f64::max);
    let decay = peak / last.xi_l6;
    let half = rec.samples.iter().rev().find(|s| s.t <= last.t - window / 2.0).unwrap();
    let growth = (last.st_integral - half.st_integral) / last.st_integral;
    criterion(
        10,
        "scattering diagnostics",
        oscillation < 0.01 && decay >= 10.0 && growth < 0.01,
        format!("|z| oscillation {oscillation:.2e}, xi_L6 decay {decay:.1}x, ST growth over last half window {growth:.2e}"),
    );
}
