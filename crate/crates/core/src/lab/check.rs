//! Self-check suite: potential assumptions plus quick invariant checks of
//! every layer on the configured potential.

use num_complex::Complex64;

use super::{RunConfig, Setup};
use crate::error::Result;
use crate::evolution::run;
use crate::functionals::Sigma;
use crate::grid::make_grid;
use crate::modulation::{decompose, ModulationContext};
use crate::solitons::{continue_ground, solve_excited, solve_q};
use crate::spectral::check_assumptions;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.to_string(), pass, detail }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((pass, detail)) => Self::new(name, pass, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

/// Run every check; none aborts the others.
pub fn run_checks(cfg: &RunConfig) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(CheckResult::from_result("quadrature", (|| {
        let g = make_grid(1.0, 1000, 1.0)?;
        let v = g.integrate_raw(&vec![1.0; g.n()]) / crate::grid::FOUR_PI;
        let err = (v - 1.0 / 3.0).abs() * 3.0;
        Ok((err <= 1e-10, format!("relative error of the ball volume {err:.2e}")))
    })()));

    let setup = match Setup::new(cfg, cfg.grid) {
        Ok(s) => s,
        Err(e) => {
            out.push(CheckResult::new("setup", false, format!("error: {e}")));
            return out;
        }
    };
    match check_assumptions(&cfg.potential, &setup.grid) {
        Ok(rep) => {
            for c in &rep.checks {
                out.push(CheckResult::new(&format!("assumption: {}", c.name), c.pass, format!("{:.3e}", c.value)));
            }
        }
        Err(e) => out.push(CheckResult::new("assumptions", false, format!("error: {e}"))),
    }
    out.push(CheckResult::from_result("single bound state", (|| {
        let s = setup.spectral()?;
        Ok((s.e0 < 0.0 && s.n_neg == 1, format!("e0 = {:.8}, e1 = {:.3e}", s.e0, s.e1)))
    })()));
    out.push(CheckResult::from_result("Q profile", (|| {
        let g = cfg.soliton_grid;
        let q = solve_q(&make_grid(g.r_max, g.n, g.stretch)?)?;
        Ok((q.satisfies_invariants(), format!("K2 = {:.2e}, residual = {:.2e}", q.report.k2, q.residual)))
    })()));
    out.push(CheckResult::from_result("ground branch", (|| {
        let gs = Setup::new(cfg, cfg.ground_grid)?;
        let zs: Vec<f64> = cfg.z_list().into_iter().take(8).collect();
        let b = continue_ground(gs.spectral()?, &gs.pot, cfg.sigma, &zs)?;
        let worst = b.points.iter().map(|p| p.report.k2.abs()).fold(0.0, f64::max);
        Ok((b.points.iter().all(|p| p.satisfies_invariants()), format!("{} points, max |K2| {worst:.2e}", b.points.len())))
    })()));
    if cfg.sigma == Sigma::Focusing {
        out.push(CheckResult::from_result("excited soliton", (|| {
            let xs = Setup::new(cfg, cfg.soliton_grid)?;
            let p = solve_excited(xs.spectral()?, &xs.pot, 20.0)?;
            Ok((p.satisfies_invariants(), format!("omega 20: M = {:.6}, K2 = {:.2e}", p.report.m, p.report.k2)))
        })()));
    }
    out.push(CheckResult::from_result("soliton orbit", (|| {
        let spectral = setup.spectral()?;
        let zs: Vec<f64> = (1..=12).map(|k| 0.05 * k as f64).collect();
        let b = continue_ground(spectral, &setup.pot, cfg.sigma, &zs)?;
        let ctx = ModulationContext::new(spectral.clone(), &b)?;
        let z = Complex64::new(0.5, 0.0);
        let phi = ctx.phi(z)?;
        let mut ecfg = cfg.evolution_config();
        ecfg.t_max = 1.0;
        let (rec, _) = run(&phi, &setup.pot, cfg.sigma, &ecfg, Some(&ctx))?;
        let exact = phi.scale(Complex64::from_polar(1.0, -ctx.omega(z) * rec.final_state.t));
        let err = rec.final_state.u.sub(&exact)?.norm_l2();
        let drift = rec.max_mass_drift().max(rec.max_energy_drift());
        let orth = rec.samples.iter().map(|s| s.orth_residual).fold(0.0, f64::max);
        let frame = decompose(&phi, &ctx, None, 0.0)?;
        Ok((
            err <= 1e-4 && drift <= 1e-6 && orth <= 1e-12 && (frame.z - z).norm() <= 1e-9,
            format!("orbit error {err:.2e}, drift {drift:.2e}, orthogonality {orth:.2e}"),
        ))
    })()));
    out
}
