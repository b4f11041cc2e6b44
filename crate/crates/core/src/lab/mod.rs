//! Experiment driver: configuration, datum construction, single runs,
//! classification sweeps, bifurcation reports and the self-check suite.

mod check;
mod config;
mod report;
mod sweep;

pub use check::{run_checks, CheckResult};
pub use config::{
    BranchSpec, DatumRecipe, GridSpec, RunConfig, SweepFamily, SweepSpec, Thresholds, TimeSpec, OUTPUT_ENV,
};
pub use report::{bifurcation_report, defocusing_omegas, q_reference, write_branch, BifurcationReport, BranchKind};
pub use sweep::{
    predict, sweep_classification, ClassificationVerdict, Prediction, SweepContext, SweepDatum, SweepSummary, SweepTable,
    SWEEP_CSV_HEADER,
};

use std::fs;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::evolution::{run, run_backward, EvolutionConfig, RunVerdict, TrajectoryRecord};
use crate::functionals::{apply_scaling, ScalingOp, Sigma, DEFAULT_T_MAX};
use crate::grid::{make_grid, RadialField, RadialGrid};
use crate::modulation::ModulationContext;
use crate::par::Execution;
use crate::solitons::{continue_ground, q_profile, solve_excited, GroundBranch};
use crate::spectral::{solve_ground_sampled, SampledPotential, SpectralData};

/// Grid, sampled potential and (when H has a bound state) its spectral data.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Arc<RadialGrid>,
    pub pot: SampledPotential,
    pub spectral: Option<SpectralData>,
}

impl Setup {
    pub fn new(cfg: &RunConfig, spec: GridSpec) -> Result<Self> {
        let grid = make_grid(spec.r_max, spec.n, spec.stretch)?;
        let pot = cfg.potential.sample(&grid)?;
        let spectral = match solve_ground_sampled(&pot) {
            Ok(s) => Some(s),
            Err(LabError::NoBoundState(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self { grid, pot, spectral })
    }

    pub fn spectral(&self) -> Result<&SpectralData> {
        self.spectral.as_ref().ok_or_else(|| LabError::Precondition("the potential has no bound state".into()))
    }
}

impl RunConfig {
    pub fn execution(&self) -> Execution {
        if self.parallel {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt_max: self.time.dt0,
            dt_min: self.time.dt_min,
            t_max: self.time.t_max,
            theta: self.time.theta,
            sample_interval: self.time.sample_interval,
            sample_steps: self.time.sample_steps,
            growth_factor: self.thresholds.growth_factor,
            drift_bound: self.thresholds.drift_bound,
            window: self.time.window,
            virial_radius: self.time.virial_radius,
            ..EvolutionConfig::default()
        }
    }

    /// z_step, 2 z_step, … up to z_max.
    pub fn z_list(&self) -> Vec<f64> {
        let k = (self.branch.z_max / self.branch.z_step + 1e-9).floor() as usize;
        (1..=k).map(|i| i as f64 * self.branch.z_step).collect()
    }
}

/// Ground branch on the setup grid; continuation may stop early.
pub fn ground_branch(cfg: &RunConfig, setup: &Setup) -> Result<GroundBranch> {
    continue_ground(setup.spectral()?, &setup.pot, cfg.sigma, &cfg.z_list())
}

/// Modulation context when H has a bound state and the branch solves.
pub fn modulation_context(cfg: &RunConfig, setup: &Setup) -> Result<Option<ModulationContext>> {
    let Some(spectral) = &setup.spectral else {
        return Ok(None);
    };
    let branch = ground_branch(cfg, setup)?;
    Ok(Some(ModulationContext::new(spectral.clone(), &branch)?))
}

/// Construct the initial datum of a recipe on the setup grid.
pub fn build_datum(cfg: &RunConfig, recipe: &DatumRecipe, setup: &Setup) -> Result<RadialField> {
    match recipe {
        DatumRecipe::Soliton { z } => {
            if !(*z > 0.0) {
                return Err(LabError::InvalidParameter(format!("soliton datum needs z > 0, got {z}")));
            }
            let mut zs: Vec<f64> = cfg.z_list().into_iter().filter(|v| v < z).collect();
            zs.push(*z);
            let branch = continue_ground(setup.spectral()?, &setup.pot, cfg.sigma, &zs)?;
            if let Some(reason) = branch.truncated {
                return Err(LabError::BranchAnomaly(format!("ground branch stopped before z = {z}: {reason}")));
            }
            Ok(branch.points.last().expect("non-empty branch").phi.clone())
        }
        DatumRecipe::Excited { omega, scale_t } => {
            if cfg.sigma == Sigma::Defocusing {
                return Err(LabError::Precondition("excited solitons exist only for σ = +".into()));
            }
            let p = solve_excited(setup.spectral()?, &setup.pot, *omega)?;
            apply_scaling(&p.phi, ScalingOp { p: 2.0, t: *scale_t }, DEFAULT_T_MAX)
        }
        DatumRecipe::ScaledQ { alpha, amplitude } => {
            if !(*alpha > 0.0) {
                return Err(LabError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
            }
            let q = q_profile()?;
            Ok(RadialField::from_real_fn(&setup.grid, |r| amplitude * alpha * q.eval(alpha * r)))
        }
        DatumRecipe::Gaussian { amplitude, width, center } => {
            if !(*width > 0.0) {
                return Err(LabError::InvalidParameter(format!("width must be positive, got {width}")));
            }
            Ok(RadialField::from_real_fn(&setup.grid, |r| amplitude * (-((r - center) / width).powi(2)).exp()))
        }
        DatumRecipe::File { path } => {
            let text = fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
            let f = RadialField::from_text(&text)?;
            if !f.grid().same_as(&setup.grid) {
                return Err(LabError::GridMismatch(format!("{} is not on the configured grid", path.display())));
            }
            Ok(RadialField::new(setup.grid.clone(), f.into_values())?)
        }
    }
}

/// A forward run and, on request, the backward run by time reversal.
#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub forward: (TrajectoryRecord, RunVerdict),
    pub backward: Option<(TrajectoryRecord, RunVerdict)>,
}

pub fn is_real(u: &RadialField) -> bool {
    u.values().iter().all(|v| v.im == 0.0)
}

/// Run the configured datum.
pub fn evolve(cfg: &RunConfig, backward: bool) -> Result<EvolveOutcome> {
    let setup = Setup::new(cfg, cfg.grid)?;
    let u0 = build_datum(cfg, &cfg.data, &setup)?;
    let ctx = modulation_context(cfg, &setup)?;
    let ecfg = cfg.evolution_config();
    let forward = run(&u0, &setup.pot, cfg.sigma, &ecfg, ctx.as_ref())?;
    let backward = if backward { Some(run_backward(&u0, &setup.pot, cfg.sigma, &ecfg, ctx.as_ref())?) } else { None };
    Ok(EvolveOutcome { forward, backward })
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| LabError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))
}

/// Header line recording the seed, written first in every output file.
pub(crate) fn seed_line(cfg: &RunConfig) -> String {
    format!("# seed = {}\n", cfg.seed)
}

/// Write the trajectory CSV and verdict files of a run.
pub fn write_evolution(cfg: &RunConfig, out: &EvolveOutcome, dir: &Path) -> Result<()> {
    let (rec, verdict) = &out.forward;
    write_file(dir, "trajectory.csv", &(seed_line(cfg) + &rec.to_csv()))?;
    let mut v = format!("{}forward = {}\nforward_t = {:.6e}\nforward_evidence = {}\n", seed_line(cfg), verdict.outcome, verdict.t_detect, verdict.evidence);
    if let Some((brec, bverdict)) = &out.backward {
        write_file(dir, "trajectory_backward.csv", &(seed_line(cfg) + &brec.to_csv()))?;
        v.push_str(&format!(
            "backward = {}\nbackward_t = {:.6e}\nbackward_evidence = {}\n",
            bverdict.outcome, bverdict.t_detect, bverdict.evidence
        ));
    }
    write_file(dir, "verdict.txt", &v)
}

/// A unit-phase complex number.
pub(crate) fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Linear spectral data on the evolution grid: `spectrum.txt` with e₀, e₁
/// and the bound-state count, `phi0.txt` with the normalized bound state.
pub fn write_spectrum(cfg: &RunConfig, dir: &Path) -> Result<SpectralData> {
    let setup = Setup::new(cfg, cfg.grid)?;
    let s = setup.spectral()?.clone();
    let text = format!("{}e0 = {:.15e}\ne1 = {:.15e}\nbound_states = {}\n", seed_line(cfg), s.e0, s.e1, s.n_neg);
    write_file(dir, "spectrum.txt", &text)?;
    write_file(dir, "phi0.txt", &s.phi0.to_text())?;
    Ok(s)
}
