//! Classification sweeps: predict blow-up from the initial functionals, run
//! forward and backward, and compare.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{is_real, modulation_context, phase, seed_line, write_file, GridSpec, RunConfig, Setup, SweepFamily};
use crate::error::{LabError, Result};
use crate::evolution::{run, run_backward, Outcome, RunVerdict, TrajectoryRecord};
use crate::functionals::{
    apply_scaling, evaluate, DichotomyCalibration, FunctionalReport, ScalingOp, Sigma, DEFAULT_T_MAX,
};
use crate::grid::RadialField;
use crate::modulation::ModulationContext;
use crate::par;
use crate::solitons::{continue_ground, energy_curves, small_mass_surrogate, solve_excited, GroundBranch, SolitonBranchPoint};

/// Branch data shared by every run of a sweep on one grid.
pub struct SweepContext {
    pub setup: Setup,
    pub modulation: Option<ModulationContext>,
    pub ground: Option<GroundBranch>,
    pub excited: Vec<SolitonBranchPoint>,
    /// Small-mass surrogate: data above it are excluded.
    pub mu_hat: f64,
    pub calibration: Option<DichotomyCalibration>,
}

impl SweepContext {
    pub fn new(cfg: &RunConfig, spec: GridSpec) -> Result<Self> {
        let setup = Setup::new(cfg, spec)?;
        let modulation = modulation_context(cfg, &setup)?;
        let ground = match &setup.spectral {
            Some(s) => Some(continue_ground(s, &setup.pot, cfg.sigma, &cfg.z_list())?),
            None => None,
        };
        let mut excited = Vec::new();
        if cfg.sigma == Sigma::Focusing {
            let spectral = setup.spectral()?;
            for &w in &cfg.branch.excited_omegas {
                if let Ok(p) = solve_excited(spectral, &setup.pot, w) {
                    excited.push(p);
                }
            }
        }
        let (mu_hat, calibration) = match (&ground, cfg.sigma) {
            (Some(g), Sigma::Focusing) if excited.len() >= 2 => {
                let mu = small_mass_surrogate(&g.points, &excited)?;
                let gr: Vec<FunctionalReport> = g.points.iter().map(|p| p.report).collect();
                let xr: Vec<FunctionalReport> = excited.iter().map(|p| p.report).collect();
                (mu, DichotomyCalibration::from_branches(&gr, &xr, mu).ok())
            }
            (Some(g), Sigma::Defocusing) => (g.mass_curve.last().copied().unwrap_or(f64::INFINITY), None),
            _ => (f64::INFINITY, None),
        };
        Ok(Self { setup, modulation, ground, excited, mu_hat, calibration })
    }

    /// 𝓔₁(m), +∞ without an excited branch. Below the smallest tabulated
    /// excited mass the value there is returned: 𝓔₁ is decreasing, so it is
    /// a lower bound and the energy hypothesis stays conservative.
    pub fn e1(&self, m: f64) -> Result<f64> {
        match &self.ground {
            Some(g) if !self.excited.is_empty() => {
                let m_min = self.excited.iter().map(|p| p.report.m).fold(f64::INFINITY, f64::min);
                Ok(energy_curves(&g.points, Some(&self.excited), &[m.max(m_min)])?.e1[0])
            }
            _ if self.excited.is_empty() => Ok(f64::INFINITY),
            _ => Err(LabError::NonOverlapping),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Bump {
    amplitude: f64,
    center: f64,
    width: f64,
    phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum DatumKind {
    /// S^t₂ of the excited soliton at ω.
    Ladder { omega: f64, t: f64 },
    /// base · φ₀ + Σ bumps.
    Bumps { base: f64, bumps: Vec<Bump> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepDatum {
    pub id: usize,
    pub label: String,
    kind: DatumKind,
}

impl SweepDatum {
    pub fn build(&self, ctx: &SweepContext) -> Result<RadialField> {
        let grid = &ctx.setup.grid;
        match &self.kind {
            DatumKind::Ladder { omega, t } => {
                let p = solve_excited(ctx.setup.spectral()?, &ctx.setup.pot, *omega)?;
                apply_scaling(&p.phi, ScalingOp { p: 2.0, t: *t }, DEFAULT_T_MAX)
            }
            DatumKind::Bumps { base, bumps } => {
                let mut u = RadialField::from_fn(grid, |r| {
                    bumps
                        .iter()
                        .map(|b| phase(b.phase) * (b.amplitude * (-((r - b.center) / b.width).powi(2)).exp()))
                        .sum()
                });
                if *base != 0.0 {
                    u = u.axpy(num_complex::Complex64::new(*base, 0.0), &ctx.setup.spectral()?.phi0)?;
                }
                Ok(u)
            }
        }
    }
}

fn random_bumps(rng: &mut ChaCha8Rng, count: usize, amplitude: f64) -> Vec<Bump> {
    (0..count)
        .map(|_| Bump {
            amplitude: amplitude * rng.random_range(0.5..1.5),
            center: rng.random_range(0.0..5.0),
            width: rng.random_range(0.5..2.0),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect()
}

/// The datum family of the configuration, deterministic in the seed.
pub fn generate_data(cfg: &RunConfig) -> Vec<SweepDatum> {
    let s = &cfg.sweep;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match s.family {
        SweepFamily::Ladder => {
            let per_side = (s.count / (2 * s.omegas.len())).max(1);
            let mut out = Vec::new();
            for &omega in &s.omegas {
                for sign in [-1.0, 1.0] {
                    for j in 0..per_side {
                        let frac = if per_side == 1 { 0.0 } else { j as f64 / (per_side - 1) as f64 };
                        let t = sign * (s.t_min + (s.t_max - s.t_min) * frac);
                        out.push((format!("ladder omega={omega} t={t:.4}"), DatumKind::Ladder { omega, t }));
                    }
                }
            }
            out.into_iter().enumerate().map(|(id, (label, kind))| SweepDatum { id, label, kind }).collect()
        }
        SweepFamily::Small => (0..s.count)
            .map(|id| {
                let base = rng.random_range(0.2..0.8);
                let bumps = random_bumps(&mut rng, 2, s.amplitude);
                SweepDatum { id, label: format!("small base={base:.4}"), kind: DatumKind::Bumps { base, bumps } }
            })
            .collect(),
        SweepFamily::Random => (0..s.count)
            .map(|id| {
                let bumps = random_bumps(&mut rng, 3, s.amplitude);
                SweepDatum { id, label: "random bumps".into(), kind: DatumKind::Bumps { base: 0.0, bumps } }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    BlowUp,
    Global,
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Prediction::BlowUp => "blow_up",
            Prediction::Global => "global",
        })
    }
}

/// Blow-up iff σ = +, ‖∇u‖ > gate and K₂ < 0.
pub fn predict(rep: &FunctionalReport, gate: f64) -> Prediction {
    if rep.sigma == Sigma::Focusing && rep.gradient_norm() > gate && rep.k2 < 0.0 {
        Prediction::BlowUp
    } else {
        Prediction::Global
    }
}

fn matches(p: Prediction, o: Outcome) -> Option<bool> {
    match o {
        Outcome::Undecided => None,
        Outcome::BlowUp => Some(p == Prediction::BlowUp),
        Outcome::ScatterToGround => Some(p == Prediction::Global),
    }
}

/// Once (σ = +, ‖∇u‖ > gate, K₂ < 0) holds at a sample it holds at every
/// later sample.
pub fn criterion_persists(rec: &TrajectoryRecord, gate: f64) -> bool {
    let mut on = false;
    for s in &rec.samples {
        let holds = predict(&s.report, gate) == Prediction::BlowUp;
        if on && !holds {
            return false;
        }
        on |= holds;
    }
    true
}

#[derive(Debug, Clone)]
pub struct ClassificationVerdict {
    pub id: usize,
    pub label: String,
    pub m: f64,
    pub e: f64,
    pub k2: f64,
    pub gradnorm: f64,
    pub e1: f64,
    pub predicted: Prediction,
    pub forward: Option<RunVerdict>,
    pub backward: Option<RunVerdict>,
    /// None when excluded or no run decided.
    pub agree: Option<bool>,
    /// Verdict changed on the 1.5 r_max grid.
    pub grid_flag: bool,
    /// Prediction changes when the gate is halved or doubled.
    pub gate_flag: bool,
    pub excluded: Option<String>,
    /// Blow-up runs only: the criterion persisted along the trajectory.
    pub persistence: Option<bool>,
    /// Functionals of every recorded sample of both runs.
    pub reports: Vec<FunctionalReport>,
}

pub const SWEEP_CSV_HEADER: &str =
    "id,label,M,E,K2,gradnorm,E1,predicted,forward,t_forward,backward,t_backward,agree,grid_flag,gate_flag,excluded";

impl ClassificationVerdict {
    pub fn csv_row(&self) -> String {
        let v = |x: &Option<RunVerdict>| match x {
            Some(v) => (v.outcome.to_string(), format!("{:.6e}", v.t_detect)),
            None => ("none".into(), "nan".into()),
        };
        let (f, tf) = v(&self.forward);
        let (b, tb) = v(&self.backward);
        let agree = match self.agree {
            Some(a) => a.to_string(),
            None => "none".into(),
        };
        format!(
            "{},{},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{},{},{},{},{},{},{},{},{}",
            self.id,
            self.label,
            self.m,
            self.e,
            self.k2,
            self.gradnorm,
            self.e1,
            self.predicted,
            f,
            tf,
            b,
            tb,
            agree,
            self.grid_flag,
            self.gate_flag,
            self.excluded.as_deref().unwrap_or("").replace(',', ";")
        )
    }

    /// Decided and undecided outcomes of the runs that were made.
    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.forward.iter().chain(&self.backward).map(|v| v.outcome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub total: usize,
    pub excluded: usize,
    pub decided: usize,
    pub agreed: usize,
    pub undecided: usize,
    pub agreement_rate: f64,
    /// Blow-up verdicts on data predicted global.
    pub unpredicted_blowups: usize,
    pub persistence_violations: usize,
    pub unflagged_disagreements: usize,
    pub grid_flags: usize,
    pub gate_flags: usize,
    pub mu_hat: f64,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub verdicts: Vec<ClassificationVerdict>,
    pub summary: SweepSummary,
    pub calibration: Option<DichotomyCalibration>,
    pub seed: u64,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# seed = {}\n{SWEEP_CSV_HEADER}\n", self.seed);
        for v in &self.verdicts {
            s.push_str(&v.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn summary_text(&self, cfg: &RunConfig) -> String {
        let m = &self.summary;
        let mut s = seed_line(cfg);
        let _ = writeln!(s, "total = {}", m.total);
        let _ = writeln!(s, "excluded = {}", m.excluded);
        let _ = writeln!(s, "decided = {}", m.decided);
        let _ = writeln!(s, "undecided = {}", m.undecided);
        let _ = writeln!(s, "agreed = {}", m.agreed);
        let _ = writeln!(s, "agreement_rate = {:.4}", m.agreement_rate);
        let _ = writeln!(s, "unpredicted_blowups = {}", m.unpredicted_blowups);
        let _ = writeln!(s, "persistence_violations = {}", m.persistence_violations);
        let _ = writeln!(s, "unflagged_disagreements = {}", m.unflagged_disagreements);
        let _ = writeln!(s, "grid_flags = {}", m.grid_flags);
        let _ = writeln!(s, "gate_flags = {}", m.gate_flags);
        let _ = writeln!(s, "mu_hat = {:.6e}", m.mu_hat);
        s
    }

    /// `sweep.csv` and `sweep_summary.txt`.
    pub fn write(&self, cfg: &RunConfig, dir: &Path) -> Result<()> {
        write_file(dir, "sweep.csv", &self.to_csv())?;
        write_file(dir, "sweep_summary.txt", &self.summary_text(cfg))
    }
}

fn classify(
    cfg: &RunConfig,
    ctx: &SweepContext,
    enlarged: Option<&SweepContext>,
    datum: &SweepDatum,
) -> Result<ClassificationVerdict> {
    let u0 = datum.build(ctx)?;
    let rep = evaluate(&u0, &ctx.setup.pot, cfg.sigma)?;
    let gate = cfg.thresholds.gate;
    let predicted = predict(&rep, gate);
    let gate_flag = predict(&rep, 0.5 * gate) != predicted || predict(&rep, 2.0 * gate) != predicted;
    let mut out = ClassificationVerdict {
        id: datum.id,
        label: datum.label.clone(),
        m: rep.m,
        e: rep.e,
        k2: rep.k2,
        gradnorm: rep.gradient_norm(),
        e1: f64::NAN,
        predicted,
        forward: None,
        backward: None,
        agree: None,
        grid_flag: false,
        gate_flag,
        excluded: None,
        persistence: None,
        reports: vec![rep],
    };
    if rep.m > ctx.mu_hat {
        out.excluded = Some(format!("mass {:.4e} above surrogate {:.4e}", rep.m, ctx.mu_hat));
        return Ok(out);
    }
    let e1 = match ctx.e1(rep.m) {
        Ok(e) => e,
        Err(e) => {
            out.excluded = Some(format!("no excited energy at this mass: {e}"));
            return Ok(out);
        }
    };
    out.e1 = e1;
    if e1.is_finite() && rep.e >= e1 - cfg.sweep.margin * e1.abs() {
        out.excluded = Some(format!("energy {:.4e} not below E1 {:.4e} by the margin", rep.e, e1));
        return Ok(out);
    }
    let ecfg = cfg.evolution_config();
    let ctxm = ctx.modulation.as_ref();
    let (frec, fv) = run(&u0, &ctx.setup.pot, cfg.sigma, &ecfg, ctxm)?;
    // A real datum is its own conjugate, so its backward run is the forward run.
    let (brec, bv) = if is_real(&u0) {
        (frec.clone(), fv.clone())
    } else {
        run_backward(&u0, &ctx.setup.pot, cfg.sigma, &ecfg, ctxm)?
    };
    let mut persistence = None;
    for (rec, v) in [(&frec, &fv), (&brec, &bv)] {
        if v.outcome == Outcome::BlowUp {
            persistence = Some(persistence.unwrap_or(true) && criterion_persists(rec, gate));
        }
    }
    out.persistence = persistence;
    out.reports.extend(frec.samples.iter().chain(&brec.samples).map(|s| s.report));
    if let Some(big) = enlarged {
        let u_big = datum.build(big)?;
        let (_, bigv) = run(&u_big, &big.setup.pot, cfg.sigma, &ecfg, big.modulation.as_ref())?;
        out.grid_flag = bigv.outcome != fv.outcome;
    }
    out.forward = Some(fv);
    out.backward = Some(bv);
    let checks: Vec<bool> = out.outcomes().filter_map(|o| matches(predicted, o)).collect();
    out.agree = if checks.is_empty() { None } else { Some(checks.iter().all(|&c| c)) };
    Ok(out)
}

fn summarize(verdicts: &[ClassificationVerdict], mu_hat: f64) -> SweepSummary {
    let mut s = SweepSummary {
        total: verdicts.len(),
        excluded: 0,
        decided: 0,
        agreed: 0,
        undecided: 0,
        agreement_rate: f64::NAN,
        unpredicted_blowups: 0,
        persistence_violations: 0,
        unflagged_disagreements: 0,
        grid_flags: 0,
        gate_flags: 0,
        mu_hat,
    };
    for v in verdicts {
        if v.excluded.is_some() {
            s.excluded += 1;
            continue;
        }
        s.grid_flags += v.grid_flag as usize;
        s.gate_flags += v.gate_flag as usize;
        match v.agree {
            Some(a) => {
                s.decided += 1;
                if a {
                    s.agreed += 1;
                } else if !(v.grid_flag || v.gate_flag) {
                    s.unflagged_disagreements += 1;
                }
            }
            None => s.undecided += 1,
        }
        if v.predicted == Prediction::Global && v.outcomes().any(|o| o == Outcome::BlowUp) {
            s.unpredicted_blowups += 1;
        }
        if v.persistence == Some(false) {
            s.persistence_violations += 1;
        }
    }
    if s.decided > 0 {
        s.agreement_rate = s.agreed as f64 / s.decided as f64;
    }
    s
}

/// Run the configured sweep. Runs execute in a worker pool and are merged
/// by datum index.
pub fn sweep_classification(cfg: &RunConfig) -> Result<SweepTable> {
    let ctx = SweepContext::new(cfg, cfg.grid)?;
    let enlarged = if cfg.sweep.sensitivity { Some(SweepContext::new(cfg, cfg.grid.enlarged(1.5))?) } else { None };
    let data = generate_data(cfg);
    let results = par::map(cfg.execution(), &data, |d| classify(cfg, &ctx, enlarged.as_ref(), d));
    let verdicts = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = summarize(&verdicts, ctx.mu_hat);
    Ok(SweepTable { verdicts, summary, calibration: ctx.calibration, seed: cfg.seed })
}
