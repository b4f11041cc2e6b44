//! Time integration of iu_t + Hu = σ|u|²u with conservation monitoring,
//! modulation diagnostics and blow-up/scattering detection.

mod detect;
mod stepper;

pub use detect::{detect_blowup, detect_scattering, gradient_criterion, Probe};
pub use stepper::{StepMethod, Stepper};

use std::fmt;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::functionals::{evaluate, FunctionalReport, Sigma};
use crate::grid::RadialField;
use crate::modulation::{decompose, virial_monitor, ModulationContext, ModulationFrame, StAccumulator, VirialCutoff};
use crate::spectral::SampledPotential;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    /// Largest step.
    pub dt_max: f64,
    pub dt_min: f64,
    pub t_max: f64,
    /// Adaptive step dt = theta / max|u|², clamped to [dt_min, dt_max].
    pub theta: f64,
    pub sample_interval: f64,
    /// Also sample after this many steps, so fast collapse is resolved.
    pub sample_steps: usize,
    pub growth_factor: f64,
    pub drift_bound: f64,
    /// Detector window width.
    pub window: f64,
    pub virial_radius: f64,
    pub max_steps: usize,
    pub fp_max_iter: usize,
    pub fp_tol: f64,
    /// Keep every modulation frame in the record.
    pub keep_frames: bool,
    /// Keep a copy of the field at every sample.
    pub keep_fields: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt_max: 1e-2,
            dt_min: 1e-7,
            t_max: 50.0,
            theta: 0.1,
            sample_interval: 0.1,
            sample_steps: 25,
            growth_factor: 20.0,
            drift_bound: 1e-4,
            window: 5.0,
            virial_radius: 10.0,
            max_steps: 2_000_000,
            fp_max_iter: 50,
            fp_tol: 1e-12,
            keep_frames: false,
            keep_fields: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_max", self.dt_max),
            ("dt_min", self.dt_min),
            ("t_max", self.t_max),
            ("theta", self.theta),
            ("sample_interval", self.sample_interval),
            ("growth_factor", self.growth_factor),
            ("drift_bound", self.drift_bound),
            ("window", self.window),
            ("virial_radius", self.virial_radius),
            ("fp_tol", self.fp_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(LabError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dt_min > self.dt_max {
            return Err(LabError::InvalidParameter("dt_min exceeds dt_max".into()));
        }
        if self.fp_max_iter == 0 || self.sample_steps == 0 {
            return Err(LabError::InvalidParameter("fp_max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub t: f64,
    pub u: RadialField,
    pub dt: f64,
    pub step_count: usize,
    pub m_drift: f64,
    pub e_drift: f64,
    m0: f64,
    e0: f64,
}

impl EvolutionState {
    pub fn new(u: RadialField, pot: &SampledPotential, sigma: Sigma, dt: f64) -> Result<Self> {
        let rep = evaluate(&u, pot, sigma)?;
        Ok(Self { t: 0.0, u, dt, step_count: 0, m_drift: 0.0, e_drift: 0.0, m0: rep.m, e0: rep.e })
    }

    fn update_drift(&mut self, rep: &FunctionalReport) {
        self.m_drift = (rep.m - self.m0).abs() / self.m0.max(f64::MIN_POSITIVE);
        self.e_drift = (rep.e - self.e0).abs() / (self.e0.abs() + 1.0);
    }
}

/// Adaptive step size.
pub fn choose_dt(u: &RadialField, cfg: &EvolutionConfig) -> f64 {
    let peak = u.max_abs().powi(2);
    if peak > 0.0 {
        (cfg.theta / peak).clamp(cfg.dt_min, cfg.dt_max)
    } else {
        cfg.dt_max
    }
}

/// Advance by up to `dt`, halving on non-convergence down to dt_min.
/// Returns the step actually taken.
pub fn step(state: &mut EvolutionState, stepper: &Stepper, dt: f64, dt_min: f64) -> Result<(f64, StepMethod)> {
    let mut h = dt;
    loop {
        match stepper.try_step(state.u.values(), h) {
            Ok((next, method)) => {
                state.u = RadialField::new(state.u.grid().clone(), next)?;
                state.t += h;
                state.dt = h;
                state.step_count += 1;
                return Ok((h, method));
            }
            Err(_) if h * 0.5 >= dt_min => h *= 0.5,
            Err(_) => return Err(LabError::StepFailure(state.t)),
        }
    }
}

/// Step backward in time by conjugation: u(−h) = conj(S_h(conj u)).
pub fn step_backward(u: &RadialField, stepper: &Stepper, h: f64) -> Result<RadialField> {
    let c: Vec<Complex64> = u.values().iter().map(|v| v.conj()).collect();
    let (next, _) = stepper.try_step(&c, h)?;
    RadialField::new(u.grid().clone(), next.into_iter().map(|v| v.conj()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    BlowUp,
    ScatterToGround,
    Undecided,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::BlowUp => "blow_up",
            Outcome::ScatterToGround => "scatter_to_ground",
            Outcome::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunVerdict {
    pub outcome: Outcome,
    pub t_detect: f64,
    pub evidence: String,
}

#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    pub report: FunctionalReport,
    pub gradnorm: f64,
    pub l4norm: f64,
    pub max_abs: f64,
    pub virial_lhs: f64,
    pub virial_rhs: f64,
    /// None when modulation is tracked but the frame failed.
    pub z: Option<Complex64>,
    pub modulated: bool,
    pub xi_l6: f64,
    pub st_integral: f64,
    pub st: f64,
    pub orth_residual: f64,
    pub mass_split_error: f64,
    pub dt: f64,
}

impl TrajectorySample {
    /// |z|, taken as 0 for runs without modulation tracking.
    pub fn z_abs(&self) -> Option<f64> {
        if self.modulated {
            self.z.map(|z| z.norm())
        } else {
            Some(0.0)
        }
    }

    pub fn csv_row(&self) -> String {
        let z = match (self.modulated, self.z) {
            (true, Some(z)) => format!("{:.12e}", z.norm()),
            (true, None) => "nan".into(),
            (false, _) => "0".into(),
        };
        format!(
            "{:.10e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{:.12e},{:.6e}",
            self.t,
            self.report.m,
            self.report.e,
            self.gradnorm,
            self.l4norm,
            self.report.k2,
            self.virial_lhs,
            self.virial_rhs,
            z,
            self.xi_l6,
            self.st,
            self.dt
        )
    }
}

pub const TRAJECTORY_CSV_HEADER: &str = "t,M,E,gradnorm,L4norm,K2,virial_lhs,virial_rhs,|z|,xi_L6,ST_accum,dt";

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub sigma: Sigma,
    pub samples: Vec<TrajectorySample>,
    pub frames: Vec<ModulationFrame>,
    pub fields: Vec<RadialField>,
    pub final_state: EvolutionState,
    pub newton_steps: usize,
    pub halvings: usize,
}

impl TrajectoryRecord {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRAJECTORY_CSV_HEADER);
        s.push('\n');
        for x in &self.samples {
            s.push_str(&x.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.samples[0].report.m;
        self.samples.iter().map(|s| (s.report.m - m0).abs() / m0).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.samples[0].report.e;
        self.samples.iter().map(|s| (s.report.e - e0).abs() / (e0.abs() + 1.0)).fold(0.0, f64::max)
    }
}

struct Sampler<'a> {
    pot: &'a SampledPotential,
    sigma: Sigma,
    stepper: &'a Stepper,
    cutoff: VirialCutoff,
    modulation: Option<&'a ModulationContext>,
    z_guess: Option<Complex64>,
    st: StAccumulator,
}

impl Sampler<'_> {
    fn sample(&mut self, u: &RadialField, t: f64, dt: f64) -> Result<(TrajectorySample, Option<ModulationFrame>)> {
        let report = evaluate(u, self.pot, self.sigma)?;
        let (virial_lhs, virial_rhs) = match (self.stepper.try_step(u.values(), dt), step_backward(u, self.stepper, dt)) {
            (Ok((next, _)), Ok(prev)) => {
                let next = RadialField::new(u.grid().clone(), next)?;
                virial_monitor(u, &prev, &next, &self.cutoff, self.pot, self.sigma, dt)?
            }
            _ => (f64::NAN, f64::NAN),
        };
        let mut frame = None;
        let (z, xi_l6, orth, split) = match self.modulation {
            Some(ctx) => match decompose(u, ctx, self.z_guess, t) {
                Ok(fr) => {
                    self.z_guess = Some(fr.z);
                    let out = (Some(fr.z), fr.xi.norm_lp(6.0), fr.orth_residual, fr.mass_split_error(u)?);
                    frame = Some(fr);
                    out
                }
                Err(_) => {
                    self.z_guess = None;
                    (None, f64::NAN, f64::NAN, f64::NAN)
                }
            },
            None => (None, u.norm_lp(6.0), 0.0, 0.0),
        };
        if xi_l6.is_finite() {
            self.st.push(t, xi_l6);
        }
        let sample = TrajectorySample {
            t,
            gradnorm: report.gradient_norm(),
            l4norm: u.norm_lp(4.0),
            max_abs: u.max_abs(),
            report,
            virial_lhs,
            virial_rhs,
            z,
            modulated: self.modulation.is_some(),
            xi_l6,
            st_integral: self.st.integral(),
            st: self.st.value(),
            orth_residual: orth,
            mass_split_error: split,
            dt,
        };
        Ok((sample, frame))
    }
}

/// Evolve u0 forward until t_max or detection.
pub fn run(
    u0: &RadialField,
    pot: &SampledPotential,
    sigma: Sigma,
    cfg: &EvolutionConfig,
    modulation: Option<&ModulationContext>,
) -> Result<(TrajectoryRecord, RunVerdict)> {
    cfg.validate()?;
    if !u0.grid().same_as(&pot.grid) {
        return Err(LabError::GridMismatch("datum and potential grids differ".into()));
    }
    let mut stepper = Stepper::new(pot, sigma);
    stepper.fp_max_iter = cfg.fp_max_iter;
    stepper.fp_tol = cfg.fp_tol;
    let mut sampler = Sampler {
        pot,
        sigma,
        stepper: &stepper,
        cutoff: VirialCutoff::new(u0.grid(), cfg.virial_radius)?,
        modulation,
        z_guess: None,
        st: StAccumulator::new(),
    };
    let dt0 = choose_dt(u0, cfg);
    let mut state = EvolutionState::new(u0.clone(), pot, sigma, dt0)?;
    let mut record = TrajectoryRecord {
        sigma,
        samples: Vec::new(),
        frames: Vec::new(),
        fields: Vec::new(),
        final_state: state.clone(),
        newton_steps: 0,
        halvings: 0,
    };
    let push = |record: &mut TrajectoryRecord, s: TrajectorySample, f: Option<ModulationFrame>, u: &RadialField| {
        record.samples.push(s);
        if cfg.keep_frames {
            if let Some(f) = f {
                record.frames.push(f);
            }
        }
        if cfg.keep_fields {
            record.fields.push(u.clone());
        }
    };
    let (s0, f0) = sampler.sample(u0, 0.0, dt0)?;
    let grad0 = s0.gradnorm;
    push(&mut record, s0, f0, u0);
    let mut next_sample = cfg.sample_interval;
    let mut last_sample_step = 0;
    let verdict = loop {
        if state.t >= cfg.t_max - 1e-12 {
            break RunVerdict { outcome: Outcome::Undecided, t_detect: state.t, evidence: "reached t_max".into() };
        }
        if state.step_count >= cfg.max_steps {
            break RunVerdict { outcome: Outcome::Undecided, t_detect: state.t, evidence: "step budget exhausted".into() };
        }
        let adaptive = choose_dt(&state.u, cfg);
        let at_dt_min = adaptive <= cfg.dt_min;
        let mut dt = adaptive;
        let to_sample = next_sample - state.t;
        if to_sample < dt && to_sample >= cfg.dt_min {
            dt = to_sample;
        }
        match step(&mut state, &stepper, dt, cfg.dt_min) {
            Ok((taken, method)) => {
                if taken < dt {
                    record.halvings += 1;
                }
                if matches!(method, StepMethod::Newton(_)) {
                    record.newton_steps += 1;
                }
            }
            Err(_) => {
                let rep = evaluate(&state.u, pot, sigma)?;
                let probe = Probe { t: state.t, gradnorm: rep.gradient_norm(), k2: rep.k2, at_dt_min: true };
                let evidence = if sigma == Sigma::Focusing {
                    gradient_criterion(&record.samples, &probe, grad0, cfg)
                } else {
                    None
                };
                break match evidence {
                    Some(e) => RunVerdict {
                        outcome: Outcome::BlowUp,
                        t_detect: state.t,
                        evidence: format!("step failure at dt_min; {e}"),
                    },
                    None => RunVerdict {
                        outcome: Outcome::Undecided,
                        t_detect: state.t,
                        evidence: format!(
                            "step failure at dt_min without the gradient criterion (gradnorm {:.3e}, initial {:.3e}, K2 {:.3e})",
                            probe.gradnorm, grad0, probe.k2
                        ),
                    },
                };
            }
        }
        if sigma == Sigma::Focusing && at_dt_min {
            let rep = evaluate(&state.u, pot, sigma)?;
            let probe = Probe { t: state.t, gradnorm: rep.gradient_norm(), k2: rep.k2, at_dt_min };
            if let Some(e) = detect_blowup(&record.samples, &probe, grad0, sigma, cfg) {
                let (s, f) = sampler.sample(&state.u, state.t, state.dt)?;
                push(&mut record, s, f, &state.u);
                break RunVerdict { outcome: Outcome::BlowUp, t_detect: state.t, evidence: e };
            }
        }
        let on_time = state.t >= next_sample - 1e-12;
        if on_time || state.step_count - last_sample_step >= cfg.sample_steps {
            let (s, f) = sampler.sample(&state.u, state.t, state.dt)?;
            state.update_drift(&s.report);
            push(&mut record, s, f, &state.u);
            last_sample_step = state.step_count;
            if on_time {
                next_sample += cfg.sample_interval;
            }
            if state.m_drift > cfg.drift_bound || state.e_drift > cfg.drift_bound {
                break RunVerdict {
                    outcome: Outcome::Undecided,
                    t_detect: state.t,
                    evidence: format!(
                        "run invalidated: drift M {:.2e}, E {:.2e} above {:.1e}",
                        state.m_drift, state.e_drift, cfg.drift_bound
                    ),
                };
            }
            if let Some(e) = detect_scattering(&record.samples, cfg) {
                break RunVerdict { outcome: Outcome::ScatterToGround, t_detect: state.t, evidence: e };
            }
        }
    };
    record.final_state = state;
    Ok((record, verdict))
}

/// Backward run by time reversal: evolve conj(u0) forward; the recorded
/// fields represent u(−t).
pub fn run_backward(
    u0: &RadialField,
    pot: &SampledPotential,
    sigma: Sigma,
    cfg: &EvolutionConfig,
    modulation: Option<&ModulationContext>,
) -> Result<(TrajectoryRecord, RunVerdict)> {
    let (mut rec, verdict) = run(&u0.conj(), pot, sigma, cfg, modulation)?;
    rec.final_state.u = rec.final_state.u.conj();
    for f in rec.fields.iter_mut() {
        *f = f.conj();
    }
    for s in rec.samples.iter_mut() {
        s.z = s.z.map(|z| z.conj());
    }
    for f in rec.frames.iter_mut() {
        f.z = f.z.conj();
        f.eta = f.eta.conj();
        f.xi = f.xi.conj();
    }
    Ok((rec, verdict))
}
