//! Monte-Carlo surrogate for the lower bound κ(μ, δ) on |K₂| over fields
//! with M ≤ μ, E ≤ 𝓔₁(μ) − δ and ‖∇φ‖ ≥ 1.
//!
//! The minimum over samples is an upper bound for the true infimum.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};
use crate::functionals::{apply_scaling, evaluate, FunctionalReport, ScalingOp, Sigma, DEFAULT_T_MAX};
use crate::grid::RadialField;
use crate::par::{self, Execution};
use crate::spectral::SampledPotential;

use super::SolitonBranchPoint;

pub struct KappaContext<'a> {
    pub pot: &'a SampledPotential,
    /// Excited soliton with mass close to μ, used for the deterministic sample.
    pub excited: &'a SolitonBranchPoint,
    /// 𝓔₁(μ)
    pub e1: f64,
    /// Lower bound on ‖∇φ‖.
    pub gate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSampler {
    pub samples: usize,
    pub seed: u64,
    /// Ladder search range |t| ≤ t_range along S^t₂.
    pub t_range: f64,
    pub ladder_points: usize,
    pub exec: Execution,
}

impl Default for KappaSampler {
    fn default() -> Self {
        Self { samples: 64, seed: 7, t_range: 2.0, ladder_points: 41, exec: Execution::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaEstimate {
    /// Smallest |K₂| found on a feasible field.
    pub value: f64,
    pub feasible: usize,
    /// A feasible field with |K₂| < 10⁻⁶ was found.
    pub regime_violation: bool,
    /// |K₂| of the excited soliton moved to E = 𝓔₁ − δ along the ladder.
    pub excited_sample: Option<f64>,
}

struct Problem<'a> {
    ctx: &'a KappaContext<'a>,
    mu: f64,
    e_cap: f64,
}

impl Problem<'_> {
    fn report(&self, f: &RadialField) -> Result<FunctionalReport> {
        evaluate(f, self.ctx.pot, Sigma::Focusing)
    }

    fn feasible(&self, r: &FunctionalReport) -> bool {
        r.m <= self.mu * (1.0 + 1e-12) && r.e <= self.e_cap && r.gradient_norm() >= self.ctx.gate
    }

    fn ladder(&self, f: &RadialField, t: f64) -> Result<FunctionalReport> {
        self.report(&apply_scaling(f, ScalingOp { p: 2.0, t }, DEFAULT_T_MAX)?)
    }

    /// Smallest feasible |K₂| along S^t₂ f, |t| ≤ t_range: grid scan then
    /// golden-section refinement around the best grid point.
    fn descend(&self, f: &RadialField, sampler: &KappaSampler) -> Result<Option<f64>> {
        let k = sampler.ladder_points.max(3);
        let ts: Vec<f64> = (0..k).map(|i| -sampler.t_range + 2.0 * sampler.t_range * i as f64 / (k - 1) as f64).collect();
        let mut best: Option<(f64, f64)> = None;
        for &t in &ts {
            let r = self.ladder(f, t)?;
            if self.feasible(&r) && best.is_none_or(|(_, v)| r.k2.abs() < v) {
                best = Some((t, r.k2.abs()));
            }
        }
        let Some((t0, mut v)) = best else { return Ok(None) };
        let h = 2.0 * sampler.t_range / (k - 1) as f64;
        let (mut a, mut b) = (t0 - h, t0 + h);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let eval = |t: f64| -> Result<f64> {
            let r = self.ladder(f, t)?;
            Ok(if self.feasible(&r) { r.k2.abs() } else { f64::INFINITY })
        };
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (eval(c)?, eval(d)?);
        for _ in 0..30 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = eval(d)?;
            }
        }
        v = v.min(fc).min(fd);
        Ok(Some(v))
    }

    /// Move the (mass-adjusted) excited soliton along the ladder to the
    /// energy cap on either side; |K₂| at the first feasible crossing.
    fn excited_sample(&self) -> Result<Option<f64>> {
        let x = &self.ctx.excited;
        let scale = (self.mu / x.report.m).sqrt().min(1.0);
        let f = x.phi.scale(Complex64::new(scale, 0.0));
        let mut best: Option<f64> = None;
        for dir in [1.0, -1.0] {
            let energy = |t: f64| -> Result<f64> { Ok(self.ladder(&f, dir * t)?.e) };
            if energy(0.0)? <= self.e_cap {
                let r = self.report(&f)?;
                if self.feasible(&r) {
                    best = Some(best.map_or(r.k2.abs(), |b: f64| b.min(r.k2.abs())));
                }
                continue;
            }
            let mut hi = 0.05;
            while energy(hi)? > self.e_cap {
                hi *= 2.0;
                if hi > DEFAULT_T_MAX / 2.0 {
                    break;
                }
            }
            if energy(hi)? > self.e_cap {
                continue;
            }
            let mut lo = 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if energy(mid)? > self.e_cap {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let r = self.ladder(&f, dir * hi)?;
            if self.feasible(&r) {
                best = Some(best.map_or(r.k2.abs(), |b: f64| b.min(r.k2.abs())));
            }
        }
        Ok(best)
    }
}

fn random_bump(grid_field: &RadialField, mu: f64, rng: &mut ChaCha8Rng) -> RadialField {
    let width = (rng.random_range(0.05f64.ln()..3.0f64.ln())).exp();
    let bend = rng.random_range(-0.3..1.0);
    let second = rng.random_bool(0.3);
    let offset = rng.random_range(0.5..3.0) * width;
    let rel = rng.random_range(-0.5..0.5);
    let target = mu * rng.random_range(0.3..1.0);
    let shape = RadialField::from_real_fn(grid_field.grid(), |r| {
        let x = r / width;
        let mut v = (-x * x).exp() * (1.0 + bend * x * x);
        if second {
            let y = (r - offset) / width;
            v += rel * (-y * y).exp();
        }
        v
    });
    let m = shape.norm_l2().powi(2) / 2.0;
    shape.scale(Complex64::new((target / m).sqrt(), 0.0))
}

/// Smallest |K₂| over sampled feasible fields.
pub fn estimate_kappa(
    ctx: &KappaContext,
    sigma: Sigma,
    mu: f64,
    delta: f64,
    sampler: &KappaSampler,
) -> Result<KappaEstimate> {
    if sigma != Sigma::Focusing {
        return Err(LabError::Precondition("κ is defined for the focusing equation only".into()));
    }
    if !(delta > 0.0) || !(mu > 0.0) {
        return Err(LabError::InvalidParameter("μ and δ must be positive".into()));
    }
    let problem = Problem { ctx, mu, e_cap: ctx.e1 - delta };
    let excited_sample = problem.excited_sample()?;
    let proto = RadialField::zeros(&ctx.pot.grid);
    let found: Vec<Result<Option<f64>>> = par::map_range(sampler.exec, sampler.samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
        rng.set_stream(i as u64);
        let f = random_bump(&proto, mu, &mut rng);
        problem.descend(&f, sampler)
    });
    let mut value = excited_sample.unwrap_or(f64::INFINITY);
    let mut feasible = usize::from(excited_sample.is_some());
    for r in found {
        if let Some(v) = r? {
            feasible += 1;
            value = value.min(v);
        }
    }
    Ok(KappaEstimate { value, feasible, regime_violation: value < 1e-6, excited_sample })
}
