//! Defocusing branch φ_ω, ω ∈ (0, −e₀): the positive minimizer of E + ωM.

use crate::error::{LabError, Result};
use crate::functionals::{evaluate, Sigma};
use crate::grid::RadialField;
use crate::spectral::{SampledPotential, SpectralData};

use super::newton::Stationary;
use super::{BranchTag, SolitonBranchPoint};

const DESCENT_ITERS: usize = 5000;
const MAX_HALVINGS: usize = 6;

#[derive(Debug, Clone)]
pub struct DefocusingBranch {
    pub omegas: Vec<f64>,
    pub points: Vec<SolitonBranchPoint>,
}

impl DefocusingBranch {
    pub fn masses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.report.m).collect()
    }
}

fn lagrangian(st: &Stationary, f: &[f64], omega: f64) -> Result<f64> {
    let field = RadialField::from_real(st.grid, f)?;
    let r = evaluate(&field, st.pot, st.sigma)?;
    Ok(r.e + omega * r.m)
}

/// Preconditioned descent on E + ωM from a scaled φ₀ seed.
fn descend(st: &Stationary, spec: &SpectralData, omega: f64) -> Result<Vec<f64>> {
    let phi0 = spec.phi0.re();
    let l4 = spec.phi0.norm_lp(4.0).powi(4);
    let eps = ((spec.e0 + omega).abs() / l4).sqrt().max(1e-3);
    let mut f: Vec<f64> = phi0.iter().map(|p| eps * p).collect();
    let shift = -spec.e0 + 0.25 * spec.e0.abs();
    let mut value = lagrangian(st, &f, omega)?;
    for _ in 0..DESCENT_ITERS {
        let res = st.residual_vec(&f, omega);
        let norm = st.l2_of_equation(&res);
        let l2 = RadialField::from_real(st.grid, &f)?.norm_l2();
        if l2 < 1e-8 * eps {
            return Err(LabError::TrivialMinimizer(format!("descent collapsed to 0 at ω = {omega}")));
        }
        if norm <= 1e-7 * st.scale(&f) {
            return Ok(f);
        }
        let dir = st.solve_shifted(shift, &res)?;
        let slope: f64 = dir.iter().zip(&res).map(|(a, b)| a * b).sum::<f64>() * crate::grid::FOUR_PI;
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = f.iter().zip(&dir).map(|(a, d)| a - alpha * d).collect();
            let tv = lagrangian(st, &trial, omega)?;
            if tv <= value - 1e-4 * alpha * slope {
                f = trial;
                value = tv;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let l2 = RadialField::from_real(st.grid, &f)?.norm_l2();
    if l2 < 1e-6 * eps {
        return Err(LabError::TrivialMinimizer(format!("descent collapsed to 0 at ω = {omega}")));
    }
    Ok(f)
}

/// One point of the defocusing branch by descent and Newton polish.
pub fn solve_defocusing_point(spec: &SpectralData, pot: &SampledPotential, omega: f64) -> Result<SolitonBranchPoint> {
    if !(omega > 0.0) {
        return Err(LabError::Precondition(format!("defocusing solitons need ω > 0, got {omega}")));
    }
    let st = Stationary::new(pot, Sigma::Defocusing);
    if omega >= -spec.e0 {
        // E + ωM is then convex with minimizer 0; descent confirms it.
        descend(&st, spec, omega)?;
        return Err(LabError::TrivialMinimizer(format!("ω = {omega} ≥ −e₀ admits only the zero solution")));
    }
    let f = descend(&st, spec, omega)?;
    let f = st.newton_fixed_omega(&f, omega)?;
    finish(&st, f, omega)
}

fn finish(st: &Stationary, f: Vec<f64>, omega: f64) -> Result<SolitonBranchPoint> {
    let l2 = RadialField::from_real(st.grid, &f)?.norm_l2();
    if l2 < 1e-10 {
        return Err(LabError::TrivialMinimizer(format!("Newton converged to 0 at ω = {omega}")));
    }
    st.point(f, omega, BranchTag::Defocusing)
}

/// Continue φ_ω over `omega_list ⊂ (0, −e₀)`, starting from the ω closest
/// to −e₀. Points are returned in the order of `omega_list`.
pub fn continue_defocusing(spec: &SpectralData, pot: &SampledPotential, omega_list: &[f64]) -> Result<DefocusingBranch> {
    if omega_list.is_empty() {
        return Err(LabError::InvalidParameter("empty ω list".into()));
    }
    if let Some(bad) = omega_list.iter().find(|w| !(**w > 0.0 && **w < -spec.e0)) {
        return Err(LabError::Precondition(format!("ω = {bad} outside (0, −e₀ = {})", -spec.e0)));
    }
    let st = Stationary::new(pot, Sigma::Defocusing);
    let mut order: Vec<usize> = (0..omega_list.len()).collect();
    order.sort_by(|&a, &b| omega_list[b].total_cmp(&omega_list[a]));

    let mut solved: Vec<Option<SolitonBranchPoint>> = vec![None; omega_list.len()];
    let mut prev: Option<(Vec<f64>, f64)> = None;
    for idx in order {
        let omega = omega_list[idx];
        let f = match &prev {
            None => st.newton_fixed_omega(&descend(&st, spec, omega)?, omega)?,
            Some((f0, w0)) => continue_to(&st, spec.e0, f0, *w0, omega).or_else(|_| {
                let seed = descend(&st, spec, omega)?;
                st.newton_fixed_omega(&seed, omega)
            })?,
        };
        prev = Some((f.clone(), omega));
        solved[idx] = Some(finish(&st, f, omega)?);
    }
    Ok(DefocusingBranch { omegas: omega_list.to_vec(), points: solved.into_iter().map(|p| p.unwrap()).collect() })
}

/// Newton continuation in ω with step halving. The guess is rescaled by the
/// small-amplitude law ‖φ_ω‖ ∝ (−e₀ − ω)^{1/2}, and steps that collapse
/// toward the zero solution count as failures.
fn continue_to(st: &Stationary, e0: f64, f0: &[f64], w0: f64, omega: f64) -> Result<Vec<f64>> {
    let mut f = f0.to_vec();
    let mut w = w0;
    let mut target = omega;
    let mut halvings = 0;
    let norm = |f: &[f64]| f.iter().map(|v| v * v).sum::<f64>().sqrt();
    loop {
        let ratio = ((-e0 - target) / (-e0 - w)).sqrt();
        let guess: Vec<f64> = f.iter().map(|v| v * ratio).collect();
        let attempt = st.newton_fixed_omega(&guess, target).and_then(|next| {
            if norm(&next) < 0.1 * norm(&guess) {
                Err(LabError::TrivialMinimizer(format!("continuation collapsed at ω = {target}")))
            } else {
                Ok(next)
            }
        });
        match attempt {
            Ok(next) => {
                f = next;
                w = target;
                if target == omega {
                    return Ok(f);
                }
                target = omega;
            }
            Err(e) => {
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(e);
                }
                target = w + 0.5 * (target - w);
            }
        }
    }
}
