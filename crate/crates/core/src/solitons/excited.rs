//! Focusing excited solitons, seeded by the rescaled free ground state
//! ω^{1/2} Q(ω^{1/2} r).

use crate::error::{LabError, Result};
use crate::functionals::Sigma;
use crate::par::{self, Execution};
use crate::spectral::{SampledPotential, SpectralData};

use super::newton::Stationary;
use super::q::q_profile;
use super::{BranchTag, SolitonBranchPoint};

/// Overlap |(φ|φ₀)|/‖φ‖ above which a solution is taken to be ground-like.
const GROUND_OVERLAP: f64 = 0.9;

pub fn solve_excited(spec: &SpectralData, pot: &SampledPotential, omega: f64) -> Result<SolitonBranchPoint> {
    if !(omega > -spec.e0) {
        return Err(LabError::Precondition(format!("excited solitons need ω > −e₀ = {}, got {omega}", -spec.e0)));
    }
    let profile = q_profile()?;
    let st = Stationary::new(pot, Sigma::Focusing);
    let nodes = pot.grid.nodes();
    let seed_at = |w: f64| -> Vec<f64> {
        let s = w.sqrt();
        nodes.iter().map(|&r| s * profile.eval(s * r)).collect()
    };
    let mut result = st.newton_fixed_omega(&seed_at(omega), omega);
    // The well deepens the effective frequency near the origin.
    let deepened = omega - pot.v[0];
    if result.is_err() && deepened > omega {
        result = st.newton_fixed_omega(&seed_at(deepened), omega);
    }
    let f = result.map_err(|e| LabError::SeedFailure(format!("ω = {omega}: {e}")))?;
    let point = st.point(f, omega, BranchTag::Excited)?;
    let norm = point.phi.norm_l2();
    if norm < 1e-10 {
        return Err(LabError::SeedFailure(format!("ω = {omega}: Newton converged to 0")));
    }
    let overlap = point.phi.inner(&spec.phi0)?.norm() / norm;
    if overlap > GROUND_OVERLAP {
        return Err(LabError::WrongBranch(format!("ω = {omega}: overlap with φ₀ is {overlap:.3}")));
    }
    Ok(point)
}

/// Independent excited solves for several ω.
pub fn continue_excited(
    spec: &SpectralData,
    pot: &SampledPotential,
    omega_list: &[f64],
    exec: Execution,
) -> Result<Vec<SolitonBranchPoint>> {
    par::map(exec, omega_list, |&w| solve_excited(spec, pot, w)).into_iter().collect()
}
