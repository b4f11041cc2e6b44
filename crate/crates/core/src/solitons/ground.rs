//! The small ground branch Φ[z] = zφ₀ + γ[z], γ ⊥ φ₀, with frequency Ω[z],
//! gauge-fixed to z > 0.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::functionals::Sigma;
use crate::grid::FOUR_PI;
use crate::spectral::{SampledPotential, SpectralData};

use super::newton::Stationary;
use super::{BranchTag, SolitonBranchPoint};

const MAX_HALVINGS: usize = 6;

#[derive(Debug, Clone)]
pub struct GroundBranch {
    pub e0: f64,
    pub z_values: Vec<f64>,
    pub points: Vec<SolitonBranchPoint>,
    /// ‖Φ[z] − zφ₀‖_{H¹}
    pub gamma_norms: Vec<f64>,
    pub mass_curve: Vec<f64>,
    /// Set when continuation stopped before the last requested z.
    pub truncated: Option<String>,
}

impl GroundBranch {
    /// Ω[z] per point.
    pub fn omegas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.omega).collect()
    }

    pub fn z_max(&self) -> f64 {
        self.z_values.last().copied().unwrap_or(0.0)
    }
}

/// Continue the ground branch through the increasing list `z_list`.
pub fn continue_ground(
    spec: &SpectralData,
    pot: &SampledPotential,
    sigma: Sigma,
    z_list: &[f64],
) -> Result<GroundBranch> {
    if z_list.is_empty() || z_list.iter().any(|z| !(*z > 0.0)) || z_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidParameter("z_list must be positive and increasing".into()));
    }
    let grid = &pot.grid;
    if !grid.same_as(spec.phi0.grid()) {
        return Err(LabError::GridMismatch("spectral data and potential grids differ".into()));
    }
    let st = Stationary::new(pot, sigma);
    let phi0 = spec.phi0.re();
    let w: Vec<f64> = phi0.iter().zip(grid.weights()).map(|(p, q)| FOUR_PI * q * p).collect();

    let mut branch = GroundBranch {
        e0: spec.e0,
        z_values: Vec::new(),
        points: Vec::new(),
        gamma_norms: Vec::new(),
        mass_curve: Vec::new(),
        truncated: None,
    };
    let mut f_prev: Vec<f64> = vec![0.0; grid.n()];
    let mut om_prev = -spec.e0;
    let mut z_prev = 0.0;

    'targets: for &z in z_list {
        let mut target = z;
        let mut halvings = 0;
        loop {
            let guess: Vec<f64> = if z_prev > 0.0 {
                f_prev.iter().map(|a| a * target / z_prev).collect()
            } else {
                phi0.iter().map(|a| a * target).collect()
            };
            match st.newton_bordered(&guess, om_prev, &w, target) {
                Ok((f, om)) => {
                    f_prev = f;
                    om_prev = om;
                    z_prev = target;
                    if target == z {
                        break;
                    }
                    target = z;
                }
                Err(e) => {
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        branch.truncated = Some(format!("continuation stopped before z = {z}: {e}"));
                        break 'targets;
                    }
                    target = z_prev + 0.5 * (target - z_prev);
                }
            }
        }
        let point = st.point(f_prev.clone(), om_prev, BranchTag::Ground)?;
        let gamma = point.phi.axpy(Complex64::new(-z, 0.0), &spec.phi0)?;
        branch.z_values.push(z);
        branch.gamma_norms.push(gamma.norm_h1());
        branch.mass_curve.push(point.report.m);
        branch.points.push(point);
    }
    if branch.points.is_empty() {
        return Err(LabError::NewtonDivergence(
            branch.truncated.unwrap_or_else(|| "ground branch: no point solved".into()),
        ));
    }
    if branch.mass_curve.windows(2).any(|m| m[1] <= m[0]) {
        return Err(LabError::BranchAnomaly("mass is not increasing along the ground branch".into()));
    }
    Ok(branch)
}
