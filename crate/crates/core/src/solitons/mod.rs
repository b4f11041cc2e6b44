//! Stationary solutions (H + ω)φ = σ|φ|²φ: the free ground state Q, the
//! small ground branch Φ[z], the defocusing branch φ_ω, the focusing excited
//! branch, the energy curves built from them and the κ surrogate.

mod curves;
mod defocusing;
mod excited;
mod ground;
mod kappa;
mod newton;
mod q;

use std::fmt;

pub use curves::{energy_curves, small_mass_surrogate, EnergyCurves};
pub use defocusing::{continue_defocusing, solve_defocusing_point, DefocusingBranch};
pub use excited::{continue_excited, solve_excited};
pub use ground::{continue_ground, GroundBranch};
pub use kappa::{estimate_kappa, KappaContext, KappaEstimate, KappaSampler};
pub use newton::stationary_residual;
pub use q::{q_profile, solve_q, QProfile};

use crate::functionals::FunctionalReport;
use crate::grid::RadialField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchTag {
    Ground,
    Excited,
    Defocusing,
    Q,
}

impl fmt::Display for BranchTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchTag::Ground => "ground",
            BranchTag::Excited => "excited",
            BranchTag::Defocusing => "defocusing",
            BranchTag::Q => "Q",
        })
    }
}

/// One solved standing wave.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonBranchPoint {
    pub omega: f64,
    pub phi: RadialField,
    pub report: FunctionalReport,
    /// ‖(H + ω)φ − σ|φ|²φ‖_{L²}
    pub residual: f64,
    pub tag: BranchTag,
}

impl SolitonBranchPoint {
    /// ‖φ‖_{H¹} + ‖φ‖³_{H¹}, the scale of the residual bound.
    pub fn residual_scale(&self) -> f64 {
        let h1 = self.phi.norm_h1();
        h1 + h1.powi(3)
    }

    /// Residual and Pohozaev (K₂ = 0) checks.
    pub fn satisfies_invariants(&self) -> bool {
        let r = &self.report;
        self.residual <= 1e-8 * self.residual_scale() && r.k2.abs() <= 1e-6 * (r.h0 + r.g.abs() + 1.0)
    }

    pub fn is_positive(&self) -> bool {
        self.phi.values().iter().all(|v| v.re > 0.0)
    }
}

pub const BRANCH_CSV_HEADER: &str = "M,E,H0,G,K2,residual";

impl SolitonBranchPoint {
    /// CSV row prefixed by the continuation parameter.
    pub fn csv_row(&self, param: f64) -> String {
        let r = &self.report;
        format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e}",
            param, r.m, r.e, r.h0, r.g, r.k2, self.residual
        )
    }
}
