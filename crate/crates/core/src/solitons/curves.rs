//! Energy curves μ ↦ 𝓔₀(μ), 𝓔₁(μ) from mass-parameterized branches, and the
//! empirical small-mass surrogate μ̂.

use crate::error::{LabError, Result};
use crate::interp::Pchip;

use super::SolitonBranchPoint;

/// Monotone interpolant of a report quantity against mass.
fn by_mass(points: &[SolitonBranchPoint], pick: impl Fn(&SolitonBranchPoint) -> f64) -> Result<Pchip> {
    let mut pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.report.m, pick(p))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| a.0 == b.0);
    if pairs.len() < 2 {
        return Err(LabError::InvalidParameter("need at least two branch points".into()));
    }
    Pchip::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
}

#[derive(Debug, Clone)]
pub struct EnergyCurves {
    pub mu: Vec<f64>,
    pub e0: Vec<f64>,
    /// +∞ when there is no excited branch (defocusing).
    pub e1: Vec<f64>,
}

impl EnergyCurves {
    /// μ·𝓔₁(μ) per table row.
    pub fn mu_e1(&self) -> Vec<f64> {
        self.mu.iter().zip(&self.e1).map(|(m, e)| m * e).collect()
    }
}

/// Tabulate 𝓔₀ (ground branch) and 𝓔₁ (excited branch, or +∞) at masses
/// `mu`, each of which must lie inside the mass range of every branch.
pub fn energy_curves(
    ground: &[SolitonBranchPoint],
    excited: Option<&[SolitonBranchPoint]>,
    mu: &[f64],
) -> Result<EnergyCurves> {
    let g = by_mass(ground, |p| p.report.e)?;
    let x = excited.map(|pts| by_mass(pts, |p| p.report.e)).transpose()?;
    let mut e0 = Vec::with_capacity(mu.len());
    let mut e1 = Vec::with_capacity(mu.len());
    for &m in mu {
        e0.push(g.eval(m).ok_or(LabError::NonOverlapping)?);
        e1.push(match &x {
            Some(p) => p.eval(m).ok_or(LabError::NonOverlapping)?,
            None => f64::INFINITY,
        });
    }
    Ok(EnergyCurves { mu: mu.to_vec(), e0, e1 })
}

/// Largest ground-branch mass at which the excited branch exists and its H⁰
/// exceeds the ground H⁰ by more than a factor 10.
pub fn small_mass_surrogate(ground: &[SolitonBranchPoint], excited: &[SolitonBranchPoint]) -> Result<f64> {
    let gx = by_mass(ground, |p| p.report.h0)?;
    let xx = by_mass(excited, |p| p.report.h0)?;
    let mut best: Option<f64> = None;
    for p in ground {
        let m = p.report.m;
        if let (Some(hg), Some(hx)) = (gx.eval(m), xx.eval(m)) {
            if hx > 10.0 * hg {
                best = Some(best.map_or(m, |b: f64| b.max(m)));
            }
        }
    }
    best.ok_or(LabError::NonOverlapping)
}
