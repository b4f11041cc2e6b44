//! Conserved and variational functionals, L^p-preserving dilations and
//! their generators, and the small-mass dichotomy classifier.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::grid::RadialField;
use crate::interp::Pchip;
use crate::par::{self, Execution};
use crate::spectral::SampledPotential;

/// Sign of the nonlinearity: + focusing, − defocusing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sigma {
    Focusing,
    Defocusing,
}

impl Sigma {
    pub fn value(self) -> f64 {
        match self {
            Sigma::Focusing => 1.0,
            Sigma::Defocusing => -1.0,
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sigma::Focusing => "+",
            Sigma::Defocusing => "-",
        })
    }
}

impl FromStr for Sigma {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "+1" | "1" | "focusing" => Ok(Sigma::Focusing),
            "-" | "-1" | "defocusing" => Ok(Sigma::Defocusing),
            other => Err(LabError::Parse(format!("unknown sign {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    /// ‖φ‖²/2
    pub m: f64,
    pub e: f64,
    /// ‖∇φ‖²/2
    pub h0: f64,
    /// σ‖φ‖₄⁴/4
    pub g: f64,
    /// ⟨Vφ|φ⟩/2
    pub v_quad: f64,
    pub k2: f64,
    pub i: f64,
    /// energy without the potential
    pub e0: f64,
    /// virial functional without the potential
    pub k2_0: f64,
    /// ⟨(rV_r)φ|φ⟩/2, the potential part of K₂
    pub v_scaled: f64,
    pub sigma: Sigma,
}

pub const REPORT_CSV_HEADER: &str = "M,E,H0,G,Vq,K2,I,E0,K2_0,sigma";

impl FunctionalReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            self.m, self.e, self.h0, self.g, self.v_quad, self.k2, self.i, self.e0, self.k2_0, self.sigma
        )
    }

    /// ‖∇φ‖_{L²}
    pub fn gradient_norm(&self) -> f64 {
        (2.0 * self.h0).sqrt()
    }
}

/// Evaluate every functional of φ. Kinetic terms use the discrete quadratic
/// form of the grid operator, so the energy is exactly the one conserved by
/// the time stepper.
pub fn evaluate(phi: &RadialField, pot: &SampledPotential, sigma: Sigma) -> Result<FunctionalReport> {
    let grid = phi.grid();
    if !grid.same_as(&pot.grid) {
        return Err(LabError::GridMismatch("field and potential grids differ".into()));
    }
    let rho = phi.abs_sq();
    let m = grid.integrate_raw(&rho) / 2.0;
    let h0 = grid.gradient_norm_sq(phi.values()) / 2.0;
    let rho2: Vec<f64> = rho.iter().map(|a| a * a).collect();
    let g = sigma.value() * grid.integrate_raw(&rho2) / 4.0;
    let vr: Vec<f64> = rho.iter().zip(&pot.v).map(|(a, v)| a * v).collect();
    let v_quad = grid.integrate_raw(&vr) / 2.0;
    let sr: Vec<f64> = rho.iter().zip(&pot.r_vr).map(|(a, v)| a * v).collect();
    let v_scaled = grid.integrate_raw(&sr) / 2.0;
    let e0 = h0 - g;
    let k2_0 = 2.0 * h0 - 3.0 * g;
    let e = e0 + v_quad;
    let k2 = k2_0 - v_scaled;
    Ok(FunctionalReport { m, e, h0, g, v_quad, k2, i: e - k2 / 2.0, e0, k2_0, v_scaled, sigma })
}

/// Evaluate many fields, in parallel when enabled.
pub fn evaluate_many(
    fields: &[RadialField],
    pot: &SampledPotential,
    sigma: Sigma,
    exec: Execution,
) -> Result<Vec<FunctionalReport>> {
    par::map(exec, fields, |f| evaluate(f, pot, sigma)).into_iter().collect()
}

/// Dilation S^t_p φ(x) = e^{3t/p} φ(e^t x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingOp {
    pub p: f64,
    pub t: f64,
}

pub const DEFAULT_T_MAX: f64 = 5.0;

/// Apply S^t_p by monotone cubic resampling; zero beyond the grid.
pub fn apply_scaling(phi: &RadialField, op: ScalingOp, t_max: f64) -> Result<RadialField> {
    if !(op.p > 0.0) {
        return Err(LabError::InvalidParameter(format!("exponent p must be positive, got {}", op.p)));
    }
    if !(op.t.abs() <= t_max) {
        return Err(LabError::OutOfRange(format!("|t| = {} exceeds {}", op.t.abs(), t_max)));
    }
    if op.t == 0.0 {
        return Ok(phi.clone());
    }
    let grid = phi.grid();
    let lam = op.t.exp();
    let amp = (3.0 * op.t / op.p).exp();
    let re = resampler(grid.nodes(), &phi.re(), grid.r_max())?;
    let im_vals: Vec<f64> = phi.values().iter().map(|v| v.im).collect();
    let has_im = im_vals.iter().any(|v| *v != 0.0);
    let im = if has_im { Some(resampler(grid.nodes(), &im_vals, grid.r_max())?) } else { None };
    let values = grid
        .nodes()
        .iter()
        .map(|&r| {
            let x = lam * r;
            let a = re.eval(x).unwrap_or(0.0);
            let b = im.as_ref().and_then(|p| p.eval(x)).unwrap_or(0.0);
            Complex64::new(a, b) * amp
        })
        .collect();
    RadialField::new(grid.clone(), values)
}

/// Monotone interpolant through the nodes plus r = 0 (even extrapolation)
/// and the Dirichlet wall.
pub(crate) fn resampler(r: &[f64], f: &[f64], r_max: f64) -> Result<Pchip> {
    let (r1, r2) = (r[0], r[1]);
    let f0 = (r2 * r2 * f[0] - r1 * r1 * f[1]) / (r2 * r2 - r1 * r1);
    let mut x = Vec::with_capacity(r.len() + 2);
    let mut y = Vec::with_capacity(r.len() + 2);
    x.push(0.0);
    y.push(f0);
    x.extend_from_slice(r);
    y.extend_from_slice(f);
    x.push(r_max);
    y.push(0.0);
    Pchip::new(x, y)
}

/// Functionals whose scaling derivative can be requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalTag {
    M,
    H0,
    G,
    VQuad,
    E,
    K2,
    I,
}

impl FromStr for FunctionalTag {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "M" => FunctionalTag::M,
            "H0" => FunctionalTag::H0,
            "G" => FunctionalTag::G,
            "V_quad" | "Vq" => FunctionalTag::VQuad,
            "E" => FunctionalTag::E,
            "K2" => FunctionalTag::K2,
            "I" => FunctionalTag::I,
            other => return Err(LabError::UnsupportedTag(other.to_string())),
        })
    }
}

/// ∂_{t=0} F(S^t_p φ), from the closed-form generator identities.
pub fn scaling_derivative(
    tag: FunctionalTag,
    phi: &RadialField,
    p: f64,
    pot: &SampledPotential,
    sigma: Sigma,
) -> Result<f64> {
    if !(p > 0.0) {
        return Err(LabError::InvalidParameter(format!("exponent p must be positive, got {p}")));
    }
    let rep = evaluate(phi, pot, sigma)?;
    let grid = phi.grid();
    let rho = phi.abs_sq();
    let weighted = |w: &[f64]| -> f64 {
        let g: Vec<f64> = rho.iter().zip(w).map(|(a, b)| a * b).collect();
        grid.integrate_raw(&g) / 2.0
    };
    let c = 6.0 / p - 3.0;
    let dm = c * rep.m;
    let dh0 = (6.0 / p - 1.0) * rep.h0;
    let dg = (12.0 / p - 3.0) * rep.g;
    // For a multiplier W: S'_p⟨W⟩ = (6/p − 3)⟨W⟩ − ⟨r W_r⟩.
    let dv = c * rep.v_quad - rep.v_scaled;
    let dvs = c * rep.v_scaled - weighted(&pot.r_r_vr);
    let de = dh0 + dv - dg;
    let dk2 = 2.0 * dh0 - 3.0 * dg - dvs;
    Ok(match tag {
        FunctionalTag::M => dm,
        FunctionalTag::H0 => dh0,
        FunctionalTag::G => dg,
        FunctionalTag::VQuad => dv,
        FunctionalTag::E => de,
        FunctionalTag::K2 => dk2,
        FunctionalTag::I => de - dk2 / 2.0,
    })
}

/// C(ε) with |⟨V⟩(φ)| ≤ ε‖φ‖₄² + C(ε)‖φ‖₂² for every φ on the grid:
/// splitting |V| at a level λ gives ε = ‖V·1_{|V|>λ}‖₂/2 and C = λ/2.
pub fn potential_bound_constant(pot: &SampledPotential, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(LabError::InvalidParameter("eps must be positive".into()));
    }
    let grid = &pot.grid;
    let tail = |lam: f64| -> f64 {
        let g: Vec<f64> = pot.v.iter().map(|v| if v.abs() > lam { v * v } else { 0.0 }).collect();
        grid.integrate_raw(&g).sqrt() / 2.0
    };
    let mut hi = pot.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if tail(0.0) <= eps {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi / 2.0)
}

/// Case labels of the small-mass dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DichotomyCase {
    /// H⁰ ≲ M: ground-state-like.
    Small,
    /// M ≲ H⁰ ∼ E ∼ K₂.
    Intermediate,
    /// σ = + and G ≳ H⁰ ≳ 1/M: excited-state-like.
    Large,
}

impl fmt::Display for DichotomyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DichotomyCase::Small => "i",
            DichotomyCase::Intermediate => "ii",
            DichotomyCase::Large => "iii",
        })
    }
}

/// Comparison constants for the dichotomy, calibrated on soliton branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomyCalibration {
    /// Threshold on H⁰/M separating case (i).
    pub tau_small: f64,
    /// Threshold on H⁰·M separating case (iii).
    pub tau_large: f64,
    /// Minimal G/H⁰ for case (iii).
    pub g_ratio: f64,
    /// Small-mass surrogate.
    pub mu_hat: f64,
    /// Upper bound on K₂·M for the regime.
    pub k2_mass_bound: f64,
}

impl DichotomyCalibration {
    /// Geometric midpoints between the ground (case i) and excited (case iii)
    /// reports, restricted to masses ≤ μ̂.
    pub fn from_branches(ground: &[FunctionalReport], excited: &[FunctionalReport], mu_hat: f64) -> Result<Self> {
        let g: Vec<_> = ground.iter().filter(|r| r.m <= mu_hat).collect();
        let x: Vec<_> = excited.iter().filter(|r| r.m <= mu_hat).collect();
        if g.is_empty() || x.is_empty() {
            return Err(LabError::NonOverlapping);
        }
        let g_ratio_max = g.iter().map(|r| r.h0 / r.m).fold(0.0, f64::max);
        let x_ratio_min = x.iter().map(|r| r.h0 / r.m).fold(f64::INFINITY, f64::min);
        let g_prod_max = g.iter().map(|r| r.h0 * r.m).fold(0.0, f64::max);
        let x_prod_min = x.iter().map(|r| r.h0 * r.m).fold(f64::INFINITY, f64::min);
        if !(x_ratio_min > g_ratio_max && x_prod_min > g_prod_max) {
            return Err(LabError::NotInRegime("branches are not separated in H0".into()));
        }
        let tau_large = (g_prod_max * x_prod_min).sqrt();
        Ok(Self {
            tau_small: (g_ratio_max * x_ratio_min).sqrt(),
            tau_large,
            g_ratio: 0.25,
            mu_hat,
            k2_mass_bound: 0.1 * tau_large,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomyVerdict {
    pub case: DichotomyCase,
    /// For case (iii): |⟨V⟩| + |⟨rV_r⟩| < 0.1 H⁰.
    pub potential_dominated: Option<bool>,
    pub calibration: DichotomyCalibration,
}

pub fn dichotomy_classify(rep: &FunctionalReport, cal: &DichotomyCalibration) -> Result<DichotomyVerdict> {
    if rep.m <= 0.0 {
        return Err(LabError::NotInRegime("zero mass".into()));
    }
    if rep.m > cal.mu_hat {
        return Err(LabError::NotInRegime(format!("mass {} above surrogate {}", rep.m, cal.mu_hat)));
    }
    if rep.k2 * rep.m > cal.k2_mass_bound {
        return Err(LabError::NotInRegime(format!("K2·M = {} not small", rep.k2 * rep.m)));
    }
    let large = rep.sigma == Sigma::Focusing && rep.h0 * rep.m >= cal.tau_large && rep.g >= cal.g_ratio * rep.h0;
    let (case, potential_dominated) = if large {
        (DichotomyCase::Large, Some(rep.v_quad.abs() + rep.v_scaled.abs() < 0.1 * rep.h0))
    } else if rep.h0 / rep.m <= cal.tau_small {
        (DichotomyCase::Small, None)
    } else {
        (DichotomyCase::Intermediate, None)
    };
    Ok(DichotomyVerdict { case, potential_dominated, calibration: *cal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn zero_field_has_zero_functionals() {
        let g = make_grid(10.0, 100, 1.0).unwrap();
        let pot = crate::spectral::PotentialSpec::gaussian_well(5.0, 1.0).sample(&g).unwrap();
        let r = evaluate(&RadialField::zeros(&g), &pot, Sigma::Focusing).unwrap();
        for v in [r.m, r.e, r.h0, r.g, r.v_quad, r.k2, r.i, r.e0, r.k2_0] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn tag_parsing() {
        assert_eq!("K2".parse::<FunctionalTag>().unwrap(), FunctionalTag::K2);
        assert!(matches!("Q".parse::<FunctionalTag>(), Err(LabError::UnsupportedTag(_))));
    }

    #[test]
    fn scaling_guard() {
        let g = make_grid(10.0, 100, 1.0).unwrap();
        let f = RadialField::from_real_fn(&g, |r| (-r * r).exp());
        assert!(apply_scaling(&f, ScalingOp { p: 2.0, t: 6.0 }, DEFAULT_T_MAX).is_err());
        assert_eq!(apply_scaling(&f, ScalingOp { p: 2.0, t: 0.0 }, DEFAULT_T_MAX).unwrap(), f);
    }
}
