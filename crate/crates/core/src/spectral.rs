//! Potentials, the standing assumptions on them, and the linear spectral
//! data (e₀, φ₀) of H = −Δ + V.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::grid::{RadialField, RadialGrid, FOUR_PI};
use crate::interp::Pchip;
use crate::linalg::{bisect_eigenvalue, inverse_iteration, sturm_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    GaussianWell,
    ExponentialWell,
    Tabulated,
}

/// Radial potential. Built-in wells are V(r) = −a·profile(r / width).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub depth: f64,
    pub width: f64,
    /// (r, V) pairs for tabulated potentials.
    pub samples: Option<(Vec<f64>, Vec<f64>)>,
}

impl PotentialSpec {
    pub fn gaussian_well(depth: f64, width: f64) -> Self {
        Self { kind: PotentialKind::GaussianWell, depth, width, samples: None }
    }

    pub fn exponential_well(depth: f64, width: f64) -> Self {
        Self { kind: PotentialKind::ExponentialWell, depth, width, samples: None }
    }

    /// The free operator, V ≡ 0.
    pub fn free() -> Self {
        Self::gaussian_well(0.0, 1.0)
    }

    pub fn tabulated(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() || r.len() < 2 {
            return Err(LabError::InvalidParameter("tabulated potential needs matching r and V columns".into()));
        }
        Pchip::new(r.clone(), v.clone())?;
        Ok(Self { kind: PotentialKind::Tabulated, depth: 0.0, width: 1.0, samples: Some((r, v)) })
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PotentialKind::Tabulated => Ok(()),
            _ => {
                if !(self.depth >= 0.0 && self.depth.is_finite()) {
                    return Err(LabError::InvalidParameter(format!("well depth must be >= 0, got {}", self.depth)));
                }
                if !(self.width > 0.0 && self.width.is_finite()) {
                    return Err(LabError::InvalidParameter(format!("well width must be > 0, got {}", self.width)));
                }
                Ok(())
            }
        }
    }

    /// (V, r V_r, r ∂_r(r V_r)) at r for the built-in wells.
    fn analytic(&self, r: f64) -> (f64, f64, f64) {
        let a = self.depth;
        let x = r / self.width;
        match self.kind {
            PotentialKind::GaussianWell => {
                let e = (-x * x).exp();
                let x2 = x * x;
                (-a * e, 2.0 * a * x2 * e, 4.0 * a * x2 * (1.0 - x2) * e)
            }
            PotentialKind::ExponentialWell => {
                let e = (-x).exp();
                (-a * e, a * x * e, a * (x - x * x) * e)
            }
            PotentialKind::Tabulated => unreachable!("tabulated potentials are sampled"),
        }
    }

    /// Sample V and the scaling derivatives rV_r, r∂_r(rV_r) on a grid.
    pub fn sample(&self, grid: &Arc<RadialGrid>) -> Result<SampledPotential> {
        self.validate()?;
        let r = grid.nodes();
        match self.kind {
            PotentialKind::Tabulated => {
                let (tr, tv) = self.samples.as_ref().expect("tabulated potential without samples");
                let p = Pchip::new(tr.clone(), tv.clone())?;
                let (lo, _) = p.domain();
                // Constant extension inside the first knot, zero beyond the table.
                let v: Vec<f64> =
                    r.iter().map(|&x| if x < lo { tv[0] } else { p.eval(x).unwrap_or(0.0) }).collect();
                let dv = grid.derivative(&v);
                let r_vr: Vec<f64> = r.iter().zip(&dv).map(|(x, d)| x * d).collect();
                let d2 = grid.derivative(&r_vr);
                let r_r_vr = r.iter().zip(&d2).map(|(x, d)| x * d).collect();
                Ok(SampledPotential { grid: grid.clone(), v, r_vr, r_r_vr, analytic: false })
            }
            _ => {
                let mut v = Vec::with_capacity(r.len());
                let mut r_vr = Vec::with_capacity(r.len());
                let mut r_r_vr = Vec::with_capacity(r.len());
                for &x in r {
                    let (a, b, c) = self.analytic(x);
                    v.push(a);
                    r_vr.push(b);
                    r_r_vr.push(c);
                }
                Ok(SampledPotential { grid: grid.clone(), v, r_vr, r_r_vr, analytic: true })
            }
        }
    }
}

/// A potential sampled on a grid together with r V_r and r ∂_r(r V_r).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPotential {
    pub grid: Arc<RadialGrid>,
    pub v: Vec<f64>,
    pub r_vr: Vec<f64>,
    pub r_r_vr: Vec<f64>,
    /// False when derivatives come from grid differencing (reduced accuracy).
    pub analytic: bool,
}

impl SampledPotential {
    pub fn zero(grid: &Arc<RadialGrid>) -> Self {
        let n = grid.n();
        Self { grid: grid.clone(), v: vec![0.0; n], r_vr: vec![0.0; n], r_r_vr: vec![0.0; n], analytic: true }
    }

    pub fn is_zero(&self) -> bool {
        self.v.iter().all(|v| *v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// Boundedness of the wave operators cannot be decided numerically.
    pub wave_operator: &'static str,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Report on: finiteness of ∫|V|/|x| dx and decay of |V| + |rV_r| beyond
/// r_max/4 and r_max/2.
pub fn check_assumptions(spec: &PotentialSpec, grid: &Arc<RadialGrid>) -> Result<AssumptionReport> {
    let pot = spec.sample(grid)?;
    let r = grid.nodes();
    let v_over_r: Vec<f64> = pot.v.iter().zip(r).map(|(v, x)| v.abs() / x).collect();
    let l1 = grid.integrate(&v_over_r)?;
    let peak = pot.v.iter().chain(&pot.r_vr).fold(0.0f64, |m, v| m.max(v.abs()));
    let tail_sup = |from: f64| -> f64 {
        r.iter()
            .zip(pot.v.iter().zip(&pot.r_vr))
            .filter(|(x, _)| **x > from)
            .map(|(_, (v, rv))| v.abs() + rv.abs())
            .fold(0.0, f64::max)
    };
    let quarter = tail_sup(grid.r_max() / 4.0);
    let half = tail_sup(grid.r_max() / 2.0);
    let decay_tol = 1e-3 * peak.max(f64::MIN_POSITIVE);
    let checks = vec![
        AssumptionCheck { name: "V/|x| integrable", value: l1, pass: l1.is_finite() },
        AssumptionCheck { name: "decay beyond r_max/4", value: quarter, pass: quarter <= 1e-2 * peak.max(f64::MIN_POSITIVE) || peak == 0.0 },
        AssumptionCheck { name: "decay beyond r_max/2", value: half, pass: (half <= decay_tol && half <= quarter) || peak == 0.0 },
    ];
    Ok(AssumptionReport { checks, wave_operator: "not checkable" })
}

/// Linear spectral data of H.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub e0: f64,
    /// Second eigenvalue of the discrete operator (for diagnostics).
    pub e1: f64,
    pub phi0: RadialField,
    pub n_neg: usize,
}

/// Symmetric tridiagonal form of H in the variables y = √q f.
pub fn symmetric_operator(grid: &RadialGrid, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (sd, so) = grid.stiffness();
    let q = grid.weights();
    let diag = (0..grid.n()).map(|i| sd[i] / q[i] + v[i]).collect();
    let off = (0..grid.n() - 1).map(|i| so[i] / (q[i] * q[i + 1]).sqrt()).collect();
    (diag, off)
}

/// Lowest eigenpair of H. Rejects potentials without exactly one negative
/// eigenvalue.
pub fn solve_ground(spec: &PotentialSpec, grid: &Arc<RadialGrid>) -> Result<SpectralData> {
    let pot = spec.sample(grid)?;
    solve_ground_sampled(&pot)
}

pub fn solve_ground_sampled(pot: &SampledPotential) -> Result<SpectralData> {
    let grid = &pot.grid;
    let (diag, off) = symmetric_operator(grid, &pot.v);
    let e0 = bisect_eigenvalue(&diag, &off, 0, 1e-12);
    if e0 >= 0.0 {
        return Err(LabError::NoBoundState(e0));
    }
    let e1 = bisect_eigenvalue(&diag, &off, 1, 1e-12);
    if e1 < 0.0 {
        return Err(LabError::MultipleBoundStates(e1));
    }
    let n_neg = sturm_count(&diag, &off, 0.0);
    let y = inverse_iteration(&diag, &off, e0)?;
    let q = grid.weights();
    let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let f: Vec<f64> = y.iter().zip(q).map(|(a, w)| sign * a / (FOUR_PI * w).sqrt()).collect();
    let phi0 = RadialField::from_real(grid, &f)?;
    let norm = phi0.norm_l2();
    let phi0 = phi0.scale(Complex64::new(1.0 / norm, 0.0));
    Ok(SpectralData { e0, e1, phi0, n_neg })
}

/// P_c f = f − φ₀ (f|φ₀).
pub fn project_continuous(f: &RadialField, spec: &SpectralData) -> Result<RadialField> {
    let c = f.inner(&spec.phi0)?;
    f.axpy(-c, &spec.phi0)
}
