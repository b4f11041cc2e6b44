//! Newton machinery for the real stationary equation. Unknowns are the
//! node values f; the discrete equation is F = S f + Q(V + ω) f − σ Q f³
//! with S the kinetic stiffness and Q the diagonal quadrature weights, so
//! that F is the gradient of the discrete E + ωM.

use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::functionals::{evaluate, Sigma};
use crate::grid::{RadialField, RadialGrid, FOUR_PI};
use crate::linalg::solve_tridiagonal;
use crate::spectral::SampledPotential;

use super::{BranchTag, SolitonBranchPoint};

pub(crate) struct Stationary<'a> {
    pub grid: &'a Arc<RadialGrid>,
    pub pot: &'a SampledPotential,
    pub sigma: Sigma,
    sd: Vec<f64>,
    so: Vec<f64>,
}

pub(crate) const MAX_NEWTON: usize = 40;

impl<'a> Stationary<'a> {
    pub fn new(pot: &'a SampledPotential, sigma: Sigma) -> Self {
        let (sd, so) = pot.grid.stiffness();
        Self { grid: &pot.grid, pot, sigma, sd, so }
    }

    pub fn residual_vec(&self, f: &[f64], omega: f64) -> Vec<f64> {
        let n = f.len();
        let q = self.grid.weights();
        let s = self.sigma.value();
        (0..n)
            .map(|i| {
                let mut a = self.sd[i] * f[i];
                if i > 0 {
                    a += self.so[i - 1] * f[i - 1];
                }
                if i + 1 < n {
                    a += self.so[i] * f[i + 1];
                }
                a + q[i] * ((self.pot.v[i] + omega) * f[i] - s * f[i] * f[i] * f[i])
            })
            .collect()
    }

    /// L² norm of Q⁻¹F = (H + ω)f − σ f³.
    pub fn l2_of_equation(&self, res: &[f64]) -> f64 {
        let q = self.grid.weights();
        (FOUR_PI * res.iter().zip(q).map(|(r, w)| r * r / w).sum::<f64>()).sqrt()
    }

    pub fn jacobian_diag(&self, f: &[f64], omega: f64) -> Vec<f64> {
        let q = self.grid.weights();
        let s = self.sigma.value();
        (0..f.len()).map(|i| self.sd[i] + q[i] * (self.pot.v[i] + omega - 3.0 * s * f[i] * f[i])).collect()
    }

    pub fn solve_jacobian(&self, f: &[f64], omega: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let d = self.jacobian_diag(f, omega);
        solve_tridiagonal(&self.so, &d, &self.so, rhs)
    }

    /// Solve (S + Q(V + c)) x = rhs, a positive definite preconditioner
    /// when c exceeds −e₀.
    pub fn solve_shifted(&self, c: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let q = self.grid.weights();
        let d: Vec<f64> = (0..rhs.len()).map(|i| self.sd[i] + q[i] * (self.pot.v[i] + c)).collect();
        solve_tridiagonal(&self.so, &d, &self.so, rhs)
    }

    pub fn scale(&self, f: &[f64]) -> f64 {
        let field = RadialField::from_real(self.grid, f).expect("length checked by caller");
        let h1 = field.norm_h1();
        h1 + h1.powi(3)
    }

    /// Newton at fixed ω with residual-decrease damping.
    pub fn newton_fixed_omega(&self, f0: &[f64], omega: f64) -> Result<Vec<f64>> {
        let mut f = f0.to_vec();
        let mut res = self.residual_vec(&f, omega);
        let mut norm = self.l2_of_equation(&res);
        for _ in 0..MAX_NEWTON {
            let scale = self.scale(&f);
            if norm <= 1e-11 * scale {
                return Ok(f);
            }
            let neg: Vec<f64> = res.iter().map(|r| -r).collect();
            let step = self.solve_jacobian(&f, omega, &neg)?;
            if at_roundoff(&f, &step, 1e-12) {
                return Ok(f);
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let trial: Vec<f64> = f.iter().zip(&step).map(|(a, b)| a + alpha * b).collect();
                let tres = self.residual_vec(&trial, omega);
                let tnorm = self.l2_of_equation(&tres);
                if tnorm < norm || (tnorm <= 1e-9 * scale && alpha == 1.0) {
                    f = trial;
                    res = tres;
                    norm = tnorm;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                if norm <= 1e-9 * scale || at_roundoff(&f, &step, 1e-9) {
                    return Ok(f);
                }
                return Err(LabError::NewtonDivergence(format!("stalled at residual {norm:.3e} (ω = {omega})")));
            }
        }
        if norm <= 1e-9 * self.scale(&f) {
            return Ok(f);
        }
        Err(LabError::NewtonDivergence(format!("no convergence in {MAX_NEWTON} iterations (ω = {omega})")))
    }

    /// Newton on (f, ω) with the linear constraint Σ w_k f_k = z.
    pub fn newton_bordered(&self, f0: &[f64], omega0: f64, w: &[f64], z: f64) -> Result<(Vec<f64>, f64)> {
        let q = self.grid.weights();
        let mut f = f0.to_vec();
        let mut omega = omega0;
        let constraint = |f: &[f64]| f.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() - z;
        let merit = |res: &[f64], c: f64, st: &Self| -> f64 { st.l2_of_equation(res) + c.abs() };
        let mut res = self.residual_vec(&f, omega);
        let mut c = constraint(&f);
        let mut m = merit(&res, c, self);
        for _ in 0..MAX_NEWTON {
            let scale = self.scale(&f);
            if self.l2_of_equation(&res) <= 1e-11 * scale && c.abs() <= 1e-13 * z.abs().max(1e-300) {
                return Ok((f, omega));
            }
            let neg: Vec<f64> = res.iter().map(|r| -r).collect();
            let a = self.solve_jacobian(&f, omega, &neg)?;
            let qf: Vec<f64> = f.iter().zip(q).map(|(x, w)| x * w).collect();
            let b = self.solve_jacobian(&f, omega, &qf)?;
            let wa: f64 = a.iter().zip(w).map(|(x, y)| x * y).sum();
            let wb: f64 = b.iter().zip(w).map(|(x, y)| x * y).sum();
            if wb == 0.0 || !wb.is_finite() {
                return Err(LabError::NewtonDivergence("singular bordered system".into()));
            }
            let domega = (wa + c) / wb;
            let df: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - domega * y).collect();
            if at_roundoff(&f, &df, 1e-12) && domega.abs() <= 1e-13 * omega.abs().max(1.0) {
                return Ok((f, omega));
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let tf: Vec<f64> = f.iter().zip(&df).map(|(x, y)| x + alpha * y).collect();
                let tom = omega + alpha * domega;
                let tres = self.residual_vec(&tf, tom);
                let tc = constraint(&tf);
                let tm = merit(&tres, tc, self);
                if tm < m {
                    f = tf;
                    omega = tom;
                    res = tres;
                    c = tc;
                    m = tm;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                if self.l2_of_equation(&res) <= 1e-9 * scale || at_roundoff(&f, &df, 1e-9) {
                    return Ok((f, omega));
                }
                return Err(LabError::NewtonDivergence(format!("bordered Newton stalled at z = {z}")));
            }
        }
        if self.l2_of_equation(&res) <= 1e-9 * self.scale(&f) {
            return Ok((f, omega));
        }
        Err(LabError::NewtonDivergence(format!("bordered Newton: no convergence at z = {z}")))
    }

    pub fn point(&self, f: Vec<f64>, omega: f64, tag: BranchTag) -> Result<SolitonBranchPoint> {
        let res = self.residual_vec(&f, omega);
        let residual = self.l2_of_equation(&res);
        let phi = RadialField::from_real(self.grid, &f)?;
        let report = evaluate(&phi, self.pot, self.sigma)?;
        Ok(SolitonBranchPoint { omega, phi, report, residual, tag })
    }
}

/// Newton corrections at the level of rounding: the residual has reached
/// its floor, which on finely resolved cores sits above any fixed tolerance.
fn at_roundoff(f: &[f64], step: &[f64], tol: f64) -> bool {
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let smax = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    fmax > 0.0 && smax <= tol * fmax
}

/// ‖(H + ω)φ − σ|φ|²φ‖_{L²} for a real or complex field.
pub fn stationary_residual(phi: &RadialField, omega: f64, pot: &SampledPotential, sigma: Sigma) -> Result<f64> {
    let hphi = crate::grid::apply_h(phi, &pot.v)?;
    let s = sigma.value();
    let r: Vec<_> = hphi
        .values()
        .iter()
        .zip(phi.values())
        .map(|(h, p)| h + p * omega - p * (s * p.norm_sqr()))
        .collect();
    Ok(RadialField::new(phi.grid().clone(), r)?.norm_l2())
}
