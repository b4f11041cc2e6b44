//! The free ground state −ΔQ + Q = Q³ by radial shooting.

use std::sync::{Arc, OnceLock};

use crate::error::{LabError, Result};
use crate::functionals::Sigma;
use crate::grid::RadialGrid;
use crate::spectral::SampledPotential;

use super::newton::Stationary;
use super::{BranchTag, SolitonBranchPoint};

const SHOOT_STEP: f64 = 1e-3;
const SHOOT_END: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// Crossed zero: initial value too large.
    Over,
    /// Turned upward while positive (or never decided): too small.
    Under,
}

fn rhs(r: f64, q: f64, dq: f64) -> (f64, f64) {
    (dq, -2.0 * dq / r + q - q * q * q)
}

/// Series start at r = h, then RK4. Calls `record` with (r, Q, Q') for each
/// step until the outcome is decided.
fn shoot(a: f64, mut record: impl FnMut(f64, f64, f64)) -> Shot {
    let h = SHOOT_STEP;
    let b = (a - a * a * a) / 6.0;
    let c = b * (1.0 - 3.0 * a * a) / 20.0;
    record(0.0, a, 0.0);
    let mut r = h;
    let mut q = a + b * h * h + c * h.powi(4);
    let mut dq = 2.0 * b * h + 4.0 * c * h.powi(3);
    record(r, q, dq);
    while r < SHOOT_END {
        let (k1q, k1d) = rhs(r, q, dq);
        let (k2q, k2d) = rhs(r + h / 2.0, q + h / 2.0 * k1q, dq + h / 2.0 * k1d);
        let (k3q, k3d) = rhs(r + h / 2.0, q + h / 2.0 * k2q, dq + h / 2.0 * k2d);
        let (k4q, k4d) = rhs(r + h, q + h * k3q, dq + h * k3d);
        q += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        dq += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        r += h;
        if q < 0.0 {
            return Shot::Over;
        }
        if dq > 0.0 {
            return Shot::Under;
        }
        record(r, q, dq);
    }
    Shot::Under
}

/// Q(r) as a function: cubic Hermite interpolation of the shot solution,
/// continued by the exact linear tail K e^{−r}/r.
#[derive(Debug, Clone)]
pub struct QProfile {
    /// Q(0)
    pub q0: f64,
    h: f64,
    q: Vec<f64>,
    dq: Vec<f64>,
    r_cut: f64,
    tail: f64,
}

impl QProfile {
    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_cut {
            return self.tail * (-r).exp() / r;
        }
        let i = ((r / self.h) as usize).min(self.q.len() - 2);
        let x0 = i as f64 * self.h;
        let s = (r - x0) / self.h;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.q[i]
            + (s3 - 2.0 * s2 + s) * self.h * self.dq[i]
            + (-2.0 * s3 + 3.0 * s2) * self.q[i + 1]
            + (s3 - s2) * self.h * self.dq[i + 1]
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }
}

fn compute_profile() -> Result<QProfile> {
    let (mut lo, mut hi) = (1.0, 10.0);
    if shoot(lo, |_, _, _| {}) != Shot::Under || shoot(hi, |_, _, _| {}) != Shot::Over {
        return Err(LabError::ShootingFailure("no bracket for Q(0) in (1, 10)".into()));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, |_, _, _| {}) {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
        }
    }
    let mut lo_traj = Vec::new();
    shoot(lo, |_, q, _| lo_traj.push(q));
    let mut hi_traj = Vec::new();
    shoot(hi, |_, q, _| hi_traj.push(q));
    let a = 0.5 * (lo + hi);
    let mut q = Vec::new();
    let mut dq = Vec::new();
    shoot(a, |_, x, d| {
        q.push(x);
        dq.push(d);
    });
    // Keep the stretch where the two bracketing shots still agree.
    let len = q.len().min(lo_traj.len()).min(hi_traj.len());
    let mut cut = len - 1;
    for i in 1..len {
        if (lo_traj[i] - hi_traj[i]).abs() > 1e-3 * q[i].abs() {
            cut = i;
            break;
        }
    }
    if cut < 2 {
        return Err(LabError::ShootingFailure("shot solution unusable".into()));
    }
    q.truncate(cut + 1);
    dq.truncate(cut + 1);
    let r_cut = cut as f64 * SHOOT_STEP;
    let tail = q[cut] * r_cut * r_cut.exp();
    Ok(QProfile { q0: a, h: SHOOT_STEP, q, dq, r_cut, tail })
}

/// The shooting profile, computed once per process.
pub fn q_profile() -> Result<&'static QProfile> {
    static PROFILE: OnceLock<Result<QProfile>> = OnceLock::new();
    PROFILE.get_or_init(compute_profile).as_ref().map_err(|e| e.clone())
}

/// Q on a grid: shooting profile sampled on the nodes, polished by Newton
/// on the discrete equation with V = 0, ω = 1.
pub fn solve_q(grid: &Arc<RadialGrid>) -> Result<SolitonBranchPoint> {
    let profile = q_profile()?;
    let pot = SampledPotential::zero(grid);
    let st = Stationary::new(&pot, Sigma::Focusing);
    let seed: Vec<f64> = grid.nodes().iter().map(|&r| profile.eval(r)).collect();
    let f = st
        .newton_fixed_omega(&seed, 1.0)
        .map_err(|e| LabError::ShootingFailure(format!("Newton polish failed: {e}")))?;
    st.point(f, 1.0, BranchTag::Q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_matches_known_central_value() {
        let p = q_profile().unwrap();
        assert!((p.q0 - 4.3374).abs() < 1e-3, "{}", p.q0);
        assert!(p.r_cut() > 8.0);
        assert!((p.eval(p.r_cut() - 1e-9) - p.eval(p.r_cut() + 1e-9)).abs() < 1e-9);
    }
}
