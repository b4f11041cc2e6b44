use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::functionals::{evaluate, Sigma};
use crate::grid::{RadialField, RadialGrid, FOUR_PI};
use crate::spectral::SampledPotential;

/// Profile f with f(r) = r on [0,1], f = 3/2 on [2,∞) and the quintic
/// Hermite join 1 + s − s³ + s⁴/2 (s = r − 1, the s⁵ coefficient vanishes)
/// between; f' = (1 − s)²(1 + 2s) stays in [0, 1]. Returns f and its first
/// three derivatives.
fn profile(r: f64) -> [f64; 4] {
    if r <= 1.0 {
        [r, 1.0, 0.0, 0.0]
    } else if r >= 2.0 {
        [1.5, 0.0, 0.0, 0.0]
    } else {
        let s = r - 1.0;
        [
            1.0 + s - s.powi(3) + 0.5 * s.powi(4),
            1.0 - 3.0 * s * s + 2.0 * s.powi(3),
            -6.0 * s + 6.0 * s * s,
            -6.0 + 12.0 * s,
        ]
    }
}

/// Cutoff profiles of the saturated virial identity, sampled at r/R on the
/// grid nodes.
#[derive(Debug, Clone)]
pub struct VirialCutoff {
    pub radius: f64,
    grid: Arc<RadialGrid>,
    /// R f(r/R), the multiplier of the virial action
    pub weight: Vec<f64>,
    pub f: Vec<f64>,
    /// 1 − f'
    pub f0: Vec<f64>,
    /// Δ(∂_r/2 + 1/r) f
    pub f1: Vec<f64>,
    /// −3/2 + (∂_r/2 + 1/r) f
    pub f2: Vec<f64>,
    /// 1 − R f(r/R)/r, zero inside the saturation radius
    pub outer: Vec<f64>,
}

impl VirialCutoff {
    pub fn new(grid: &Arc<RadialGrid>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(LabError::InvalidParameter(format!("saturation radius must be positive, got {radius}")));
        }
        let n = grid.n();
        let mut out = Self {
            radius,
            grid: grid.clone(),
            weight: Vec::with_capacity(n),
            f: Vec::with_capacity(n),
            f0: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            outer: Vec::with_capacity(n),
        };
        for &r in grid.nodes() {
            let x = r / radius;
            let [f, fp, fpp, fppp] = profile(x);
            if !(0.0..=1.0).contains(&fp) {
                return Err(LabError::InvalidParameter(format!("cutoff slope {fp} outside [0,1] at r = {r}")));
            }
            // g = f'/2 + f/x and f₁ = g'' + 2g'/x
            let g = 0.5 * fp + f / x;
            let g1 = 0.5 * fpp + fp / x - f / (x * x);
            let g2 = 0.5 * fppp + fpp / x - 2.0 * fp / (x * x) + 2.0 * f / x.powi(3);
            out.weight.push(radius * f);
            out.f.push(f);
            out.f0.push(1.0 - fp);
            out.f1.push(if x <= 1.0 || x >= 2.0 { 0.0 } else { g2 + 2.0 * g1 / x });
            out.f2.push(if x <= 1.0 { 0.0 } else { g - 1.5 });
            out.outer.push(if x <= 1.0 { 0.0 } else { 1.0 - f / x });
        }
        Ok(out)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Columns r, f(r/R), f0, f1, f2 in the whitespace column format.
    pub fn to_text(&self) -> String {
        let mut s = format!("# radius = {}\n# r f f0 f1 f2\n", self.radius);
        for (i, r) in self.grid.nodes().iter().enumerate() {
            s.push_str(&format!(
                "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e}\n",
                r, self.f[i], self.f0[i], self.f1[i], self.f2[i]
            ));
        }
        s
    }
}

/// ⟨R f_R u | i u_r⟩.
pub fn virial_action(u: &RadialField, cutoff: &VirialCutoff) -> Result<f64> {
    if !u.grid().same_as(&cutoff.grid) {
        return Err(LabError::GridMismatch("field and cutoff grids differ".into()));
    }
    let du = u.grid().derivative(u.values());
    let i = Complex64::i();
    let g: Vec<f64> = u
        .values()
        .iter()
        .zip(&du)
        .zip(&cutoff.weight)
        .map(|((a, d), w)| w * (a * (i * d).conj()).re)
        .collect();
    u.grid().integrate(&g)
}

/// Centered time difference of the virial action and the right-hand side of
/// the saturated virial identity evaluated at u.
pub fn virial_monitor(
    u: &RadialField,
    u_prev: &RadialField,
    u_next: &RadialField,
    cutoff: &VirialCutoff,
    pot: &SampledPotential,
    sigma: Sigma,
    dt: f64,
) -> Result<(f64, f64)> {
    if !(dt > 0.0) {
        return Err(LabError::InvalidParameter("dt must be positive".into()));
    }
    let lhs = (virial_action(u_next, cutoff)? - virial_action(u_prev, cutoff)?) / (2.0 * dt);
    let rep = evaluate(u, pot, sigma)?;
    let grid = u.grid();
    let du = grid.derivative(u.values());
    let r2 = cutoff.radius * cutoff.radius;
    let s = sigma.value();
    let mut acc = 0.0;
    for (i, (a, d)) in u.values().iter().zip(&du).enumerate() {
        let rho = a.norm_sqr();
        let local = 2.0 * d.norm_sqr() * cutoff.f0[i] + rho * cutoff.f1[i] / r2 + s * rho * rho * cutoff.f2[i];
        acc += grid.weights()[i] * (-local + cutoff.outer[i] * rho * pot.r_vr[i]);
    }
    Ok((lhs, 2.0 * rep.k2 + FOUR_PI * acc))
}
