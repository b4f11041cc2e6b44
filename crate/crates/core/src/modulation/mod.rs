//! Modulation coordinates u = Φ[z] + η with ⟨iη|∂_jΦ[z]⟩ = 0, the radiation
//! ξ = P_c η, the saturated virial monitor and the Strichartz-type ST norm.

mod st;
mod virial;

pub use st::{st_norm_accumulate, StAccumulator};
pub use virial::{virial_action, virial_monitor, VirialCutoff};

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::functionals::Sigma;
use crate::grid::{RadialField, FOUR_PI};
use crate::interp::SplineBasis;
use crate::solitons::GroundBranch;
use crate::spectral::{project_continuous, SpectralData};

const MAX_ITERS: usize = 20;

/// Ground branch prepared for interpolation at arbitrary complex z.
#[derive(Debug, Clone)]
pub struct ModulationContext {
    pub spectral: SpectralData,
    /// Odd (for Φ) and even (for Ω) extension knots −ρ_K..ρ_K.
    basis: SplineBasis,
    profiles: Vec<Vec<f64>>,
    omegas: Vec<f64>,
    rho_max: f64,
    /// Modulation mass surrogate: largest branch mass.
    pub mu_p: f64,
}

/// Φ(ρ) and its ρ-derivatives for real ρ > 0, with Ω(ρ).
struct Profile {
    phi: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    omega: f64,
}

impl ModulationContext {
    pub fn new(spectral: SpectralData, branch: &GroundBranch) -> Result<Self> {
        if branch.points.len() < 3 {
            return Err(LabError::InvalidParameter("ground branch needs at least 3 points".into()));
        }
        if !branch.points[0].phi.grid().same_as(spectral.phi0.grid()) {
            return Err(LabError::GridMismatch("branch and spectral data grids differ".into()));
        }
        let k = branch.z_values.len();
        let mut knots = Vec::with_capacity(2 * k + 1);
        knots.extend(branch.z_values.iter().rev().map(|z| -z));
        knots.push(0.0);
        knots.extend_from_slice(&branch.z_values);
        let basis = SplineBasis::new(knots)?;
        let profiles = branch.points.iter().map(|p| p.phi.re()).collect();
        let omegas = branch.omegas();
        Ok(Self {
            basis,
            profiles,
            omegas,
            rho_max: branch.z_max(),
            mu_p: branch.mass_curve.last().copied().unwrap_or(0.0),
            spectral,
        })
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    fn profile(&self, rho: f64) -> Profile {
        let w = self.basis.weights(rho);
        let k = self.profiles.len();
        let n = self.profiles[0].len();
        let mut phi = vec![0.0; n];
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        let mut omega = -self.spectral.e0 * w.value[k];
        for j in 0..k {
            // Knot k + 1 + j carries Φ_j, its mirror k − 1 − j carries −Φ_j.
            let (pos, neg) = (k + 1 + j, k - 1 - j);
            let c0 = w.value[pos] - w.value[neg];
            let c1 = w.d1[pos] - w.d1[neg];
            let c2 = w.d2[pos] - w.d2[neg];
            omega += self.omegas[j] * (w.value[pos] + w.value[neg]);
            for (i, v) in self.profiles[j].iter().enumerate() {
                phi[i] += c0 * v;
                d1[i] += c1 * v;
                d2[i] += c2 * v;
            }
        }
        Profile { phi, d1, d2, omega }
    }

    /// Φ[z] = e^{iθ} Φ(|z|).
    pub fn phi(&self, z: Complex64) -> Result<RadialField> {
        let rho = z.norm();
        if rho > self.rho_max {
            return Err(LabError::OutOfRegime(format!("|z| = {rho} beyond branch range {}", self.rho_max)));
        }
        let phase = if rho > 0.0 { z / rho } else { Complex64::new(1.0, 0.0) };
        let p = self.profile(rho);
        RadialField::new(self.spectral.phi0.grid().clone(), p.phi.iter().map(|v| phase * v).collect())
    }

    /// Ω[z] = Ω(|z|).
    pub fn omega(&self, z: Complex64) -> f64 {
        self.profile(z.norm()).omega
    }
}

/// One decomposition of a field.
#[derive(Debug, Clone)]
pub struct ModulationFrame {
    pub t: f64,
    pub z: Complex64,
    pub omega: f64,
    pub eta: RadialField,
    pub xi: RadialField,
    /// max_j |⟨iη|∂_jΦ[z]⟩|
    pub orth_residual: f64,
    /// Filled by `zdot_residual` when neighbours are available.
    pub zdot_estimate: Option<Complex64>,
}

impl ModulationFrame {
    /// |M(u) − M(Φ[z]) − M(η)| / M(u).
    pub fn mass_split_error(&self, u: &RadialField) -> Result<f64> {
        let phi = u.sub(&self.eta)?;
        let mu = u.norm_l2().powi(2) / 2.0;
        let split = phi.norm_l2().powi(2) / 2.0 + self.eta.norm_l2().powi(2) / 2.0;
        Ok((mu - split).abs() / mu.max(f64::MIN_POSITIVE))
    }
}

/// Weighted real inner product ⟨a|b⟩ = Re ∫ a b̄ on node arrays.
fn real_inner(q: &[f64], a: &[Complex64], b: &[Complex64]) -> f64 {
    FOUR_PI * q.iter().zip(a.iter().zip(b)).map(|(w, (x, y))| w * (x * y.conj()).re).sum::<f64>()
}

/// Derivatives of Φ at the real point ρ in the z₁, z₂ directions (as
/// complex arrays), and the second derivatives ∂_j∂_kΦ.
struct Jet {
    phi: Vec<Complex64>,
    d: [Vec<Complex64>; 2],
    dd: [[Vec<Complex64>; 2]; 2],
}

fn jet(p: &Profile, rho: f64) -> Jet {
    let c = |v: f64| Complex64::new(v, 0.0);
    let ci = |v: f64| Complex64::new(0.0, v);
    let phi: Vec<Complex64> = p.phi.iter().map(|&v| c(v)).collect();
    let d1: Vec<Complex64> = p.d1.iter().map(|&v| c(v)).collect();
    let d2: Vec<Complex64> = p.phi.iter().map(|&v| ci(v / rho)).collect();
    let g1: Vec<f64> = p.d1.iter().zip(&p.phi).map(|(a, b)| a / rho - b / (rho * rho)).collect();
    let d11: Vec<Complex64> = p.d2.iter().map(|&v| c(v)).collect();
    let d12: Vec<Complex64> = g1.iter().map(|&v| ci(v)).collect();
    let d22: Vec<Complex64> = g1.iter().map(|&v| c(v)).collect();
    Jet { phi, d: [d1, d2], dd: [[d11, d12.clone()], [d12, d22]] }
}

fn times_i(a: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|v| v * Complex64::i()).collect()
}

/// Solve for z with ⟨u − Φ[z]|i∂_jΦ[z]⟩ = 0, j = 1, 2.
pub fn decompose(u: &RadialField, ctx: &ModulationContext, z_guess: Option<Complex64>, t: f64) -> Result<ModulationFrame> {
    let grid = ctx.spectral.phi0.grid();
    if !u.grid().same_as(grid) {
        return Err(LabError::GridMismatch("field and modulation grids differ".into()));
    }
    let mass = u.norm_l2().powi(2) / 2.0;
    if mass == 0.0 {
        return Err(LabError::NotApplicable("zero field".into()));
    }
    if mass > ctx.mu_p {
        return Err(LabError::NotApplicable(format!("mass {mass} above the modulation surrogate {}", ctx.mu_p)));
    }
    let proj = u.inner(&ctx.spectral.phi0)?;
    let seeds: Vec<Complex64> = match z_guess {
        Some(z) => vec![z, proj],
        None => {
            let phase = if proj.norm() > 0.0 { proj / proj.norm() } else { Complex64::new(1.0, 0.0) };
            vec![phase * (2.0 * mass).sqrt(), proj]
        }
    };
    let mut last_err = LabError::OutOfRegime("no seed".into());
    for seed in seeds {
        match newton(u, ctx, seed) {
            Ok((z, jet_at, phase)) => return finish(u, ctx, z, &jet_at, phase, t),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn newton(u: &RadialField, ctx: &ModulationContext, seed: Complex64) -> Result<(Complex64, Jet, Complex64)> {
    let q = u.grid().weights();
    let mut z = seed;
    for _ in 0..MAX_ITERS {
        let rho = z.norm();
        if !(rho > 0.0) || rho > ctx.rho_max {
            return Err(LabError::OutOfRegime(format!("|z| = {rho} outside (0, {}]", ctx.rho_max)));
        }
        let phase = z / rho;
        let v: Vec<Complex64> = u.values().iter().map(|x| x * phase.conj()).collect();
        let p = ctx.profile(rho);
        let j = jet(&p, rho);
        let eta: Vec<Complex64> = v.iter().zip(&j.phi).map(|(a, b)| a - b).collect();
        let id = [times_i(&j.d[0]), times_i(&j.d[1])];
        let f = [real_inner(q, &eta, &id[0]), real_inner(q, &eta, &id[1])];
        let mut m = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] = -real_inner(q, &j.d[b], &id[a]) + real_inner(q, &eta, &times_i(&j.dd[a][b]));
            }
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(LabError::DegenerateFrame);
        }
        let d0 = -(f[0] * m[1][1] - f[1] * m[0][1]) / det;
        let d1 = -(m[0][0] * f[1] - m[1][0] * f[0]) / det;
        let znew = phase * Complex64::new(rho + d0, d1);
        let converged = (znew - z).norm() <= 1e-14 * rho.max(1e-300);
        z = znew;
        if converged {
            let rho = z.norm();
            let p = ctx.profile(rho);
            return Ok((z, jet(&p, rho), z / rho));
        }
    }
    Err(LabError::OutOfRegime(format!("decomposition did not converge in {MAX_ITERS} iterations")))
}

fn finish(u: &RadialField, ctx: &ModulationContext, z: Complex64, j: &Jet, phase: Complex64, t: f64) -> Result<ModulationFrame> {
    let grid = u.grid();
    let q = grid.weights();
    let phi: Vec<Complex64> = j.phi.iter().map(|v| v * phase).collect();
    let eta_vals: Vec<Complex64> = u.values().iter().zip(&phi).map(|(a, b)| a - b).collect();
    let eta = RadialField::new(grid.clone(), eta_vals)?;
    let orth_residual = (0..2)
        .map(|k| {
            let dk: Vec<Complex64> = j.d[k].iter().map(|v| v * phase).collect();
            real_inner(q, &times_i(eta.values()), &dk).abs()
        })
        .fold(0.0, f64::max);
    let xi = project_continuous(&eta, &ctx.spectral)?;
    let omega = ctx.omega(z);
    Ok(ModulationFrame { t, z, omega, eta, xi, orth_residual, zdot_estimate: None })
}

/// (ż + iΩz) − N̲ at the middle frame, with ż from the centered difference of
/// the neighbours and N̲ from the modulation system
/// Σ_j M_{j,k} w_j = ⟨N|∂_kΦ⟩, M_{j,k} = ⟨i∂_jΦ|∂_kΦ⟩ − ⟨iη|∂_j∂_kΦ⟩,
/// N = σ(2Φ|η|² + Φ̄η² + |η|²η).
pub fn zdot_residual(
    prev: &ModulationFrame,
    frame: &ModulationFrame,
    next: &ModulationFrame,
    ctx: &ModulationContext,
    sigma: Sigma,
) -> Result<Complex64> {
    let rho = frame.z.norm();
    if rho == 0.0 {
        return Err(LabError::NotApplicable("z = 0".into()));
    }
    let dt = next.t - prev.t;
    if !(dt > 0.0) {
        return Err(LabError::InvalidParameter("frames must be ordered in time".into()));
    }
    let zdot = (next.z - prev.z) / dt;
    let phase = frame.z / rho;
    let q = frame.eta.grid().weights();
    let p = ctx.profile(rho);
    let j = jet(&p, rho);
    // Work in the frame rotated to real z.
    let eta: Vec<Complex64> = frame.eta.values().iter().map(|v| v * phase.conj()).collect();
    let s = sigma.value();
    let nl: Vec<Complex64> = j
        .phi
        .iter()
        .zip(&eta)
        .map(|(ph, e)| (ph * (2.0 * e.norm_sqr()) + ph.conj() * e * e + e * e.norm_sqr()) * s)
        .collect();
    let mut m = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            m[a][b] = real_inner(q, &times_i(&j.d[a]), &j.d[b]) - real_inner(q, &times_i(&eta), &j.dd[a][b]);
        }
    }
    let rhs = [real_inner(q, &nl, &j.d[0]), real_inner(q, &nl, &j.d[1])];
    // Σ_j M_{j,k} w_j = rhs_k: the transpose system.
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(LabError::DegenerateFrame);
    }
    let w0 = (rhs[0] * m[1][1] - rhs[1] * m[1][0]) / det;
    let w1 = (m[0][0] * rhs[1] - m[0][1] * rhs[0]) / det;
    let nbar = phase * Complex64::new(w0, w1);
    Ok(zdot + Complex64::i() * frame.omega * frame.z - nbar)
}
