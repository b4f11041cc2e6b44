//! Crank–Nicolson step with the mass- and energy-conserving midpoint
//! nonlinearity. With Q the quadrature weights, S the kinetic stiffness and
//! A(N) = S + Q(V − σN), one step solves
//! (Q − i dt/2 A(N)) u⁺ = (Q + i dt/2 A(N)) u,  N = (|u|² + |u⁺|²)/2.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::functionals::Sigma;
use crate::linalg::{solve_block_tridiagonal, solve_tridiagonal, Block};
use crate::spectral::SampledPotential;

const NEWTON_MAX: usize = 20;

/// How the last step converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    FixedPoint(usize),
    Newton(usize),
}

#[derive(Debug, Clone)]
pub struct Stepper {
    sigma: f64,
    q: Vec<f64>,
    /// diagonal of S + QV
    a0: Vec<f64>,
    off: Vec<f64>,
    pub fp_max_iter: usize,
    pub fp_tol: f64,
}

impl Stepper {
    pub fn new(pot: &SampledPotential, sigma: Sigma) -> Self {
        let grid = &pot.grid;
        let (sd, so) = grid.stiffness();
        let q = grid.weights().to_vec();
        let a0 = sd.iter().zip(&q).zip(&pot.v).map(|((s, w), v)| s + w * v).collect();
        Self { sigma: sigma.value(), q, a0, off: so, fp_max_iter: 50, fp_tol: 1e-12 }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Diagonal of A(N).
    fn a_diag(&self, u: &[Complex64], w: &[Complex64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.a0[k] - self.sigma * self.q[k] * 0.5 * (u[k].norm_sqr() + w[k].norm_sqr()))
            .collect()
    }

    /// A(N) x for the tridiagonal A with the given diagonal.
    fn a_mul(&self, diag: &[f64], x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let mut acc = x[k] * diag[k];
                if k > 0 {
                    acc += x[k - 1] * self.off[k - 1];
                }
                if k + 1 < n {
                    acc += x[k + 1] * self.off[k];
                }
                acc
            })
            .collect()
    }

    fn converged(&self, a: &[Complex64], b: &[Complex64]) -> bool {
        let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        diff <= self.fp_tol * scale
    }

    /// One step of size dt without any step-size control.
    pub fn try_step(&self, u: &[Complex64], dt: f64) -> Result<(Vec<Complex64>, StepMethod)> {
        let h = Complex64::new(0.0, 0.5 * dt);
        let mut w = u.to_vec();
        for it in 1..=self.fp_max_iter {
            let diag = self.a_diag(u, &w);
            let au = self.a_mul(&diag, u);
            let rhs: Vec<Complex64> = (0..self.len()).map(|k| u[k] * self.q[k] + h * au[k]).collect();
            let md: Vec<Complex64> = (0..self.len()).map(|k| self.q[k] - h * diag[k]).collect();
            let mo: Vec<Complex64> = self.off.iter().map(|o| -h * o).collect();
            let next = solve_tridiagonal(&mo, &md, &mo, &rhs)?;
            let done = self.converged(&next, &w);
            w = next;
            if done {
                return Ok((w, StepMethod::FixedPoint(it)));
            }
        }
        self.newton(u, w, dt)
    }

    /// Newton on G(w) = Q(w − u) − i dt/2 A(N(w)) (w + u) in (Re, Im) pairs.
    fn newton(&self, u: &[Complex64], mut w: Vec<Complex64>, dt: f64) -> Result<(Vec<Complex64>, StepMethod)> {
        let n = self.len();
        let h = Complex64::new(0.0, 0.5 * dt);
        let lin = |m: Complex64| -> Block { [[m.re, -m.im], [m.im, m.re]] };
        for it in 1..=NEWTON_MAX {
            let diag = self.a_diag(u, &w);
            let sum: Vec<Complex64> = (0..n).map(|k| w[k] + u[k]).collect();
            let a_sum = self.a_mul(&diag, &sum);
            let g: Vec<[f64; 2]> = (0..n)
                .map(|k| {
                    let v = (w[k] - u[k]) * self.q[k] - h * a_sum[k];
                    [-v.re, -v.im]
                })
                .collect();
            let mut bd: Vec<Block> = Vec::with_capacity(n);
            for k in 0..n {
                let mut b = lin(Complex64::new(self.q[k], 0.0) - h * diag[k]);
                let c = h * self.sigma * self.q[k] * sum[k];
                b[0][0] += c.re * w[k].re;
                b[0][1] += c.re * w[k].im;
                b[1][0] += c.im * w[k].re;
                b[1][1] += c.im * w[k].im;
                bd.push(b);
            }
            let bo: Vec<Block> = self.off.iter().map(|o| lin(-h * o)).collect();
            let delta = solve_block_tridiagonal(&bo, &bd, &bo, &g)?;
            let next: Vec<Complex64> = w.iter().zip(&delta).map(|(a, d)| a + Complex64::new(d[0], d[1])).collect();
            let done = self.converged(&next, &w);
            w = next;
            if done {
                return Ok((w, StepMethod::Newton(it)));
            }
        }
        Err(LabError::NewtonDivergence("midpoint step did not converge".into()))
    }
}
