//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nlslab::functionals::Sigma;
use nlslab::grid::{make_grid, RadialGrid};
use nlslab::solitons::{continue_ground, GroundBranch};
use nlslab::spectral::{solve_ground_sampled, PotentialSpec, SampledPotential, SpectralData};

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature of f on [a, b].
pub fn integrate_gk(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth > 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(&f, a, b, tol, 0)
}

/// Least-squares slope of log(err) against log(h).
pub fn convergence_order(h: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn well() -> PotentialSpec {
    PotentialSpec::gaussian_well(5.0, 1.0)
}

pub struct Fixture {
    pub grid: Arc<RadialGrid>,
    pub pot: SampledPotential,
    pub spectral: SpectralData,
}

pub fn fixture(r_max: f64, n: usize, stretch: f64) -> Fixture {
    let grid = make_grid(r_max, n, stretch).unwrap();
    let pot = well().sample(&grid).unwrap();
    let spectral = solve_ground_sampled(&pot).unwrap();
    Fixture { grid, pot, spectral }
}

impl Fixture {
    pub fn ground(&self, z_max: f64, step: f64) -> GroundBranch {
        let k = (z_max / step).round() as usize;
        let zs: Vec<f64> = (1..=k).map(|j| step * j as f64).collect();
        continue_ground(&self.spectral, &self.pot, Sigma::Focusing, &zs).unwrap()
    }
}
