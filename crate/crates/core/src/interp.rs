//! One-dimensional interpolation: monotone cubic (PCHIP) for resampling
//! fields, and natural cubic splines expressed as linear weights on the
//! knot values so that vector-valued data can be combined cheaply.

use crate::error::{LabError, Result};
use crate::linalg::solve_tridiagonal;

fn check_knots(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(LabError::InvalidParameter("need at least two knots".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|v| !v.is_finite()) {
        return Err(LabError::InvalidParameter("knots must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Locate the interval index i with x[i] <= t <= x[i+1], clamped.
fn interval(x: &[f64], t: f64) -> usize {
    match x.binary_search_by(|v| v.total_cmp(&t)) {
        Ok(i) => i.min(x.len() - 2),
        Err(i) => i.saturating_sub(1).min(x.len() - 2),
    }
}

/// Fritsch–Carlson monotone cubic Hermite interpolant.
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_knots(&x)?;
        if y.len() != x.len() {
            return Err(LabError::Shape { expected: x.len(), got: y.len() });
        }
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value at `t`, or `None` outside the knot range.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (a, b) = self.domain();
        if !(t >= a && t <= b) {
            return None;
        }
        let i = interval(&self.x, t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Some(h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1])
    }
}

/// Three-point end slope with the shape-preserving limiter.
fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Natural cubic spline on fixed knots, stored as the linear map from knot
/// values to knot second derivatives. Evaluation returns weights so that
/// any data vector attached to the knots can be interpolated by a weighted
/// sum.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    x: Vec<f64>,
    /// `curv[i][k]`: second derivative at knot i produced by a unit value at knot k.
    curv: Vec<Vec<f64>>,
}

/// Weights for value, first and second derivative at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineWeights {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl SplineBasis {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        check_knots(&x)?;
        let n = x.len();
        let mut curv = vec![vec![0.0; n]; n];
        if n > 2 {
            let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
            let m = n - 2;
            let diag: Vec<f64> = (1..n - 1).map(|i| 2.0 * (h[i - 1] + h[i])).collect();
            let lower: Vec<f64> = (2..n - 1).map(|i| h[i - 1]).collect();
            let upper: Vec<f64> = (1..n - 2).map(|i| h[i]).collect();
            for k in 0..n {
                let rhs: Vec<f64> = (1..n - 1)
                    .map(|i| {
                        let unit = |j: usize| if j == k { 1.0 } else { 0.0 };
                        6.0 * ((unit(i + 1) - unit(i)) / h[i] - (unit(i) - unit(i - 1)) / h[i - 1])
                    })
                    .collect();
                let sol = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
                debug_assert_eq!(sol.len(), m);
                for (j, v) in sol.into_iter().enumerate() {
                    curv[j + 1][k] = v;
                }
            }
        }
        Ok(Self { x, curv })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Interpolation weights at `t` (clamped to the knot range).
    pub fn weights(&self, t: f64) -> SplineWeights {
        let n = self.x.len();
        let i = interval(&self.x, t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let mut value = vec![0.0; n];
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        value[i] += a;
        value[i + 1] += b;
        d1[i] -= 1.0 / h;
        d1[i + 1] += 1.0 / h;
        let ca = (a * a * a - a) * h * h / 6.0;
        let cb = (b * b * b - b) * h * h / 6.0;
        let da = -(3.0 * a * a - 1.0) * h / 6.0;
        let db = (3.0 * b * b - 1.0) * h / 6.0;
        for k in 0..n {
            let mi = self.curv[i][k];
            let mj = self.curv[i + 1][k];
            value[k] += ca * mi + cb * mj;
            d1[k] += da * mi + db * mj;
            d2[k] += a * mi + b * mj;
        }
        SplineWeights { value, d1, d2 }
    }

    /// Evaluate the spline through scalar data `y`: (value, d1, d2).
    pub fn eval(&self, y: &[f64], t: f64) -> (f64, f64, f64) {
        let w = self.weights(t);
        let dot = |c: &[f64]| c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        (dot(&w.value), dot(&w.d1), dot(&w.d2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pchip_reproduces_knots_and_preserves_monotonicity() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).powf(1.3)).collect();
        let y: Vec<f64> = x.iter().map(|v| (v / 10.0).tanh()).collect();
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((p.eval(*a).unwrap() - b).abs() < 1e-14);
        }
        let mut prev = f64::NEG_INFINITY;
        for k in 0..1000 {
            let t = x[19] * k as f64 / 999.0;
            let v = p.eval(t).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        assert!(p.eval(-1.0).is_none());
    }

    #[test]
    fn spline_is_exact_on_lines_and_matches_smooth_data() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let basis = SplineBasis::new(x.clone()).unwrap();
        let line: Vec<f64> = x.iter().map(|v| 2.0 - 3.0 * v).collect();
        let (v, d1, d2) = basis.eval(&line, 1.234);
        assert!((v - (2.0 - 3.0 * 1.234)).abs() < 1e-12);
        assert!((d1 + 3.0).abs() < 1e-12);
        assert!(d2.abs() < 1e-10);
        let s: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let (v, d1, d2) = basis.eval(&s, 1.5);
        assert!((v - 1.5f64.sin()).abs() < 1e-5);
        assert!((d1 - 1.5f64.cos()).abs() < 1e-4);
        assert!((d2 + 1.5f64.sin()).abs() < 1e-2);
    }
}
