//! Radial discretization of radial functions on R^3.
//!
//! Nodes come from a map r = R(s) of the unit interval, s_k = k/(n+1) for
//! k = 1..n, with r = 0 and r = r_max the excluded end points. All integrals
//! include the 4π angular factor.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};

pub const FOUR_PI: f64 = 4.0 * PI;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
    stretch: f64,
    /// Step in the mapped coordinate s.
    ds: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// dR/ds at the nodes.
    jac: Vec<f64>,
    /// n + 1 cell lengths: origin→r_1, r_1→r_2, ..., r_n→r_max.
    cells: Vec<f64>,
}

/// Build a grid. `stretch` is the ratio of the last to the first spacing;
/// 1 gives uniform nodes.
pub fn make_grid(r_max: f64, n: usize, stretch: f64) -> Result<Arc<RadialGrid>> {
    if !r_max.is_finite() || r_max <= 0.0 {
        return Err(LabError::InvalidParameter(format!("r_max must be positive and finite, got {r_max}")));
    }
    if n < 16 {
        return Err(LabError::InvalidParameter(format!("need n >= 16 nodes, got {n}")));
    }
    if !stretch.is_finite() || stretch < 1.0 {
        return Err(LabError::InvalidParameter(format!("stretch must be >= 1, got {stretch}")));
    }
    let beta = stretch.ln();
    let map = |s: f64| -> (f64, f64) {
        if beta < 1e-12 {
            (r_max * s, r_max)
        } else {
            let denom = beta.exp_m1();
            (r_max * (beta * s).exp_m1() / denom, r_max * beta * (beta * s).exp() / denom)
        }
    };
    let ds = 1.0 / (n as f64 + 1.0);
    let (nodes, jac): (Vec<f64>, Vec<f64>) = (1..=n).map(|k| map(k as f64 * ds)).unzip();
    let mut cells = Vec::with_capacity(n + 1);
    let mut prev = 0.0;
    for &r in &nodes {
        cells.push(r - prev);
        prev = r;
    }
    cells.push(r_max - prev);

    // Trapezoid in s on G(s) = R^2 R' g. G vanishes at s = 0 together with
    // its first derivative, so the left end needs no correction. At the
    // wall the third-order Gregory end weights are used, with the unknown
    // value g(r_max) extrapolated linearly from the last two nodes.
    let mut weights: Vec<f64> = nodes.iter().zip(&jac).map(|(r, j)| ds * r * r * j).collect();
    let (_, jac_end) = map(1.0);
    let g_end = r_max * r_max * jac_end;
    weights[n - 2] = ds * (23.0 / 24.0 * nodes[n - 2].powi(2) * jac[n - 2] - 3.0 / 8.0 * g_end);
    weights[n - 1] = ds * (7.0 / 6.0 * nodes[n - 1].powi(2) * jac[n - 1] + 3.0 / 4.0 * g_end);
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(LabError::InvalidParameter("grid too coarse for positive quadrature weights".into()));
    }
    Ok(Arc::new(RadialGrid { r_max, n, stretch, ds, nodes, weights, jac, cells }))
}

impl RadialGrid {
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for ∫ g r^2 dr (without 4π).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Smallest spacing (near the origin).
    pub fn min_spacing(&self) -> f64 {
        self.cells.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// ∫_{R^3} g dx = 4π Σ q_k g_k.
    pub fn integrate(&self, g: &[f64]) -> Result<f64> {
        self.check_len(g.len())?;
        Ok(self.integrate_raw(g))
    }

    pub(crate) fn integrate_raw(&self, g: &[f64]) -> f64 {
        FOUR_PI * self.weights.iter().zip(g).map(|(w, v)| w * v).sum::<f64>()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(LabError::Shape { expected: self.n, got: len });
        }
        Ok(())
    }

    /// Kinetic stiffness matrix (diag, off): f^T S f · 4π = ‖∇f‖² for real f,
    /// from the w = r f substitution with w = 0 at both ends.
    pub fn stiffness(&self) -> (Vec<f64>, Vec<f64>) {
        let r = &self.nodes;
        let c = &self.cells;
        let diag = (0..self.n).map(|i| r[i] * r[i] * (1.0 / c[i] + 1.0 / c[i + 1])).collect();
        let off = (0..self.n - 1).map(|i| -r[i] * r[i + 1] / c[i + 1]).collect();
        (diag, off)
    }

    /// ‖∇f‖² from the discrete quadratic form.
    pub fn gradient_norm_sq(&self, f: &[Complex64]) -> f64 {
        let r = &self.nodes;
        let mut acc = 0.0;
        let mut prev = Complex64::new(0.0, 0.0);
        for i in 0..self.n {
            let w = f[i] * r[i];
            acc += (w - prev).norm_sqr() / self.cells[i];
            prev = w;
        }
        acc += prev.norm_sqr() / self.cells[self.n];
        FOUR_PI * acc
    }

    /// Derivative in r: centered in s at interior nodes, one-sided second
    /// order at the first and last node.
    pub fn derivative<T>(&self, f: &[T]) -> Vec<T>
    where
        T: Copy + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
    {
        let n = self.n;
        let inv = 1.0 / (2.0 * self.ds);
        (0..n)
            .map(|i| {
                let ds = if i == 0 {
                    (f[1] * 4.0 - f[0] * 3.0 - f[2]) * inv
                } else if i == n - 1 {
                    (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * inv
                } else {
                    (f[i + 1] - f[i - 1]) * inv
                };
                ds * (1.0 / self.jac[i])
            })
            .collect()
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other) || self == other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    DirichletAtRmax,
}

/// Complex radial function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
    boundary: Boundary,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values, boundary: Boundary::DirichletAtRmax })
    }

    pub fn zeros(grid: &Arc<RadialGrid>) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.n], boundary: Boundary::DirichletAtRmax }
    }

    pub fn from_real(grid: &Arc<RadialGrid>, values: &[f64]) -> Result<Self> {
        Self::new(grid.clone(), values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Self { grid: grid.clone(), values, boundary: Boundary::DirichletAtRmax }
    }

    pub fn from_real_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs_sq(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect(), boundary: self.boundary }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn check_same_grid(&self, other: &RadialField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(LabError::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &RadialField) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &RadialField) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    /// self + c·other
    pub fn axpy(&self, c: Complex64, other: &RadialField) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(self.zip(other, |a, b| a + c * b))
    }

    fn zip(&self, other: &RadialField, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid.clone(), values, boundary: self.boundary }
    }

    /// Complex inner product (f|g) = ∫ f ḡ dx.
    pub fn inner(&self, other: &RadialField) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self
            .grid
            .weights
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| a * b.conj() * w)
            .sum();
        Ok(s * FOUR_PI)
    }

    /// Real inner product ⟨f|g⟩ = Re (f|g).
    pub fn real_inner(&self, other: &RadialField) -> Result<f64> {
        Ok(self.inner(other)?.re)
    }

    pub fn norm_l2(&self) -> f64 {
        self.grid.integrate_raw(&self.abs_sq()).sqrt()
    }

    pub fn norm_lp(&self, p: f64) -> f64 {
        let g: Vec<f64> = self.values.iter().map(|v| v.norm().powf(p)).collect();
        self.grid.integrate_raw(&g).powf(1.0 / p)
    }

    /// ‖∇f‖_{L²}.
    pub fn gradient_norm(&self) -> f64 {
        self.grid.gradient_norm_sq(&self.values).sqrt()
    }

    /// H¹ norm (‖f‖² + ‖∇f‖²)^{1/2}.
    pub fn norm_h1(&self) -> f64 {
        (self.norm_l2().powi(2) + self.grid.gradient_norm_sq(&self.values)).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Serialize as "r Re Im" lines with a header recording the grid.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut out = format!("# r_max = {:e}\n# n = {}\n# stretch = {:e}\n", g.r_max, g.n, g.stretch);
        for (r, v) in g.nodes.iter().zip(&self.values) {
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", r, v.re, v.im);
        }
        out
    }

    /// Parse the three-column format. The grid is rebuilt from the header.
    pub fn from_text(text: &str) -> Result<Self> {
        let table = read_columns(text)?;
        let header = |key: &str| -> Result<f64> {
            table
                .header
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| LabError::Parse(format!("missing header entry {key}")))
        };
        let grid = make_grid(header("r_max")?, header("n")? as usize, header("stretch")?)?;
        if table.rows.len() != grid.n {
            return Err(LabError::Shape { expected: grid.n, got: table.rows.len() });
        }
        for (row, r) in table.rows.iter().zip(&grid.nodes) {
            if (row[0] - r).abs() > 1e-9 * (1.0 + r.abs()) {
                return Err(LabError::GridMismatch(format!("node {} does not match rebuilt grid {}", row[0], r)));
            }
        }
        let values = table.rows.iter().map(|row| Complex64::new(row[1], row[2])).collect();
        Self::new(grid, values)
    }
}

/// Three-column numeric table with `# key = value` header lines.
#[derive(Debug, Clone, Default)]
pub struct ColumnTable {
    pub header: Vec<(String, f64)>,
    pub rows: Vec<[f64; 3]>,
}

pub fn read_columns(text: &str) -> Result<ColumnTable> {
    let mut table = ColumnTable::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                if let Ok(v) = v.trim().parse::<f64>() {
                    table.header.push((k.trim().to_string(), v));
                }
            }
            continue;
        }
        let cols: Vec<f64> = line
            .split_whitespace()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| LabError::Parse(format!("line {}: {e}", lineno + 1)))?;
        let row = match cols.as_slice() {
            [a, b] => [*a, *b, 0.0],
            [a, b, c] => [*a, *b, *c],
            _ => return Err(LabError::Parse(format!("line {}: expected 2 or 3 columns", lineno + 1))),
        };
        table.rows.push(row);
    }
    Ok(table)
}

/// (−Δ + V) f with the Laplacian acting on w = r f. The operator is
/// self-adjoint for the grid quadrature.
pub fn apply_h(f: &RadialField, v: &[f64]) -> Result<RadialField> {
    let g = f.grid();
    g.check_len(v.len())?;
    let r = &g.nodes;
    let c = &g.cells;
    let n = g.n;
    let vals = f.values();
    let w = |i: usize| vals[i] * r[i];
    let zero = Complex64::new(0.0, 0.0);
    let out = (0..n)
        .map(|i| {
            let wl = if i == 0 { zero } else { w(i - 1) };
            let wr = if i + 1 == n { zero } else { w(i + 1) };
            let wi = w(i);
            let flux = (wr - wi) / c[i + 1] - (wi - wl) / c[i];
            -flux * (r[i] / g.weights[i]) + vals[i] * v[i]
        })
        .collect();
    RadialField::new(g.clone(), out)
}

/// radial derivative ∂_r f as a field.
pub fn radial_derivative(f: &RadialField) -> RadialField {
    let d = f.grid().derivative(f.values());
    RadialField { grid: f.grid().clone(), values: d, boundary: f.boundary }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(0.0, 100, 1.0).is_err());
        assert!(make_grid(f64::NAN, 100, 1.0).is_err());
        assert!(make_grid(1.0, 15, 1.0).is_err());
        assert!(make_grid(1.0, 100, 0.5).is_err());
    }

    #[test]
    fn quadrature_moments() {
        for &(stretch, n) in &[(1.0, 2000), (10.0, 4000), (50.0, 8000)] {
            let g = make_grid(3.0, n, stretch).unwrap();
            let one = vec![1.0; g.n()];
            let m0: f64 = g.weights().iter().sum();
            assert!((m0 / 9.0 - 1.0).abs() < 1e-10, "stretch {stretch}: {m0}");
            let r2: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
            let m2 = g.integrate(&r2).unwrap() / FOUR_PI;
            assert!((m2 / (243.0 / 5.0) - 1.0).abs() < 1e-8, "stretch {stretch}: {m2}");
            assert!((g.integrate(&one).unwrap() - FOUR_PI * 9.0).abs() < 1e-8);
        }
    }

    #[test]
    fn uniform_grid_operator_is_three_point_stencil() {
        let g = make_grid(2.0, 64, 1.0).unwrap();
        let f = RadialField::from_real_fn(&g, |r| (-r * r).exp());
        let hf = apply_h(&f, &vec![0.0; g.n()]).unwrap();
        let h = g.nodes()[0];
        let r = g.nodes();
        for i in 1..g.n() - 3 {
            let w = |j: usize| r[j] * f.values()[j].re;
            let expect = -(w(i + 1) - 2.0 * w(i) + w(i - 1)) / (h * h) / r[i];
            assert!((hf.values()[i].re - expect).abs() < 1e-9 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn text_round_trip() {
        let g = make_grid(5.0, 32, 4.0).unwrap();
        let f = RadialField::from_fn(&g, |r| Complex64::new(r.cos(), r.sin() * 0.5));
        let back = RadialField::from_text(&f.to_text()).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-15);
        }
    }
}
