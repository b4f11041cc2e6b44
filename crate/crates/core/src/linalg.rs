//! Banded linear algebra: pivoted tridiagonal solves (real or complex),
//! 2x2 block-tridiagonal solves, and Sturm-sequence eigenvalue bisection
//! for symmetric tridiagonal matrices.

use num_complex::ComplexFloat;

use crate::error::{LabError, Result};

/// Tridiagonal matrix stored by diagonals. `lower[i]` is entry (i+1, i),
/// `upper[i]` is entry (i, i+1).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: ComplexFloat<Real = f64>> Tridiagonal<T> {
    pub fn new(lower: Vec<T>, diag: Vec<T>, upper: Vec<T>) -> Self {
        debug_assert_eq!(lower.len() + 1, diag.len());
        debug_assert_eq!(upper.len() + 1, diag.len());
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc = acc + self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc = acc + self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Gaussian elimination with partial pivoting (the `gtsv` scheme).
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        solve_tridiagonal(&self.lower, &self.diag, &self.upper, rhs)
    }
}

/// Solve a tridiagonal system with partial pivoting. Row interchanges create
/// a second superdiagonal, kept in `u2`.
pub fn solve_tridiagonal<T: ComplexFloat<Real = f64>>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &[T],
) -> Result<Vec<T>> {
    let n = diag.len();
    if rhs.len() != n {
        return Err(LabError::Shape { expected: n, got: rhs.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let zero = T::zero();
    let mut ud = vec![zero; n];
    let mut u1 = vec![zero; n];
    let mut u2 = vec![zero; n];
    let mut b = rhs.to_vec();

    // Working row at position k: entries (k, k+1).
    let mut cd = diag[0];
    let mut cu = if n > 1 { upper[0] } else { zero };
    for k in 0..n - 1 {
        let l = lower[k];
        let d_next = diag[k + 1];
        let u_next = if k + 2 < n { upper[k + 1] } else { zero };
        if l.abs() > cd.abs() {
            let f = cd / l;
            ud[k] = l;
            u1[k] = d_next;
            u2[k] = u_next;
            let bk = b[k];
            b[k] = b[k + 1];
            b[k + 1] = bk - f * b[k];
            let new_d = cu - f * d_next;
            let new_u = zero - f * u_next;
            cd = new_d;
            cu = new_u;
        } else {
            if cd.abs() == 0.0 {
                return Err(LabError::NewtonDivergence("singular tridiagonal system".into()));
            }
            let f = l / cd;
            ud[k] = cd;
            u1[k] = cu;
            u2[k] = zero;
            b[k + 1] = b[k + 1] - f * b[k];
            cd = d_next - f * cu;
            cu = u_next;
        }
    }
    ud[n - 1] = cd;
    if cd.abs() == 0.0 || !cd.abs().is_finite() {
        return Err(LabError::NewtonDivergence("singular tridiagonal system".into()));
    }
    let mut x = vec![zero; n];
    for k in (0..n).rev() {
        let mut acc = b[k];
        if k + 1 < n {
            acc = acc - u1[k] * x[k + 1];
        }
        if k + 2 < n {
            acc = acc - u2[k] * x[k + 2];
        }
        x[k] = acc / ud[k];
    }
    if x.iter().any(|v| !v.abs().is_finite()) {
        return Err(LabError::NewtonDivergence("non-finite tridiagonal solution".into()));
    }
    Ok(x)
}

/// 2x2 real block.
pub type Block = [[f64; 2]; 2];

fn block_mul(a: &Block, b: &Block) -> Block {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn block_vec(a: &Block, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn block_inv(a: &Block) -> Option<Block> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

/// Block Thomas algorithm for a block-tridiagonal system with 2x2 blocks.
/// Used for real-linear (not complex-linear) Jacobians written in
/// (Re, Im) pairs.
pub fn solve_block_tridiagonal(
    lower: &[Block],
    diag: &[Block],
    upper: &[Block],
    rhs: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    let n = diag.len();
    if rhs.len() != n {
        return Err(LabError::Shape { expected: n, got: rhs.len() });
    }
    let singular = || LabError::NewtonDivergence("singular block system".into());
    let mut c_prime: Vec<Block> = Vec::with_capacity(n);
    let mut d_prime: Vec<[f64; 2]> = Vec::with_capacity(n);
    let inv0 = block_inv(&diag[0]).ok_or_else(singular)?;
    c_prime.push(if n > 1 { block_mul(&inv0, &upper[0]) } else { [[0.0; 2]; 2] });
    d_prime.push(block_vec(&inv0, rhs[0]));
    for i in 1..n {
        let lc = block_mul(&lower[i - 1], &c_prime[i - 1]);
        let m = [
            [diag[i][0][0] - lc[0][0], diag[i][0][1] - lc[0][1]],
            [diag[i][1][0] - lc[1][0], diag[i][1][1] - lc[1][1]],
        ];
        let inv = block_inv(&m).ok_or_else(singular)?;
        c_prime.push(if i + 1 < n { block_mul(&inv, &upper[i]) } else { [[0.0; 2]; 2] });
        let ld = block_vec(&lower[i - 1], d_prime[i - 1]);
        d_prime.push(block_vec(&inv, [rhs[i][0] - ld[0], rhs[i][1] - ld[1]]));
    }
    let mut x = vec![[0.0; 2]; n];
    x[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        let cx = block_vec(&c_prime[i], x[i + 1]);
        x[i] = [d_prime[i][0] - cx[0], d_prime[i][1] - cx[1]];
    }
    Ok(x)
}

/// Number of eigenvalues of the symmetric tridiagonal matrix (diag, off)
/// strictly below `x`, by counting negative pivots of the LDL^T factorization
/// of T - xI.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    let tiny = f64::MIN_POSITIVE.sqrt();
    for i in 0..diag.len() {
        if i > 0 {
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        }
        // An exactly vanishing pivot is perturbed to a tiny negative one.
        if q.abs() < tiny {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval containing the spectrum.
pub fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i + 1 < n {
            r += off[i].abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// The k-th smallest eigenvalue (k = 0 is the lowest) by bisection on the
/// Sturm count, to absolute tolerance `tol`.
pub fn bisect_eigenvalue(diag: &[f64], off: &[f64], k: usize, tol: f64) -> f64 {
    let (mut lo, mut hi) = gershgorin(diag, off);
    for _ in 0..300 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector for an eigenvalue estimate by inverse iteration. Returned
/// with unit Euclidean norm.
pub fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let scale = diag.iter().fold(1.0f64, |m, d| m.max(d.abs()));
    let shift = lambda - 1e-10 * scale;
    let d: Vec<f64> = diag.iter().map(|a| a - shift).collect();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i as f64) * 0.7).sin()).collect();
    for _ in 0..4 {
        let mut y = solve_tridiagonal(off, &d, off, &v)?;
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(LabError::NewtonDivergence("inverse iteration breakdown".into()));
        }
        y.iter_mut().for_each(|a| *a /= norm);
        v = y;
    }
    Ok(v)
}
