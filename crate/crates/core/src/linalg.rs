//! Dense row-major matrices and a real symmetric eigensolver.
//!
//! The solver reduces to tridiagonal form with Householder reflections, finds
//! all eigenvalues with implicit QL (Wilkinson shifts), and obtains
//! eigenvectors either by accumulating the QL rotations (full decomposition)
//! or by inverse iteration on the tridiagonal matrix for a chosen subset
//! followed by back-transformation. The subset path costs one reduction plus
//! O(N^2) per requested vector.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * self^T`.
    pub fn gram(&self) -> Matrix {
        let n = self.rows;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = math::dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| math::dot(self.row(i), x)).collect()
    }

    /// Bitwise symmetry check.
    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)].to_bits() == self[(j, i)].to_bits()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| f64::max(m, math::abs(x)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::norm2(&self.data)
    }

    /// Number of nonzero off-diagonal entries in row `i`.
    pub fn offdiag_nonzeros(&self, i: usize) -> usize {
        self.row(i)
            .iter()
            .enumerate()
            .filter(|&(j, &v)| j != i && v != 0.0)
            .count()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenpairs of a real symmetric matrix. Column `j` of `vectors` belongs to
/// `values[j]`; values are ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }

    /// `max |(A V - V diag(e))_{ij}|`.
    pub fn residual(&self, a: &Matrix) -> f64 {
        let n = a.rows();
        let mut worst = 0.0f64;
        for j in 0..self.values.len() {
            let v = self.vector(j);
            let av = a.mul_vec(&v);
            for i in 0..n {
                worst = worst.max(math::abs(av[i] - self.values[j] * v[i]));
            }
        }
        worst
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let k = self.values.len();
        let cols: Vec<Vec<f64>> = (0..k).map(|j| self.vector(j)).collect();
        let mut worst = 0.0f64;
        for a in 0..k {
            for b in 0..=a {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max(math::abs(math::dot(&cols[a], &cols[b]) - target));
            }
        }
        worst
    }
}

const MAX_QL_SWEEPS: usize = 60;

/// Householder reduction `A = Q T Q^T` of a symmetric matrix.
///
/// Rows are eliminated from the bottom up and only the lower triangle is
/// read or written, so every access is a contiguous row slice. The rank-2
/// update of one step is fused with the matrix-vector product of the next.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[k]` couples rows `k` and `k + 1`.
    pub off: Vec<f64>,
    /// Row `i >= 2` holds reflector `i` in `[0..i)` with a unit last entry.
    reflectors: Matrix,
    taus: Vec<f64>,
}

/// Turns `x[..m]` into a reflector with `x[m - 1] = 1` that maps `x` onto
/// `beta e_{m-1}`; returns `(tau, beta)`.
fn householder_tail(x: &mut [f64]) -> (f64, f64) {
    let m = x.len();
    let alpha = x[m - 1];
    let xnorm = math::norm2(&x[..m - 1]);
    if xnorm == 0.0 {
        x[m - 1] = 1.0;
        return (0.0, alpha);
    }
    let beta = -math::copysign(math::hypot(alpha, xnorm), alpha);
    let scale = 1.0 / (alpha - beta);
    for xi in x[..m - 1].iter_mut() {
        *xi *= scale;
    }
    x[m - 1] = 1.0;
    ((beta - alpha) / beta, beta)
}

impl Tridiagonal {
    /// Reduces a symmetric matrix, reading its lower triangle only.
    pub fn new(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let mut w = a.clone();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut taus = vec![0.0; n];
        if n == 0 {
            return Ok(Self {
                diag,
                off,
                reflectors: w,
                taus,
            });
        }
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut vn = vec![0.0; n];
        let mut q = vec![0.0; n];

        let mut i = n - 1;
        if i >= 2 {
            diag[i] = w[(i, i)];
            let (tau, beta) = householder_tail(&mut w.row_mut(i)[..i]);
            taus[i] = tau;
            off[i - 1] = beta;
            v[..i].copy_from_slice(&w.row(i)[..i]);
            p[..i].fill(0.0);
            for j in 0..i {
                symv_row(&w.row(j)[..=j], &v, &mut p);
            }
        }
        while i >= 2 {
            let m = i;
            let tau = taus[m];
            if tau != 0.0 {
                for x in p[..m].iter_mut() {
                    *x *= tau;
                }
                let kappa = 0.5 * tau * math::dot(&p[..m], &v[..m]);
                for (x, vi) in p[..m].iter_mut().zip(&v[..m]) {
                    *x -= kappa * vi;
                }
                let (vl, pl) = (v[m - 1], p[m - 1]);
                let row = &mut w.row_mut(m - 1)[..m];
                for ((a, &pj), &vj) in row.iter_mut().zip(&p[..m]).zip(&v[..m]) {
                    *a -= vl * pj + pl * vj;
                }
            }
            let next = m - 1;
            let have_next = next >= 2;
            if have_next {
                diag[next] = w[(next, next)];
                let (t, beta) = householder_tail(&mut w.row_mut(next)[..next]);
                taus[next] = t;
                off[next - 1] = beta;
                vn[..next].copy_from_slice(&w.row(next)[..next]);
                q[..next].fill(0.0);
            }
            for j in 0..next {
                let row = &mut w.row_mut(j)[..=j];
                if tau != 0.0 {
                    let (vj, pj) = (v[j], p[j]);
                    for ((a, &pl), &vl) in row.iter_mut().zip(&p[..=j]).zip(&v[..=j]) {
                        *a -= vj * pl + pj * vl;
                    }
                }
                if have_next {
                    symv_row(row, &vn, &mut q);
                }
            }
            core::mem::swap(&mut v, &mut vn);
            core::mem::swap(&mut p, &mut q);
            i = next;
        }
        diag[0] = w[(0, 0)];
        if n >= 2 {
            diag[1] = w[(1, 1)];
            off[0] = w[(1, 0)];
        }
        Ok(Self {
            diag,
            off,
            reflectors: w,
            taus,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn norm_estimate(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = math::abs(self.diag[i]);
                if i > 0 {
                    s += math::abs(self.off[i - 1]);
                }
                if i + 1 < n {
                    s += math::abs(self.off[i]);
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        implicit_ql(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }

    /// Maps a tridiagonal-basis vector back to the original basis in place.
    pub fn back_transform(&self, y: &mut [f64]) {
        for i in 2..self.dim() {
            let tau = self.taus[i];
            if tau == 0.0 {
                continue;
            }
            let v = &self.reflectors.row(i)[..i];
            let head = &mut y[..i];
            let s = tau * math::dot(v, head);
            for (t, vi) in head.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }

    /// Eigenvectors of the original matrix for the given (ascending,
    /// converged) eigenvalues, by inverse iteration on `T`. Vectors whose
    /// eigenvalues lie within `1e-3 ||T||` of each other are orthogonalized
    /// against one another.
    pub fn eigenvectors_for(&self, values: &[f64]) -> Result<Matrix> {
        let n = self.dim();
        let k = values.len();
        let tnorm = self.norm_estimate().max(f64::MIN_POSITIVE);
        let cluster_tol = 1e-3 * tnorm;
        let mut out = Matrix::zeros(n, k);
        let mut cluster: Vec<Vec<f64>> = Vec::new();
        let mut last: Option<f64> = None;
        let mut solver = TridiagSolve::with_capacity(n);

        for (j, &lambda) in values.iter().enumerate() {
            if last.is_none_or(|l| math::abs(lambda - l) > cluster_tol) {
                cluster.clear();
            }
            last = Some(lambda);
            solver.factor(&self.diag, &self.off, lambda, tnorm);

            let mut x: Vec<f64> = start_vector(n, j);
            let mut converged = false;
            for _ in 0..8 {
                let mut y = solver.solve(&x);
                for c in &cluster {
                    let s = math::dot(c, &y);
                    for (yi, ci) in y.iter_mut().zip(c) {
                        *yi -= s * ci;
                    }
                }
                let nrm = math::norm2(&y);
                if !(nrm.is_finite()) || nrm == 0.0 {
                    break;
                }
                for (xi, yi) in x.iter_mut().zip(&y) {
                    *xi = yi / nrm;
                }
                if tridiag_residual(&self.diag, &self.off, lambda, &x)
                    <= 64.0 * f64::EPSILON * tnorm * math::sqrt(n as f64)
                {
                    converged = true;
                    break;
                }
            }
            if !converged {
                // The residual criterion can be too strict for tightly
                // clustered values; accept anything at the 1e-10 level.
                if tridiag_residual(&self.diag, &self.off, lambda, &x) > 1e-10 * tnorm {
                    return Err(Error::NoConvergence { realization: None });
                }
            }
            cluster.push(x.clone());
            self.back_transform(&mut x);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }

    /// Full eigendecomposition by QL with accumulated rotations.
    pub fn decompose(&self) -> Result<SymmetricEigen> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        // Rows of `zt` are the eigenvectors of T.
        let mut zt = Matrix::identity(n);
        implicit_ql(&mut d, &mut e, Some(&mut zt))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        let mut vectors = Matrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (j, &src) in order.iter().enumerate() {
            values.push(d[src]);
            let mut y = zt.row(src).to_vec();
            self.back_transform(&mut y);
            for i in 0..n {
                vectors[(i, j)] = y[i];
            }
        }
        Ok(SymmetricEigen { values, vectors })
    }
}

/// Accumulates the contribution of lower-triangle row `j = row.len() - 1`
/// to `out = A x`.
#[inline]
fn symv_row(row: &[f64], x: &[f64], out: &mut [f64]) {
    let j = row.len() - 1;
    let xj = x[j];
    let mut s = 0.0;
    for ((&a, &xl), o) in row[..j].iter().zip(&x[..j]).zip(out[..j].iter_mut()) {
        s += a * xl;
        *o += a * xj;
    }
    out[j] += s + row[j] * xj;
}

fn start_vector(n: usize, salt: usize) -> Vec<f64> {
    // Fixed pseudo-random start; avoids accidental orthogonality to the target.
    let mut state = 0x2545_F491_4F6C_DD1Du64 ^ (salt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        })
        .collect();
    let nrm = math::norm2(&x);
    for v in x.iter_mut() {
        *v /= nrm;
    }
    x
}

fn tridiag_residual(d: &[f64], e: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let n = d.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut r = (d[i] - lambda) * x[i];
        if i > 0 {
            r += e[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            r += e[i] * x[i + 1];
        }
        worst = worst.max(math::abs(r));
    }
    worst
}

/// LU with partial pivoting of `T - lambda I` (two superdiagonals after pivoting).
struct TridiagSolve {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagSolve {
    fn with_capacity(n: usize) -> Self {
        Self {
            u0: vec![0.0; n],
            u1: vec![0.0; n],
            u2: vec![0.0; n],
            l: vec![0.0; n],
            swap: vec![false; n],
        }
    }

    fn factor(&mut self, d: &[f64], e: &[f64], lambda: f64, tnorm: f64) {
        let n = d.len();
        let tiny = f64::EPSILON * tnorm;
        // Current row i holds (a, b, c) at columns (i, i+1, i+2).
        let mut a = d.first().map_or(0.0, |&x| x - lambda);
        let mut b = if n > 1 { e[0] } else { 0.0 };
        let mut c = 0.0;
        for i in 0..n {
            if i + 1 == n {
                self.u0[i] = if math::abs(a) < tiny { tiny } else { a };
                self.u1[i] = 0.0;
                self.u2[i] = 0.0;
                self.swap[i] = false;
                break;
            }
            // Next row: (sub, diag, super) at columns (i, i+1, i+2).
            let sub = e[i];
            let nd = d[i + 1] - lambda;
            let ns = if i + 2 < n { e[i + 1] } else { 0.0 };
            if math::abs(sub) > math::abs(a) {
                // Swap rows i and i+1.
                self.swap[i] = true;
                let m = a / sub;
                self.u0[i] = sub;
                self.u1[i] = nd;
                self.u2[i] = ns;
                self.l[i] = m;
                a = b - m * nd;
                b = c - m * ns;
                c = 0.0;
            } else {
                self.swap[i] = false;
                let piv = if math::abs(a) < tiny { tiny } else { a };
                let m = sub / piv;
                self.u0[i] = piv;
                self.u1[i] = b;
                self.u2[i] = c;
                self.l[i] = m;
                a = nd - m * b;
                b = ns - m * c;
                c = 0.0;
            }
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.l[i] * y[i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= self.u1[i] * y[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * y[i + 2];
            }
            y[i] = s / self.u0[i];
        }
        y
    }
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// `e[i]` couples `i` and `i + 1`; `e[n - 1]` is workspace. When `zt` is
/// given its rows are rotated alongside, so they end up as eigenvectors.
fn implicit_ql(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut Matrix>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = math::abs(d[m]) + math::abs(d[m + 1]);
                if math::abs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence { realization: None });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = math::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + math::copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = math::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    rotate_rows(z, i, s, c);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[inline]
fn rotate_rows(z: &mut Matrix, i: usize, s: f64, c: f64) {
    let cols = z.cols();
    let (head, tail) = z.as_mut_slice().split_at_mut((i + 1) * cols);
    let ri = &mut head[i * cols..];
    let rj = &mut tail[..cols];
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let f = *b;
        *b = s * *a + c * f;
        *a = c * *a - s * f;
    }
}

/// All eigenpairs of a symmetric matrix, ascending.
pub fn eigh(a: &Matrix) -> Result<SymmetricEigen> {
    Tridiagonal::new(a)?.decompose()
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn eigvalsh(a: &Matrix) -> Result<Vec<f64>> {
    Tridiagonal::new(a)?.eigenvalues()
}
