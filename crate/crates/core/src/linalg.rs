//! Dense small-matrix linear algebra and the Riccati solvers behind the LQR
//! and H-infinity gains.
//!
//! Matrices are row-major `f64` buffers. Every system handled by this crate is
//! tiny (n <= 10), so nothing here tries to be clever about cache blocking or
//! sparsity.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{dim_mismatch, Error, Result};

/// Dense row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_mismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

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

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: n_rows,
            cols: n_cols,
            data,
        }
    }

    pub fn scalar(v: f64) -> Self {
        Self {
            rows: 1,
            cols: 1,
            data: vec![v],
        }
    }

    /// Column vector (n x 1).
    pub fn column(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
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

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul of {}x{} by {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    /// (M + Mᵀ) / 2.
    pub fn symmetrize(&self) -> Self {
        assert!(self.is_square());
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        s
    }

    /// Largest absolute asymmetry `|m_ij - m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.lu()?.inverse()
    }

    /// Solves `self · X = rhs`.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        self.lu()?.solve(rhs)
    }

    /// Cholesky factor `L` with `self = L Lᵀ`, or `None` when the matrix is not
    /// (numerically) positive definite.
    pub fn cholesky(&self) -> Option<Matrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        assert!(self.is_square());
        let eig = self.to_nalgebra().symmetrize_for_eigen().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals
    }

    /// Symmetric square root of a positive semidefinite matrix; tiny negative
    /// eigenvalues from rounding are clipped to zero.
    pub fn psd_sqrt(&self) -> Matrix {
        assert!(self.is_square());
        let eig = self.to_nalgebra().symmetrize_for_eigen().symmetric_eigen();
        let n = self.rows;
        let mut out = Matrix::zeros(n, n);
        for (k, lambda) in eig.eigenvalues.iter().enumerate() {
            let s = lambda.max(0.0).sqrt();
            let v = eig.eigenvectors.column(k);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += s * v[i] * v[j];
                }
            }
        }
        out
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> f64 {
        assert!(self.is_square());
        if self.rows == 0 {
            return 0.0;
        }
        self.to_nalgebra()
            .complex_eigenvalues()
            .iter()
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

trait SymmetrizeForEigen {
    fn symmetrize_for_eigen(self) -> Self;
}

impl SymmetrizeForEigen for DMatrix<f64> {
    fn symmetrize_for_eigen(self) -> Self {
        let t = self.transpose();
        (self + t) * 0.5
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix add shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sub shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;

    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

/// LU factorisation with partial pivoting, `P·A = L·U` packed in one buffer.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Pivots smaller than `1e-12 · max|a_ij|` are treated as singular.
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(dim_mismatch(format!(
                "LU of non-square {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let threshold = 1e-12 * a.max_abs();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > threshold) {
                return Err(Error::SingularMatrix);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        if rhs.rows != self.n {
            return Err(dim_mismatch(format!(
                "solve: {}x{} system with {} rhs rows",
                self.n, self.n, rhs.rows
            )));
        }
        let mut out = Matrix::zeros(self.n, rhs.cols);
        let mut col = vec![0.0; self.n];
        for j in 0..rhs.cols {
            for i in 0..self.n {
                col[i] = rhs[(i, j)];
            }
            let x = self.solve_vec(&col);
            for i in 0..self.n {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.n))
    }
}

fn check_lq_dims(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<()> {
    let n = a.rows;
    let m = b.cols;
    if !a.is_square() || b.rows != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(dim_mismatch(format!(
            "A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    Ok(())
}

/// One application of the DARE map
/// `P ↦ Q + AᵀPA − AᵀPB (R + BᵀPB)⁻¹ BᵀPA`.
pub fn dare_map(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix> {
    let at = a.transpose();
    let pa = p * a;
    let pb = p * b;
    let s = r + &(&b.transpose() * &pb);
    let gain = s.solve(&(&b.transpose() * &pa))?;
    let out = &(q + &(&at * &pa)) - &(&(&at * &pb) * &gain);
    Ok(out.symmetrize())
}

/// Max-norm residual `‖P − dare_map(P)‖_max`.
pub fn dare_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<f64> {
    check_lq_dims(a, b, q, r)?;
    Ok((p - &dare_map(a, b, q, r, p)?).max_abs())
}

/// Solves the discrete algebraic Riccati equation.
///
/// A structure-preserving doubling sweep produces a candidate, then plain
/// value iteration polishes it until the max-norm residual is at most `tol`.
/// `max_iter` bounds the total number of doubling and polishing steps.
pub fn solve_dare(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    tol: f64,
    max_iter: usize,
) -> Result<Matrix> {
    check_lq_dims(a, b, q, r)?;
    let n = a.rows;
    let r_inv = r.inverse()?;
    let mut used = 0;

    // Doubling: A_k, G_k, H_k with H_k -> P.
    let mut ak = a.clone();
    let mut gk = &(b * &r_inv) * &b.transpose();
    let mut hk = q.symmetrize();
    let eye = Matrix::identity(n);
    while used < max_iter.min(64) {
        used += 1;
        let w = &eye + &(&gk * &hk);
        let lu = match w.lu() {
            Ok(lu) => lu,
            Err(_) => break,
        };
        let w_inv_a = lu.solve(&ak)?;
        let w_inv_g = lu.solve(&gk)?;
        let h_next = (&hk + &(&(&ak.transpose() * &hk) * &w_inv_a)).symmetrize();
        let g_next = (&gk + &(&(&ak * &w_inv_g) * &ak.transpose())).symmetrize();
        let a_next = &ak * &w_inv_a;
        let delta = (&h_next - &hk).max_abs();
        hk = h_next;
        gk = g_next;
        ak = a_next;
        if !hk.is_finite() {
            break;
        }
        if delta <= 1e-14 * hk.max_abs().max(1.0) {
            break;
        }
    }

    let mut p = if hk.is_finite() { hk } else { q.symmetrize() };
    let mut residual = f64::INFINITY;
    while used <= max_iter {
        let next = dare_map(a, b, q, r, &p)?;
        residual = (&p - &next).max_abs();
        if residual <= tol {
            return Ok(p.symmetrize());
        }
        if !next.is_finite() {
            break;
        }
        p = next;
        used += 1;
    }
    Err(Error::NonConvergence {
        iterations: used,
        residual,
    })
}

/// Infinite-horizon discrete LQR gain `K = (R + BᵀPB)⁻¹BᵀPA`, so that
/// `u = −Kx`. A zero input matrix yields `K = 0` without solving.
pub fn lqr_gain(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    check_lq_dims(a, b, q, r)?;
    if b.is_zero() {
        return Ok(Matrix::zeros(b.cols, a.rows));
    }
    let p = solve_dare(a, b, q, r, 1e-10, 10_000)?;
    lqr_gain_from_p(a, b, r, &p)
}

pub fn lqr_gain_from_p(a: &Matrix, b: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix> {
    let bt = b.transpose();
    let s = r + &(&(&bt * p) * b);
    s.solve(&(&(&bt * p) * a))
}

/// Stationary solution of the soft-constrained dynamic game
/// `x' = Ax + Bu + w` with stage cost `xᵀQx + uᵀRu − γ²wᵀw`.
#[derive(Debug, Clone)]
pub struct HinfSolution {
    pub p: Matrix,
    pub k: Matrix,
    pub iterations: usize,
}

/// Game Riccati iteration `P ← Q + AᵀP(I + (BR⁻¹Bᵀ − γ⁻²I)P)⁻¹A`, started
/// at `P = Q`. Every iterate must keep `γ²I − P` positive definite.
pub fn hinf_riccati(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<HinfSolution> {
    check_lq_dims(a, b, q, r)?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    let n = a.rows;
    let eye = Matrix::identity(n);
    let r_inv = r.inverse()?;
    let s = &(&(b * &r_inv) * &b.transpose()) - &eye.scale(gamma.powi(-2));
    let gamma_sq = eye.scale(gamma * gamma);
    let feasible = |p: &Matrix| p.is_finite() && (&gamma_sq - p).is_positive_definite();

    let mut p = q.symmetrize();
    if !feasible(&p) {
        return Err(Error::GammaInfeasible { gamma });
    }
    let mut delta = f64::INFINITY;
    for it in 1..=max_iter {
        let lambda = &eye + &(&s * &p);
        let lambda_inv_a = lambda
            .solve(a)
            .map_err(|_| Error::GammaInfeasible { gamma })?;
        let next = (q + &(&(&a.transpose() * &p) * &lambda_inv_a)).symmetrize();
        if !feasible(&next) {
            return Err(Error::GammaInfeasible { gamma });
        }
        delta = (&next - &p).max_abs();
        p = next;
        if delta <= tol {
            let k = hinf_gain_from_p(a, b, &r_inv, &s, &p)
                .map_err(|_| Error::GammaInfeasible { gamma })?;
            return Ok(HinfSolution {
                p,
                k,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: delta,
    })
}

/// Minimising player's gain `K = R⁻¹BᵀPΛ⁻¹A`, `Λ = I + (BR⁻¹Bᵀ − γ⁻²I)P`.
fn hinf_gain_from_p(a: &Matrix, b: &Matrix, r_inv: &Matrix, s: &Matrix, p: &Matrix) -> Result<Matrix> {
    let lambda = &Matrix::identity(a.rows) + &(s * p);
    let lambda_inv_a = lambda.solve(a)?;
    Ok(&(&(r_inv * &b.transpose()) * p) * &lambda_inv_a)
}

/// H-infinity state-feedback gain with `u = −Kx`.
pub fn hinf_gain(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Matrix> {
    hinf_riccati(a, b, q, r, gamma, tol, max_iter).map(|s| s.k)
}

/// Smallest feasible γ to within `rel_tol`, found by bisection over the same
/// solver that `hinf_gain` uses.
pub fn hinf_gamma_threshold(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    rel_tol: f64,
) -> Result<f64> {
    let feasible = |g: f64| hinf_riccati(a, b, q, r, g, 1e-10, 20_000).is_ok();
    let mut hi = 1.0;
    let mut tries = 0;
    while !feasible(hi) {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::GammaInfeasible { gamma: hi });
        }
    }
    let mut lo = hi / 2.0;
    while feasible(lo) && lo > 1e-12 {
        hi = lo;
        lo /= 2.0;
    }
    while (hi - lo) > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }

    #[test]
    fn scalar_dare_is_golden_ratio() {
        let one = Matrix::scalar(1.0);
        let p = solve_dare(&one, &one, &one, &one, 1e-12, 10_000).unwrap();
        assert!((p[(0, 0)] - golden()).abs() < 1e-10);
        // root of P² = P + 1
        let v = p[(0, 0)];
        assert!((v * v - v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_dynamics_gives_p_equal_q() {
        let a = Matrix::scalar(0.0);
        let q = Matrix::scalar(2.5);
        let p = solve_dare(&a, &Matrix::scalar(0.7), &q, &Matrix::scalar(3.0), 1e-12, 100).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn scalar_lqr_gain_is_inverse_golden() {
        let one = Matrix::scalar(1.0);
        let k = lqr_gain(&one, &one, &one, &one).unwrap();
        assert!((k[(0, 0)] - 1.0 / golden()).abs() < 1e-10);
        assert!((k[(0, 0)] - 0.6180339887).abs() < 1e-10);
    }

    #[test]
    fn zero_input_matrix_gives_zero_gain() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        let b = Matrix::zeros(2, 1);
        let k = lqr_gain(&a, &b, &Matrix::identity(2), &Matrix::identity(1)).unwrap();
        assert_eq!(k, Matrix::zeros(1, 2));
    }

    #[test]
    fn double_integrator_closed_loop_is_stable() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        let b = Matrix::from_rows(&[[0.0], [1.0]]);
        let k = lqr_gain(&a, &b, &Matrix::identity(2), &Matrix::identity(1)).unwrap();
        let closed = &a - &(&b * &k);
        assert!(closed.spectral_radius() < 1.0);
    }

    #[test]
    fn singular_lu_is_reported() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert_eq!(m.inverse().unwrap_err(), Error::SingularMatrix);
    }

    #[test]
    fn singular_control_weight_is_reported() {
        let one = Matrix::scalar(1.0);
        let err = solve_dare(&one, &one, &one, &Matrix::scalar(0.0), 1e-10, 100).unwrap_err();
        assert_eq!(err, Error::SingularMatrix);
    }

    #[test]
    fn unstabilizable_system_does_not_converge() {
        let a = Matrix::scalar(2.0);
        let b = Matrix::scalar(0.0);
        let one = Matrix::scalar(1.0);
        let err = solve_dare(&a, &b, &one, &one, 1e-10, 200).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Matrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 3.0, -1.0], [0.0, 2.0, 5.0]]);
        let inv = m.inverse().unwrap();
        let err = (&(&m * &inv) - &Matrix::identity(3)).max_abs();
        assert!(err < 1e-14);
    }

    #[test]
    fn hinf_large_gamma_matches_lqr() {
        let one = Matrix::scalar(1.0);
        let k_lqr = lqr_gain(&one, &one, &one, &one).unwrap();
        let k_inf = hinf_gain(&one, &one, &one, &one, 1e6, 1e-12, 10_000).unwrap();
        assert!((k_lqr[(0, 0)] - k_inf[(0, 0)]).abs() < 1e-6);
    }

    #[test]
    fn hinf_zero_dynamics() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::from_rows(&[[1.0], [0.5]]);
        let q = Matrix::from_diag(&[1.0, 4.0]);
        let r = Matrix::identity(1);
        let k = hinf_gain(&a, &b, &q, &r, 2.1, 1e-12, 100).unwrap();
        assert_eq!(k, Matrix::zeros(1, 2));
        let p = hinf_riccati(&a, &b, &q, &r, 2.1, 1e-12, 100).unwrap().p;
        assert_eq!(p, q);
        // γ² = 3.61 < 4 = λ_max(Q)
        assert!(matches!(
            hinf_gain(&a, &b, &q, &r, 1.9, 1e-12, 100),
            Err(Error::GammaInfeasible { .. })
        ));
    }

    #[test]
    fn hinf_below_threshold_is_infeasible() {
        let one = Matrix::scalar(1.0);
        let g = hinf_gamma_threshold(&one, &one, &one, &one, 1e-6).unwrap();
        assert!(g > 1.0);
        assert!(hinf_gain(&one, &one, &one, &one, g * 1.01, 1e-10, 20_000).is_ok());
        assert!(matches!(
            hinf_gain(&one, &one, &one, &one, g * 0.95, 1e-10, 20_000),
            Err(Error::GammaInfeasible { .. })
        ));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let q = Matrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]);
        let s = q.psd_sqrt();
        assert!((&(&s * &s) - &q).max_abs() < 1e-12);
    }
}
