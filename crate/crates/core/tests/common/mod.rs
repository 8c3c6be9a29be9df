#![allow(dead_code)]

use diffctl::linalg::Matrix;
use diffctl::random::keyed_normal;

/// Random `(A, B, Q, R)` with `n, m ∈ 1..=4`. Gaussian `(A, B)` pairs are
/// controllable with probability one; `Q, R` are shifted Gram matrices.
pub fn random_system(seed: u64, index: u64) -> (Matrix, Matrix, Matrix, Matrix) {
    let draw = |stream: u64, k: u64| keyed_normal(seed, index * 16 + stream, k);
    let n = 1 + (draw(0, 0).abs() * 10.0) as usize % 4;
    let m = 1 + (draw(0, 1).abs() * 10.0) as usize % 4;
    let mat = |stream: u64, rows: usize, cols: usize, scale: f64| {
        let data = (0..rows * cols).map(|k| scale * draw(stream, k as u64)).collect();
        Matrix::new(rows, cols, data).unwrap()
    };
    let a = mat(1, n, n, 1.0 / (n as f64).sqrt());
    let b = mat(2, n, m, 1.0);
    let gq = mat(3, n, n, 1.0);
    let gr = mat(4, m, m, 1.0);
    let q = &gq.transpose().matmul(&gq) + &Matrix::identity(n).scale(0.1);
    let r = &gr.transpose().matmul(&gr) + &Matrix::identity(m).scale(0.1);
    (a, b, q, r)
}

/// Finite-horizon LQR gains `K_t` (for `u = −K_t x`) by the backward
/// Riccati recursion from `P_T = 0`.
pub fn riccati_gains(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, horizon: usize) -> Vec<Matrix> {
    let n = a.rows();
    let mut p = Matrix::zeros(n, n);
    let mut gains = vec![Matrix::zeros(b.cols(), n); horizon];
    for t in (0..horizon).rev() {
        let bt = b.transpose();
        let s = r + &bt.matmul(&p).matmul(b);
        let k = s.inverse().unwrap().matmul(&bt.matmul(&p).matmul(a));
        let ak = a - &b.matmul(&k);
        p = &(q + &k.transpose().matmul(r).matmul(&k)) + &ak.transpose().matmul(&p).matmul(&ak);
        p = p.symmetrize();
        gains[t] = k;
    }
    gains
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
