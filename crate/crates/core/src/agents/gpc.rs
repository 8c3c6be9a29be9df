use std::collections::VecDeque;

use super::linear::Controller;
use crate::autodiff::{grad, DiffFunction, Scalar};
use crate::error::{dim_mismatch, Result};
use crate::linalg::{lqr_gain, Matrix};

/// Gradient perturbation controller
/// `u_t = −K·x_t + Σ_{i=1..H} M_i · w_{t−i}`.
///
/// The disturbance responses `M_i` are learned online by gradient descent on
/// a counterfactual cost over the last `H` inferred disturbances.
#[derive(Debug, Clone)]
pub struct GpcState {
    pub k: Matrix,
    pub a: Matrix,
    pub b: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    /// `M_1..M_H` flattened, each `m × n` row-major.
    m: Vec<f64>,
    /// Newest first: `history[i]` is `w_{t−1−i}`.
    history: VecDeque<Vec<f64>>,
    pub h: usize,
    pub eta0: f64,
    pub radius: f64,
    updates: usize,
}

impl GpcState {
    /// Controller with `M ≡ 0`, zero history and radius `10·‖K‖_F`.
    pub fn new(k: Matrix, a: Matrix, b: Matrix, q: Matrix, r: Matrix, h: usize, eta0: f64) -> Result<Self> {
        let (n, m) = (a.rows(), b.cols());
        if !a.is_square()
            || b.rows() != n
            || k.shape() != (m, n)
            || q.shape() != (n, n)
            || r.shape() != (m, m)
        {
            return Err(dim_mismatch(format!(
                "GPC with K {:?}, A {:?}, B {:?}, Q {:?}, R {:?}",
                k.shape(),
                a.shape(),
                b.shape(),
                q.shape(),
                r.shape()
            )));
        }
        let radius = 10.0 * k.frobenius_norm();
        Ok(Self {
            m: vec![0.0; h * m * n],
            history: (0..h).map(|_| vec![0.0; n]).collect(),
            k,
            a,
            b,
            q,
            r,
            h,
            eta0,
            radius,
            updates: 0,
        })
    }

    /// Defaults `H = 5`, `η₀ = 0.01` on top of the LQR gain for `(A, B, Q, R)`.
    pub fn with_lqr(a: Matrix, b: Matrix, q: Matrix, r: Matrix) -> Result<Self> {
        let k = lqr_gain(&a, &b, &q, &r)?;
        Self::new(k, a, b, q, r, 5, 0.01)
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn action_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn m_params(&self) -> &[f64] {
        &self.m
    }

    pub fn set_m_params(&mut self, m: Vec<f64>) -> Result<()> {
        if m.len() != self.m.len() {
            return Err(dim_mismatch("GPC parameter length"));
        }
        self.m = m;
        Ok(())
    }

    /// `M_i` for `i` in `1..=H`.
    pub fn m_matrix(&self, i: usize) -> Matrix {
        let block = self.action_dim() * self.state_dim();
        let start = (i - 1) * block;
        Matrix::new(self.action_dim(), self.state_dim(), self.m[start..start + block].to_vec())
            .expect("block has m·n entries")
    }

    pub fn history(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.history.iter()
    }

    pub fn m_norm(&self) -> f64 {
        self.m.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Pushes `w` as the newest disturbance, keeping exactly `H` entries.
    pub fn push_disturbance(&mut self, w: Vec<f64>) -> Result<()> {
        if w.len() != self.state_dim() {
            return Err(dim_mismatch("disturbance length"));
        }
        if self.h > 0 {
            self.history.pop_back();
            self.history.push_front(w);
        }
        Ok(())
    }

    /// `w_{t−1} = x_t − A·x_{t−1} − B·u_{t−1}`.
    pub fn infer_disturbance(&self, x_prev: &[f64], u_prev: &[f64], x_curr: &[f64]) -> Result<Vec<f64>> {
        let n = self.state_dim();
        if x_prev.len() != n || x_curr.len() != n || u_prev.len() != self.action_dim() {
            return Err(dim_mismatch("GPC transition dimensions"));
        }
        let ax = self.a.mul_vec(x_prev);
        let bu = self.b.mul_vec(u_prev);
        Ok((0..n).map(|i| x_curr[i] - ax[i] - bu[i]).collect())
    }

    /// Counterfactual cost of the current `M` over the stored window.
    pub fn proxy_cost(&self) -> f64 {
        self.proxy().eval::<f64>(&self.m)[0]
    }

    pub fn proxy_gradient(&self) -> Result<Vec<f64>> {
        grad(&self.proxy(), &self.m).map(|(_, g)| g)
    }

    fn proxy(&self) -> ProxyCost<'_> {
        ProxyCost {
            gpc: self,
            window: self.history.iter().rev().cloned().collect(),
        }
    }

    /// Infers the last disturbance, then takes one projected gradient step on
    /// `M` with step size `η₀/√t`.
    pub fn observe_and_update(&mut self, x_prev: &[f64], u_prev: &[f64], x_curr: &[f64]) -> Result<()> {
        let w = self.infer_disturbance(x_prev, u_prev, x_curr)?;
        self.push_disturbance(w)?;
        self.updates += 1;
        if self.m.is_empty() {
            return Ok(());
        }
        let g = self.proxy_gradient()?;
        let eta = self.eta0 / (self.updates as f64).sqrt();
        for (m, g) in self.m.iter_mut().zip(&g) {
            *m -= eta * g;
        }
        self.project();
        Ok(())
    }

    /// Euclidean projection of `(M_1..M_H)` onto the Frobenius ball.
    pub fn project(&mut self) {
        let norm = self.m_norm();
        if norm > self.radius {
            let s = self.radius / norm;
            for m in &mut self.m {
                *m *= s;
            }
        }
    }

    /// Updates applied so far.
    pub fn updates(&self) -> usize {
        self.updates
    }
}

/// `u = −K·x + Σ M_i · w_{t−i}`.
pub fn gpc_act(state: &GpcState, x: &[f64]) -> Result<Vec<f64>> {
    let (n, m) = (state.state_dim(), state.action_dim());
    if x.len() != n {
        return Err(dim_mismatch(format!("GPC expects a {n}-state, got {}", x.len())));
    }
    let kx = state.k.mul_vec(x);
    let mut u: Vec<f64> = kx.into_iter().map(|v| -v).collect();
    for (i, w) in state.history.iter().enumerate() {
        let base = i * m * n;
        for (r, u_r) in u.iter_mut().enumerate() {
            let row = &state.m[base + r * n..base + (r + 1) * n];
            for (coef, wj) in row.iter().zip(w) {
                *u_r += coef * wj;
            }
        }
    }
    Ok(u)
}

impl Controller for GpcState {
    fn act(&self, x: &[f64]) -> Result<Vec<f64>> {
        gpc_act(self, x)
    }

    fn update(&mut self, x_prev: &[f64], u_prev: &[f64], x_curr: &[f64]) -> Result<()> {
        self.observe_and_update(x_prev, u_prev, x_curr)
    }
}

/// Ideal closed loop driven by the stored window `ŵ_0..ŵ_{H−1}` (oldest
/// first) from `y_0 = 0`: for `s = 0..=H`,
/// `u_s = −K·y_s + Σ_i M_i·ŵ_{s−i}` and `y_{s+1} = A·y_s + B·u_s + ŵ_s`,
/// accumulating `y_{s+1}ᵀQy_{s+1} + u_sᵀRu_s`. Entries outside the window
/// are zero.
struct ProxyCost<'a> {
    gpc: &'a GpcState,
    window: Vec<Vec<f64>>,
}

fn mat_vec<S: Scalar>(m: &Matrix, v: &[S]) -> Vec<S> {
    (0..m.rows())
        .map(|i| {
            let mut acc = S::zero();
            for (a, x) in m.row(i).iter().zip(v) {
                acc = acc + *x * *a;
            }
            acc
        })
        .collect()
}

fn quad<S: Scalar>(m: &Matrix, v: &[S]) -> S {
    let mv = mat_vec(m, v);
    let mut acc = S::zero();
    for (a, b) in v.iter().zip(mv) {
        acc = acc + *a * b;
    }
    acc
}

impl DiffFunction for ProxyCost<'_> {
    fn input_dim(&self) -> usize {
        self.gpc.m.len()
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn eval<S: Scalar>(&self, params: &[S]) -> Vec<S> {
        let g = self.gpc;
        let (n, m, h) = (g.state_dim(), g.action_dim(), g.h);
        let w_at = |s: isize| -> Option<&Vec<f64>> {
            (s >= 0 && (s as usize) < self.window.len()).then(|| &self.window[s as usize])
        };
        let mut y = vec![S::zero(); n];
        let mut total = S::zero();
        for s in 0..=h {
            let mut u: Vec<S> = mat_vec(&g.k, &y).into_iter().map(|v| -v).collect();
            for i in 1..=h {
                if let Some(w) = w_at(s as isize - i as isize) {
                    let base = (i - 1) * m * n;
                    for (r, u_r) in u.iter_mut().enumerate() {
                        for (j, wj) in w.iter().enumerate() {
                            *u_r = *u_r + params[base + r * n + j] * *wj;
                        }
                    }
                }
            }
            let ay = mat_vec(&g.a, &y);
            let bu = mat_vec(&g.b, &u);
            let w = w_at(s as isize);
            y = (0..n)
                .map(|i| ay[i] + bu[i] + w.map_or(0.0, |w| w[i]))
                .collect();
            total = total + quad(&g.q, &y) + quad(&g.r, &u);
        }
        vec![total]
    }
}
