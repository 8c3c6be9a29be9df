use super::{Env, EnvSpec};
use crate::autodiff::Scalar;
use crate::error::{dim_mismatch, Result};
use crate::linalg::Matrix;

/// Linear dynamical system `x' = Ax + Bu + w` with cost `xᵀQx + uᵀRu`.
#[derive(Debug, Clone)]
pub struct Lds {
    pub a: Matrix,
    pub b: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub x0: Vec<f64>,
    q_sqrt: Matrix,
    r_sqrt: Matrix,
    spec: EnvSpec,
}

impl Lds {
    pub fn new(a: Matrix, b: Matrix, q: Matrix, r: Matrix) -> Result<Self> {
        let n = a.rows();
        let m = b.cols();
        if !a.is_square() || b.rows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
            return Err(dim_mismatch(format!(
                "LDS with A {:?}, B {:?}, Q {:?}, R {:?}",
                a.shape(),
                b.shape(),
                q.shape(),
                r.shape()
            )));
        }
        Ok(Self {
            q_sqrt: q.psd_sqrt(),
            r_sqrt: r.psd_sqrt(),
            x0: vec![0.0; n],
            spec: EnvSpec {
                name: "lds",
                state_dim: n,
                action_dim: m,
                observation_dim: n,
                dt: 1.0,
                horizon_default: 100,
            },
            a,
            b,
            q,
            r,
        })
    }

    /// `Q = I`, `R = I`.
    pub fn with_identity_costs(a: Matrix, b: Matrix) -> Result<Self> {
        let (n, m) = (a.rows(), b.cols());
        Self::new(a, b, Matrix::identity(n), Matrix::identity(m))
    }

    /// `A = [[1, 1], [0, 1]]`, `B = [[0], [1]]`, identity costs.
    pub fn double_integrator() -> Self {
        Self::with_identity_costs(
            Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]),
            Matrix::from_rows(&[[0.0], [1.0]]),
        )
        .expect("double integrator dimensions agree")
    }

    pub fn with_initial_state(mut self, x0: Vec<f64>) -> Result<Self> {
        if x0.len() != self.spec.state_dim {
            return Err(dim_mismatch("initial state length"));
        }
        self.x0 = x0;
        Ok(self)
    }
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

impl Env for Lds {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn step<S: Scalar>(&self, x: &[S], u: &[S], w: &[S]) -> Vec<S> {
        let ax = mat_vec(&self.a, x);
        let bu = mat_vec(&self.b, u);
        ax.into_iter()
            .zip(bu)
            .zip(w)
            .map(|((a, b), w)| a + b + *w)
            .collect()
    }

    fn cost_residuals<S: Scalar>(&self, _t: usize, x: &[S], u: &[S]) -> Vec<S> {
        let mut r = mat_vec(&self.q_sqrt, x);
        r.extend(mat_vec(&self.r_sqrt, u));
        r
    }

    fn initial_state(&self) -> Vec<f64> {
        self.x0.clone()
    }
}

/// Checked single LDS transition.
pub fn lds_step(x: &[f64], u: &[f64], w: &[f64], a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || x.len() != n || w.len() != n || u.len() != b.cols() {
        return Err(dim_mismatch(format!(
            "x {}, u {}, w {} against A {:?}, B {:?}",
            x.len(),
            u.len(),
            w.len(),
            a.shape(),
            b.shape()
        )));
    }
    let ax = a.mul_vec(x);
    let bu = b.mul_vec(u);
    Ok((0..n).map(|i| ax[i] + bu[i] + w[i]).collect())
}
