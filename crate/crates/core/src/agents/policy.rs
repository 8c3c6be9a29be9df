use super::mlp::MlpParams;
use crate::autodiff::{grad, DiffFunction, Scalar};
use crate::envs::{disturbance_at, DisturbanceSpec, Env};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::Matrix;

/// Parametric policy differentiable in its parameters.
pub trait Policy {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Action at step `t` for observation `obs` under parameters `params`.
    fn act_with<S: Scalar>(&self, params: &[S], t: usize, obs: &[S]) -> Vec<S>;

    fn act(&self, t: usize, obs: &[f64]) -> Vec<f64> {
        self.act_with(self.params(), t, obs)
    }
}

/// Linear policy `u = π·obs` with `π` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPolicy {
    action_dim: usize,
    obs_dim: usize,
    weights: Vec<f64>,
}

impl LinearPolicy {
    pub fn zeros(action_dim: usize, obs_dim: usize) -> Self {
        Self {
            action_dim,
            obs_dim,
            weights: vec![0.0; action_dim * obs_dim],
        }
    }

    pub fn from_matrix(gain: &Matrix) -> Self {
        Self {
            action_dim: gain.rows(),
            obs_dim: gain.cols(),
            weights: gain.data().to_vec(),
        }
    }

    pub fn gain(&self) -> Matrix {
        Matrix::new(self.action_dim, self.obs_dim, self.weights.clone()).expect("shape is consistent")
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.action_dim, self.obs_dim)
    }
}

impl Policy for LinearPolicy {
    fn params(&self) -> &[f64] {
        &self.weights
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn act_with<S: Scalar>(&self, params: &[S], _t: usize, obs: &[S]) -> Vec<S> {
        (0..self.action_dim)
            .map(|i| {
                let mut acc = S::zero();
                for (j, o) in obs.iter().enumerate() {
                    acc = acc + params[i * self.obs_dim + j] * *o;
                }
                acc
            })
            .collect()
    }
}

impl Policy for MlpParams {
    fn params(&self) -> &[f64] {
        MlpParams::params(self)
    }

    fn params_mut(&mut self) -> &mut [f64] {
        MlpParams::params_mut(self)
    }

    fn act_with<S: Scalar>(&self, params: &[S], _t: usize, obs: &[S]) -> Vec<S> {
        self.forward_with(params, obs)
    }
}

/// Rollout cost `J(π) = Σ_t c_t(x_t, π(y_t))` as a function of the policy
/// parameters, with `y_t = observe(x_t)`.
pub struct RolloutObjective<'a, E: Env, P: Policy> {
    pub env: &'a E,
    pub policy: &'a P,
    pub x0: &'a [f64],
    pub horizon: usize,
    pub disturbance: &'a DisturbanceSpec,
}

impl<E: Env, P: Policy> DiffFunction for RolloutObjective<'_, E, P> {
    fn input_dim(&self) -> usize {
        self.policy.params().len()
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn eval<S: Scalar>(&self, params: &[S]) -> Vec<S> {
        let n = self.env.spec().state_dim;
        let mut x: Vec<S> = self.x0.iter().map(|v| S::constant(*v)).collect();
        let mut total = S::zero();
        for t in 0..self.horizon {
            let obs = self.env.observe(&x);
            let u = self.policy.act_with(params, t, &obs);
            total = total + self.env.cost(t, &x, &u);
            let w: Vec<S> = disturbance_at(self.disturbance, t, n)
                .into_iter()
                .map(S::constant)
                .collect();
            x = self.env.step(&x, &u, &w);
        }
        vec![total]
    }
}

impl<E: Env, P: Policy> RolloutObjective<'_, E, P> {
    /// Plain evaluation at the policy's own parameters.
    pub fn cost(&self) -> f64 {
        self.eval::<f64>(self.policy.params())[0]
    }
}

/// Result of one deterministic policy-gradient update.
#[derive(Debug, Clone, PartialEq)]
pub struct PgStep {
    /// Rollout cost before the update.
    pub cost: f64,
    pub gradient: Vec<f64>,
}

/// `π ← π − lr·∇J(π)` with the gradient taken by one adjoint sweep through
/// the recorded rollout.
pub fn policy_gradient_step<E: Env, P: Policy>(
    policy: &mut P,
    env: &E,
    x0: &[f64],
    horizon: usize,
    lr: f64,
    disturbance: &DisturbanceSpec,
) -> Result<PgStep> {
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
    }
    if x0.len() != env.spec().state_dim {
        return Err(dim_mismatch("initial state length"));
    }
    let (cost, gradient) = {
        let objective = RolloutObjective {
            env,
            policy: &*policy,
            x0,
            horizon,
            disturbance,
        };
        grad(&objective, policy.params())?
    };
    if !cost.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::TrainingDiverged(format!("rollout cost {cost}")));
    }
    for (p, g) in policy.params_mut().iter_mut().zip(&gradient) {
        *p -= lr * g;
    }
    Ok(PgStep { cost, gradient })
}
