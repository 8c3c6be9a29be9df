//! Differentiable environments.
//!
//! Every environment implements [`Env`]: a deterministic transition
//! `x' = f(x, u) + w` with additive disturbance on the full state, a stage cost
//! written as a sum of squared residuals, and an observation map. All of them
//! are generic over [`Scalar`], so the same code runs on `f64` for simulation
//! and on tape variables for derivatives.

mod cartpole;
mod disturbance;
mod lds;
mod lung;
mod pendulum;
mod quadrotor;

pub use cartpole::{Cartpole, CartpoleParams};
pub use disturbance::{disturbance_at, DisturbanceSpec};
pub use lds::{lds_step, Lds};
pub(crate) use lung::learned_pressure;
pub use lung::{learned_lung_step, BalloonLung, BalloonLungParams, LearnedLung, PressureTarget, PRESSURE_SCALE};
pub use pendulum::{Pendulum, PendulumObservation, PendulumParams};
pub use quadrotor::{CircleTarget, PlanarQuadrotor, QuadrotorParams};

use crate::autodiff::{DiffFunction, Scalar};
use crate::error::{dim_mismatch, Result};

/// Static description of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: &'static str,
    pub state_dim: usize,
    pub action_dim: usize,
    pub observation_dim: usize,
    /// Integration step in seconds.
    pub dt: f64,
    pub horizon_default: usize,
}

pub trait Env {
    fn spec(&self) -> &EnvSpec;

    /// One transition `f(x, u) + w`.
    fn step<S: Scalar>(&self, x: &[S], u: &[S], w: &[S]) -> Vec<S>;

    /// Residuals `r` with stage cost `c_t(x, u) = Σ rᵢ²`.
    fn cost_residuals<S: Scalar>(&self, t: usize, x: &[S], u: &[S]) -> Vec<S>;

    fn cost<S: Scalar>(&self, t: usize, x: &[S], u: &[S]) -> S {
        let mut c = S::zero();
        for r in self.cost_residuals(t, x, u) {
            c = c + r * r;
        }
        c
    }

    fn observe<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        x.to_vec()
    }

    fn initial_state(&self) -> Vec<f64>;

    /// Undisturbed transition on the plain-real path.
    fn step_f64(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let w = vec![0.0; self.spec().state_dim];
        self.step(x, u, &w)
    }
}

impl<E: Env + ?Sized> Env for &E {
    fn spec(&self) -> &EnvSpec {
        (**self).spec()
    }

    fn step<S: Scalar>(&self, x: &[S], u: &[S], w: &[S]) -> Vec<S> {
        (**self).step(x, u, w)
    }

    fn cost_residuals<S: Scalar>(&self, t: usize, x: &[S], u: &[S]) -> Vec<S> {
        (**self).cost_residuals(t, x, u)
    }

    fn cost<S: Scalar>(&self, t: usize, x: &[S], u: &[S]) -> S {
        (**self).cost(t, x, u)
    }

    fn observe<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        (**self).observe(x)
    }

    fn initial_state(&self) -> Vec<f64> {
        (**self).initial_state()
    }
}

/// The undisturbed transition as a function of the stacked input `(x, u)`.
pub struct StepFunction<'a, E: Env>(pub &'a E);

impl<E: Env> DiffFunction for StepFunction<'_, E> {
    fn input_dim(&self) -> usize {
        self.0.spec().state_dim + self.0.spec().action_dim
    }

    fn output_dim(&self) -> usize {
        self.0.spec().state_dim
    }

    fn eval<S: Scalar>(&self, z: &[S]) -> Vec<S> {
        let n = self.0.spec().state_dim;
        let w = vec![S::zero(); n];
        self.0.step(&z[..n], &z[n..], &w)
    }
}

/// Stage cost at time `t` as a function of the stacked input `(x, u)`.
pub struct CostFunction<'a, E: Env> {
    pub env: &'a E,
    pub t: usize,
}

impl<E: Env> DiffFunction for CostFunction<'_, E> {
    fn input_dim(&self) -> usize {
        self.env.spec().state_dim + self.env.spec().action_dim
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn eval<S: Scalar>(&self, z: &[S]) -> Vec<S> {
        let n = self.env.spec().state_dim;
        vec![self.env.cost(self.t, &z[..n], &z[n..])]
    }
}

/// Cost residuals at time `t` as a function of the stacked input `(x, u)`.
pub struct ResidualFunction<'a, E: Env> {
    pub env: &'a E,
    pub t: usize,
    pub dim: usize,
}

impl<'a, E: Env> ResidualFunction<'a, E> {
    pub fn new(env: &'a E, t: usize) -> Self {
        let spec = env.spec();
        let dim = env
            .cost_residuals(t, &vec![0.0; spec.state_dim], &vec![0.0; spec.action_dim])
            .len();
        Self { env, t, dim }
    }
}

impl<E: Env> DiffFunction for ResidualFunction<'_, E> {
    fn input_dim(&self) -> usize {
        self.env.spec().state_dim + self.env.spec().action_dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn eval<S: Scalar>(&self, z: &[S]) -> Vec<S> {
        let n = self.env.spec().state_dim;
        self.env.cost_residuals(self.t, &z[..n], &z[n..])
    }
}

/// States, actions and stage costs of one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    pub total_cost: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one state")
    }
}

/// Simulates `horizon` steps of `policy` from `x0` under `disturbance`.
///
/// The policy sees `(t, x_t)`. Exactly `horizon` transitions are evaluated.
pub fn rollout<E, P>(
    env: &E,
    mut policy: P,
    x0: &[f64],
    horizon: usize,
    disturbance: &DisturbanceSpec,
) -> Result<Trajectory>
where
    E: Env,
    P: FnMut(usize, &[f64]) -> Vec<f64>,
{
    let spec = env.spec();
    if x0.len() != spec.state_dim {
        return Err(dim_mismatch(format!(
            "{} expects a {}-dimensional state, got {}",
            spec.name,
            spec.state_dim,
            x0.len()
        )));
    }
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut costs = Vec::with_capacity(horizon);
    let mut total_cost = 0.0;
    states.push(x0.to_vec());
    for t in 0..horizon {
        let x = &states[t];
        let u = policy(t, x);
        if u.len() != spec.action_dim {
            return Err(dim_mismatch(format!(
                "{} expects a {}-dimensional action, got {}",
                spec.name,
                spec.action_dim,
                u.len()
            )));
        }
        let w = disturbance_at(disturbance, t, spec.state_dim);
        let c = env.cost(t, x, &u);
        let next = env.step(x, &u, &w);
        total_cost += c;
        costs.push(c);
        actions.push(u);
        states.push(next);
    }
    Ok(Trajectory {
        states,
        actions,
        costs,
        total_cost,
    })
}

/// Policy that always returns the zero action.
pub fn zero_policy(action_dim: usize) -> impl FnMut(usize, &[f64]) -> Vec<f64> {
    move |_, _| vec![0.0; action_dim]
}
