use std::sync::atomic::{AtomicU64, Ordering};

use crate::autodiff::Scalar;
use crate::envs::{Env, EnvSpec};

/// Oracle-complexity tally shared by every wrapper of one trial.
#[derive(Debug, Default)]
pub struct CallCounter {
    dynamics_evals: AtomicU64,
    gradient_passes: AtomicU64,
    rollouts: AtomicU64,
}

/// Plain copy of a [`CallCounter`]'s values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub dynamics_evals: u64,
    pub gradient_passes: u64,
    pub rollouts: u64,
}

impl CallCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dynamics_evals(&self) -> u64 {
        self.dynamics_evals.load(Ordering::Relaxed)
    }

    pub fn gradient_passes(&self) -> u64 {
        self.gradient_passes.load(Ordering::Relaxed)
    }

    pub fn rollouts(&self) -> u64 {
        self.rollouts.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> CallCounts {
        CallCounts {
            dynamics_evals: self.dynamics_evals(),
            gradient_passes: self.gradient_passes(),
            rollouts: self.rollouts(),
        }
    }

    pub fn add_gradient_passes(&self, n: u64) {
        self.gradient_passes.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_rollouts(&self, n: u64) {
        self.rollouts.fetch_add(n, Ordering::Relaxed);
    }

    pub fn reset(&self) {
        self.dynamics_evals.store(0, Ordering::Relaxed);
        self.gradient_passes.store(0, Ordering::Relaxed);
        self.rollouts.store(0, Ordering::Relaxed);
    }
}

/// Environment wrapper that counts every transition evaluation, on any
/// scalar type, and is otherwise transparent.
#[derive(Debug, Clone, Copy)]
pub struct Counted<'c, E> {
    pub env: E,
    pub counter: &'c CallCounter,
}

pub fn counted<E: Env>(env: E, counter: &CallCounter) -> Counted<'_, E> {
    Counted { env, counter }
}

impl<E: Env> Env for Counted<'_, E> {
    fn spec(&self) -> &EnvSpec {
        self.env.spec()
    }

    fn step<S: Scalar>(&self, x: &[S], u: &[S], w: &[S]) -> Vec<S> {
        self.counter.dynamics_evals.fetch_add(1, Ordering::Relaxed);
        self.env.step(x, u, w)
    }

    fn cost_residuals<S: Scalar>(&self, t: usize, x: &[S], u: &[S]) -> Vec<S> {
        self.env.cost_residuals(t, x, u)
    }

    fn cost<S: Scalar>(&self, t: usize, x: &[S], u: &[S]) -> S {
        self.env.cost(t, x, u)
    }

    fn observe<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        self.env.observe(x)
    }

    fn initial_state(&self) -> Vec<f64> {
        self.env.initial_state()
    }
}
