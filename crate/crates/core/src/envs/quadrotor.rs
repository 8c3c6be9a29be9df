use std::f64::consts::PI;

use super::{Env, EnvSpec};
use crate::autodiff::Scalar;
use crate::config::Config;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrotorParams {
    pub mass: f64,
    /// Rotor arm length.
    pub arm: f64,
    pub inertia: f64,
    pub g: f64,
    pub dt: f64,
    pub attitude_weight: f64,
    pub thrust_weight: f64,
}

impl Default for QuadrotorParams {
    fn default() -> Self {
        Self {
            mass: 0.1,
            arm: 0.2,
            inertia: 0.004,
            g: 9.81,
            dt: 0.05,
            attitude_weight: 0.1,
            thrust_weight: 1e-3,
        }
    }
}

impl QuadrotorParams {
    pub fn with_overrides(mut self, cfg: &Config) -> Result<Self> {
        self.mass = cfg.f64("quadrotor.mass", self.mass)?;
        self.arm = cfg.f64("quadrotor.arm", self.arm)?;
        self.inertia = cfg.f64("quadrotor.inertia", self.inertia)?;
        self.g = cfg.f64("quadrotor.g", self.g)?;
        self.dt = cfg.f64("quadrotor.dt", self.dt)?;
        Ok(self)
    }

    /// Per-rotor thrust that balances gravity.
    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.g / 2.0
    }
}

/// Reference flight path: a circle through the origin,
/// `(r·sin(2πt/P), r·(1 − cos(2πt/P)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleTarget {
    pub radius: f64,
    pub period_steps: f64,
}

impl Default for CircleTarget {
    fn default() -> Self {
        Self {
            radius: 0.5,
            period_steps: 100.0,
        }
    }
}

impl CircleTarget {
    pub fn at(&self, t: usize) -> (f64, f64) {
        let phase = 2.0 * PI * t as f64 / self.period_steps;
        (self.radius * phase.sin(), self.radius * (1.0 - phase.cos()))
    }
}

/// Planar quadrotor with state `(x, y, φ, ẋ, ẏ, φ̇)` and two rotor thrusts.
#[derive(Debug, Clone)]
pub struct PlanarQuadrotor {
    pub params: QuadrotorParams,
    pub target: CircleTarget,
    spec: EnvSpec,
}

impl Default for PlanarQuadrotor {
    fn default() -> Self {
        Self::new(QuadrotorParams::default(), CircleTarget::default())
    }
}

impl PlanarQuadrotor {
    pub fn new(params: QuadrotorParams, target: CircleTarget) -> Self {
        Self {
            spec: EnvSpec {
                name: "planar-quadrotor",
                state_dim: 6,
                action_dim: 2,
                observation_dim: 6,
                dt: params.dt,
                horizon_default: 100,
            },
            params,
            target,
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Self> {
        let params = QuadrotorParams::default().with_overrides(cfg)?;
        let target = CircleTarget {
            radius: cfg.f64("quadrotor.radius", 0.5)?,
            period_steps: cfg.f64("quadrotor.period", 100.0)?,
        };
        Ok(Self::new(params, target))
    }
}

impl Env for PlanarQuadrotor {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn step<S: Scalar>(&self, x: &[S], u: &[S], w: &[S]) -> Vec<S> {
        let p = &self.params;
        let thrust = u[0] + u[1];
        let phi = x[2];
        let x_acc = -(thrust * phi.sin()) / p.mass;
        let y_acc = thrust * phi.cos() / p.mass - p.g;
        let phi_acc = (u[0] - u[1]) * (p.arm / p.inertia);
        vec![
            x[0] + x[3] * p.dt + w[0],
            x[1] + x[4] * p.dt + w[1],
            x[2] + x[5] * p.dt + w[2],
            x[3] + x_acc * p.dt + w[3],
            x[4] + y_acc * p.dt + w[4],
            x[5] + phi_acc * p.dt + w[5],
        ]
    }

    fn cost_residuals<S: Scalar>(&self, t: usize, x: &[S], u: &[S]) -> Vec<S> {
        let p = &self.params;
        let (tx, ty) = self.target.at(t);
        let hover = p.hover_thrust();
        let wu = p.thrust_weight.sqrt();
        vec![
            x[0] - tx,
            x[1] - ty,
            x[2] * p.attitude_weight.sqrt(),
            (u[0] - hover) * wu,
            (u[1] - hover) * wu,
        ]
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; 6]
    }
}
