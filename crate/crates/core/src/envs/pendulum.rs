use std::f64::consts::PI;

use super::{Env, EnvSpec};
use crate::autodiff::Scalar;
use crate::config::Config;
use crate::error::Result;

/// What [`Pendulum::observe`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PendulumObservation {
    /// `(cos θ, sin θ, θ̇)`.
    Trig,
    /// `(wrap(θ), θ̇)`, used by linear policies.
    Angle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendulumParams {
    pub g: f64,
    pub mass: f64,
    pub length: f64,
    pub dt: f64,
    pub torque_max: f64,
    pub speed_max: f64,
    pub observation: PendulumObservation,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            g: 10.0,
            mass: 1.0,
            length: 1.0,
            dt: 0.05,
            torque_max: 2.0,
            speed_max: 8.0,
            observation: PendulumObservation::Trig,
        }
    }
}

impl PendulumParams {
    /// Policy-gradient variant: torque limit 10, angle observation.
    pub fn policy_gradient() -> Self {
        Self {
            torque_max: 10.0,
            observation: PendulumObservation::Angle,
            ..Self::default()
        }
    }

    pub fn with_overrides(mut self, cfg: &Config) -> Result<Self> {
        self.g = cfg.f64("pendulum.g", self.g)?;
        self.mass = cfg.f64("pendulum.mass", self.mass)?;
        self.length = cfg.f64("pendulum.length", self.length)?;
        self.dt = cfg.f64("pendulum.dt", self.dt)?;
        self.torque_max = cfg.f64("pendulum.torque_max", self.torque_max)?;
        self.speed_max = cfg.f64("pendulum.speed_max", self.speed_max)?;
        match cfg.get("pendulum.observation") {
            Some("trig") => self.observation = PendulumObservation::Trig,
            Some("angle") => self.observation = PendulumObservation::Angle,
            Some(other) => {
                return Err(crate::error::Error::InvalidArgument(format!(
                    "pendulum.observation must be trig or angle, got `{other}`"
                )))
            }
            None => {}
        }
        Ok(self)
    }
}

/// Torque-driven pendulum, `θ = 0` upright, `θ = π` hanging.
#[derive(Debug, Clone)]
pub struct Pendulum {
    pub params: PendulumParams,
    spec: EnvSpec,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new(PendulumParams::default())
    }
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Self {
        let observation_dim = match params.observation {
            PendulumObservation::Trig => 3,
            PendulumObservation::Angle => 2,
        };
        Self {
            spec: EnvSpec {
                name: "pendulum",
                state_dim: 2,
                action_dim: 1,
                observation_dim,
                dt: params.dt,
                horizon_default: 200,
            },
            params,
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Self> {
        Ok(Self::new(PendulumParams::default().with_overrides(cfg)?))
    }

    /// Mechanical energy per unit inertia, `½θ̇² + (3g/2l)·cos θ`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        let p = &self.params;
        0.5 * x[1] * x[1] + 1.5 * p.g / p.length * x[0].cos()
    }
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn step<S: Scalar>(&self, x: &[S], u: &[S], w: &[S]) -> Vec<S> {
        let p = &self.params;
        let theta = x[0];
        let u = u[0].clamp(-p.torque_max, p.torque_max);
        // sin θ written about the hanging position, so θ = π stays an exact
        // fixed point in floating point.
        let sin_theta = -(theta - PI).sin();
        let accel = sin_theta * (1.5 * p.g / p.length) + u * (3.0 / (p.mass * p.length * p.length));
        let speed = (x[1] + accel * p.dt).clamp(-p.speed_max, p.speed_max);
        let theta_next = theta + speed * p.dt;
        vec![theta_next + w[0], speed + w[1]]
    }

    fn cost_residuals<S: Scalar>(&self, _t: usize, x: &[S], u: &[S]) -> Vec<S> {
        let u = u[0].clamp(-self.params.torque_max, self.params.torque_max);
        vec![x[0].wrap_angle(), x[1] * 0.1f64.sqrt(), u * 0.001f64.sqrt()]
    }

    fn observe<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        match self.params.observation {
            PendulumObservation::Trig => vec![x[0].cos(), x[0].sin(), x[1]],
            PendulumObservation::Angle => vec![x[0].wrap_angle(), x[1]],
        }
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![PI, 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(x: [f64; 2], u: f64) -> Vec<f64> {
        Pendulum::default().step(&x, &[u], &[0.0, 0.0])
    }

    #[test]
    fn hanging_equilibrium_is_exact() {
        assert_eq!(step([PI, 0.0], 0.0), vec![PI, 0.0]);
    }

    #[test]
    fn upright_equilibrium() {
        let next = step([0.0, 0.0], 0.0);
        assert!(next[0].abs() < 1e-12 && next[1].abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_step() {
        let next = step([PI / 2.0, 0.0], 0.0);
        assert!((next[1] - 0.75).abs() < 1e-12);
        assert!((next[0] - (PI / 2.0 + 0.0375)).abs() < 1e-12);
    }

    #[test]
    fn torque_is_clamped() {
        let a = step([PI, 0.0], 2.0);
        let b = step([PI, 0.0], 50.0);
        assert_eq!(a, b);
        let env = Pendulum::new(PendulumParams::policy_gradient());
        let c = env.step(&[PI, 0.0], &[50.0], &[0.0, 0.0]);
        // 0.05 · 3 · 10
        assert!((c[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn cost_at_bottom_is_pi_squared() {
        let env = Pendulum::default();
        let c: f64 = env.cost(0, &[PI, 0.0], &[0.0]);
        assert!((c - PI * PI).abs() < 1e-12);
    }

    #[test]
    fn observation_modes() {
        let trig = Pendulum::default();
        assert_eq!(trig.observe(&[0.0, 1.0]), vec![1.0, 0.0, 1.0]);
        let angle = Pendulum::new(PendulumParams::policy_gradient());
        assert_eq!(angle.observe(&[PI, 1.0]), vec![PI, 1.0]);
        assert_eq!(angle.spec().observation_dim, 2);
    }
}
