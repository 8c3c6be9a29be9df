use super::{Env, EnvSpec};
use crate::autodiff::Scalar;
use crate::config::Config;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CartpoleParams {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half the pole length.
    pub half_length: f64,
    pub force_mag: f64,
    pub dt: f64,
}

impl Default for CartpoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force_mag: 10.0,
            dt: 0.02,
        }
    }
}

impl CartpoleParams {
    pub fn with_overrides(mut self, cfg: &Config) -> Result<Self> {
        self.gravity = cfg.f64("cartpole.gravity", self.gravity)?;
        self.cart_mass = cfg.f64("cartpole.cart_mass", self.cart_mass)?;
        self.pole_mass = cfg.f64("cartpole.pole_mass", self.pole_mass)?;
        self.half_length = cfg.f64("cartpole.half_length", self.half_length)?;
        self.force_mag = cfg.f64("cartpole.force_mag", self.force_mag)?;
        self.dt = cfg.f64("cartpole.dt", self.dt)?;
        Ok(self)
    }
}

/// Cart-pole with a continuous force `force_mag · clamp(u, −1, 1)`.
///
/// State `(x, ẋ, θ, θ̇)`, explicit Euler with positions advanced on the old
/// velocities.
#[derive(Debug, Clone)]
pub struct Cartpole {
    pub params: CartpoleParams,
    spec: EnvSpec,
}

impl Default for Cartpole {
    fn default() -> Self {
        Self::new(CartpoleParams::default())
    }
}

impl Cartpole {
    pub fn new(params: CartpoleParams) -> Self {
        Self {
            spec: EnvSpec {
                name: "cartpole",
                state_dim: 4,
                action_dim: 1,
                observation_dim: 4,
                dt: params.dt,
                horizon_default: 200,
            },
            params,
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Self> {
        Ok(Self::new(CartpoleParams::default().with_overrides(cfg)?))
    }
}

impl Env for Cartpole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn step<S: Scalar>(&self, x: &[S], u: &[S], w: &[S]) -> Vec<S> {
        let p = &self.params;
        let total_mass = p.cart_mass + p.pole_mass;
        let pole_mass_length = p.pole_mass * p.half_length;
        let force = u[0].clamp(-1.0, 1.0) * p.force_mag;
        let (pos, vel, theta, omega) = (x[0], x[1], x[2], x[3]);
        let sin_t = theta.sin();
        let cos_t = theta.cos();
        let temp = (force + omega * omega * sin_t * pole_mass_length) / total_mass;
        let denom = (cos_t * cos_t * (p.pole_mass / total_mass) - 4.0 / 3.0) * (-p.half_length);
        let theta_acc = (sin_t * p.gravity - cos_t * temp) / denom;
        let x_acc = temp - theta_acc * cos_t * (pole_mass_length / total_mass);
        vec![
            pos + vel * p.dt + w[0],
            vel + x_acc * p.dt + w[1],
            theta + omega * p.dt + w[2],
            omega + theta_acc * p.dt + w[3],
        ]
    }

    fn cost_residuals<S: Scalar>(&self, _t: usize, x: &[S], _u: &[S]) -> Vec<S> {
        vec![x[0], x[3] * 0.1f64.sqrt(), x[2] * 10f64.sqrt()]
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0, 0.0, 0.05, 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Lagrangian form: solve the 2×2 mass-matrix system for (ẍ, θ̈).
    fn textbook_step(x: [f64; 4], force: f64, p: &CartpoleParams) -> [f64; 4] {
        let (m_c, m_p, l, g) = (p.cart_mass, p.pole_mass, p.half_length, p.gravity);
        let (s, c) = (x[2].sin(), x[2].cos());
        let m11 = m_c + m_p;
        let m12 = m_p * l * c;
        let m22 = 4.0 / 3.0 * m_p * l * l;
        let f1 = force + m_p * l * x[3] * x[3] * s;
        let f2 = m_p * g * l * s;
        let det = m11 * m22 - m12 * m12;
        let x_acc = (m22 * f1 - m12 * f2) / det;
        let theta_acc = (m11 * f2 - m12 * f1) / det;
        [
            x[0] + p.dt * x[1],
            x[1] + p.dt * x_acc,
            x[2] + p.dt * x[3],
            x[3] + p.dt * theta_acc,
        ]
    }

    #[test]
    fn upright_rest_is_fixed() {
        let env = Cartpole::default();
        assert_eq!(env.step(&[0.0; 4], &[0.0], &[0.0; 4]), vec![0.0; 4]);
    }

    #[test]
    fn matches_textbook_equations() {
        let env = Cartpole::default();
        for (x, u) in [
            ([0.0, 0.0, 0.0, 0.0], 1.0),
            ([0.1, -0.3, 0.2, 0.5], -0.4),
            ([-1.0, 0.7, -0.6, -1.2], 0.9),
        ] {
            let ours = env.step(&x, &[u], &[0.0; 4]);
            let theirs = textbook_step(x, 10.0 * u, &env.params);
            for (a, b) in ours.iter().zip(theirs) {
                assert!((a - b).abs() < 1e-12, "{ours:?} vs {theirs:?}");
            }
        }
    }

    #[test]
    fn push_from_rest_accelerates_cart() {
        let env = Cartpole::default();
        let next = env.step(&[0.0; 4], &[1.0], &[0.0; 4]);
        // pole coupling makes the cart accelerate faster than F/(M+m)
        assert!(next[1] > 0.02 * 10.0 / 1.1);
        assert!(next[3] < 0.0);
    }
}
