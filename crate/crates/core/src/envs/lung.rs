use super::{Env, EnvSpec};
use crate::agents::{mlp_forward, MlpParams, OutputMap};
use crate::autodiff::Scalar;
use crate::config::Config;
use crate::error::{dim_mismatch, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BalloonLungParams {
    pub dt: f64,
    /// Supply pressure behind the inspiratory valve, cmH₂O.
    pub supply: f64,
    pub peep: f64,
    pub c_in: f64,
    pub c_out: f64,
}

impl Default for BalloonLungParams {
    fn default() -> Self {
        Self {
            dt: 0.03,
            supply: 100.0,
            peep: 5.0,
            c_in: 10.0,
            c_out: 10.0,
        }
    }
}

impl BalloonLungParams {
    pub fn with_overrides(mut self, cfg: &Config) -> Result<Self> {
        self.dt = cfg.f64("lung.dt", self.dt)?;
        self.supply = cfg.f64("lung.supply", self.supply)?;
        self.peep = cfg.f64("lung.peep", self.peep)?;
        self.c_in = cfg.f64("lung.c_in", self.c_in)?;
        self.c_out = cfg.f64("lung.c_out", self.c_out)?;
        Ok(self)
    }
}

/// Square-wave airway pressure target with linear ramps on both edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureTarget {
    pub pip: f64,
    pub peep: f64,
    pub period: usize,
    pub ramp: usize,
}

impl Default for PressureTarget {
    fn default() -> Self {
        Self {
            pip: 35.0,
            peep: 5.0,
            period: 100,
            ramp: 3,
        }
    }
}

impl PressureTarget {
    pub fn with_overrides(mut self, cfg: &Config) -> Result<Self> {
        self.pip = cfg.f64("lung.pip", self.pip)?;
        self.peep = cfg.f64("lung.peep", self.peep)?;
        self.period = cfg.usize("lung.period", self.period)?;
        self.ramp = cfg.usize("lung.ramp", self.ramp)?;
        Ok(self)
    }

    pub fn at(&self, t: usize) -> f64 {
        let phase = t % self.period;
        let half = self.period / 2;
        let span = self.pip - self.peep;
        let ramp = self.ramp.max(1) as f64;
        if phase < self.ramp {
            self.peep + span * phase as f64 / ramp
        } else if phase < half {
            self.pip
        } else if phase < half + self.ramp {
            self.pip - span * (phase - half) as f64 / ramp
        } else {
            self.peep
        }
    }
}

/// Single-compartment lung behind an inspiratory and an expiratory valve.
///
/// State is the airway pressure `p`; the action is `(valve_in, valve_out)`,
/// each clamped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct BalloonLung {
    pub params: BalloonLungParams,
    pub target: PressureTarget,
    spec: EnvSpec,
}

impl Default for BalloonLung {
    fn default() -> Self {
        Self::new(BalloonLungParams::default(), PressureTarget::default())
    }
}

impl BalloonLung {
    pub fn new(params: BalloonLungParams, target: PressureTarget) -> Self {
        Self {
            spec: EnvSpec {
                name: "balloon-lung",
                state_dim: 1,
                action_dim: 2,
                observation_dim: 1,
                dt: params.dt,
                horizon_default: 300,
            },
            params,
            target,
        }
    }

    pub fn from_config(cfg: &Config) -> Result<Self> {
        Ok(Self::new(
            BalloonLungParams::default().with_overrides(cfg)?,
            PressureTarget::default().with_overrides(cfg)?,
        ))
    }
}

impl Env for BalloonLung {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn step<S: Scalar>(&self, x: &[S], u: &[S], w: &[S]) -> Vec<S> {
        let p = &self.params;
        let v_in = u[0].clamp(0.0, 1.0);
        let v_out = u[1].clamp(0.0, 1.0);
        let inflow = v_in * (-x[0] + p.supply) * p.c_in;
        let outflow = v_out * (x[0] - p.peep) * p.c_out;
        let next = x[0] + (inflow - outflow) * p.dt + w[0];
        vec![next.max(S::zero())]
    }

    fn cost_residuals<S: Scalar>(&self, t: usize, x: &[S], _u: &[S]) -> Vec<S> {
        vec![x[0] - self.target.at(t)]
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![self.params.peep]
    }
}

/// Pressure normalisation used for the learned simulator's inputs and output.
pub const PRESSURE_SCALE: f64 = 100.0;

/// Features `(p_{t−2}, p_{t−1}, p_t) / scale` followed by the valve pairs
/// at `t−2`, `t−1` and `t`.
fn learned_features<S: Scalar>(x: &[S], u: &[S]) -> Vec<S> {
    let mut f = Vec::with_capacity(9);
    for p in &x[..3] {
        f.push(*p * (1.0 / PRESSURE_SCALE));
    }
    f.extend_from_slice(&x[3..7]);
    f.push(u[0].clamp(0.0, 1.0));
    f.push(u[1].clamp(0.0, 1.0));
    f
}

/// Next pressure predicted from the history state `x` (see [`LearnedLung`])
/// and the current valves, with network parameters supplied by `weight`.
pub(crate) fn learned_pressure<S: Scalar>(sizes: &[usize], weight: impl Fn(usize) -> S, x: &[S], u: &[S]) -> S {
    let f = learned_features(x, u);
    mlp_forward(sizes, weight, &f, OutputMap::Linear)[0] * PRESSURE_SCALE
}

/// Checked next-pressure prediction of the learned simulator.
pub fn learned_lung_step(x: &[f64], u: &[f64], params: &MlpParams) -> Result<f64> {
    if x.len() != 7 || u.len() != 2 || params.input_dim() != 9 || params.output_dim() != 1 {
        return Err(dim_mismatch(format!(
            "learned lung needs a 7-state, 2 valves and a 9→1 network, got {}, {}, {:?}",
            x.len(),
            u.len(),
            params.sizes()
        )));
    }
    Ok(learned_pressure(params.sizes(), |i| params.params()[i], x, u))
}

/// Neural-network lung simulator fitted to transitions of a real lung.
///
/// State `(p_{t−2}, p_{t−1}, p_t, in_{t−2}, out_{t−2}, in_{t−1}, out_{t−1})`
/// holds the last three pressures and the two previous valve pairs; the
/// transition shifts the history and appends the predicted pressure.
#[derive(Debug, Clone)]
pub struct LearnedLung {
    pub net: MlpParams,
    pub target: PressureTarget,
    spec: EnvSpec,
}

impl LearnedLung {
    /// Default architecture: 9 inputs, two hidden layers of 32, one output.
    pub const SIZES: [usize; 4] = [9, 32, 32, 1];

    pub fn new(net: MlpParams, target: PressureTarget) -> Result<Self> {
        if net.input_dim() != 9 || net.output_dim() != 1 {
            return Err(dim_mismatch(format!(
                "learned lung needs a 9→1 network, got {:?}",
                net.sizes()
            )));
        }
        Ok(Self {
            net,
            target,
            spec: EnvSpec {
                name: "learned-lung",
                state_dim: 7,
                action_dim: 2,
                observation_dim: 1,
                dt: BalloonLungParams::default().dt,
                horizon_default: 300,
            },
        })
    }

    /// Untrained network with random weights.
    pub fn untrained(seed: u64) -> Self {
        let net = MlpParams::random(&Self::SIZES, OutputMap::Linear, seed, 0).expect("valid sizes");
        Self::new(net, PressureTarget::default()).expect("valid sizes")
    }

    /// History state with every pressure equal to `p` and valves closed.
    pub fn rest_state(p: f64) -> Vec<f64> {
        vec![p, p, p, 0.0, 0.0, 0.0, 0.0]
    }
}

impl Env for LearnedLung {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn step<S: Scalar>(&self, x: &[S], u: &[S], w: &[S]) -> Vec<S> {
        let p = learned_pressure(self.net.sizes(), |i| S::constant(self.net.params()[i]), x, u);
        vec![
            x[1] + w[0],
            x[2] + w[1],
            p + w[2],
            x[5] + w[3],
            x[6] + w[4],
            u[0].clamp(0.0, 1.0) + w[5],
            u[1].clamp(0.0, 1.0) + w[6],
        ]
    }

    fn cost_residuals<S: Scalar>(&self, t: usize, x: &[S], _u: &[S]) -> Vec<S> {
        vec![x[2] - self.target.at(t)]
    }

    /// Current pressure, matching the physical lung's observation.
    fn observe<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![x[2]]
    }

    fn initial_state(&self) -> Vec<f64> {
        Self::rest_state(self.target.peep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn step(p: f64, u: [f64; 2]) -> f64 {
        BalloonLung::default().step(&[p], &u, &[0.0])[0]
    }

    #[test]
    fn balloon_examples() {
        assert_eq!(step(5.0, [0.0, 1.0]), 5.0);
        assert_eq!(step(0.0, [0.0, 0.0]), 0.0);
        assert!((step(10.0, [1.0, 0.0]) - 37.0).abs() < 1e-12);
    }

    #[test]
    fn valves_are_clamped_and_floor_holds() {
        assert_eq!(step(10.0, [2.0, -1.0]), step(10.0, [1.0, 0.0]));
        let lung = BalloonLung::default();
        assert_eq!(lung.step(&[1.0], &[0.0, 0.0], &[-5.0]), vec![0.0]);
    }

    #[test]
    fn full_inhale_saturates() {
        let mut p = 5.0;
        for _ in 0..10 {
            p = step(p, [1.0, 0.0]);
        }
        assert!(p > 95.0 && p < 100.0, "{p}");
    }

    #[test]
    fn target_waveform() {
        let t = PressureTarget::default();
        assert_eq!(t.at(0), 5.0);
        assert_eq!(t.at(3), 35.0);
        assert_eq!(t.at(49), 35.0);
        assert_eq!(t.at(50), 35.0);
        assert_eq!(t.at(53), 5.0);
        assert_eq!(t.at(99), 5.0);
        assert_eq!(t.at(103), 35.0);
        assert!((t.at(1) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn learned_zero_params_predict_zero() {
        let net = MlpParams::zeros(&LearnedLung::SIZES, OutputMap::Linear).unwrap();
        let x = [3.0, 7.0, 12.0, 1.0, 0.0, 0.5, 0.5];
        assert_eq!(learned_lung_step(&x, &[0.3, 0.9], &net).unwrap(), 0.0);
    }

    #[test]
    fn learned_identity_layer_reproduces_pressure() {
        let mut w = Matrix::zeros(1, 9);
        w[(0, 2)] = 1.0;
        let net = MlpParams::from_layers(&[(w, vec![0.0])], OutputMap::Linear).unwrap();
        let x = [3.0, 7.0, 12.5, 1.0, 0.0, 0.5, 0.5];
        let p = learned_lung_step(&x, &[0.3, 0.9], &net).unwrap();
        assert!((p - 12.5).abs() < 1e-12);
        let lung = LearnedLung::new(net, PressureTarget::default()).unwrap();
        let next = lung.step(&x, &[0.3, 0.9], &[0.0; 7]);
        assert_eq!(&next[..2], &[7.0, 12.5]);
        assert!((next[2] - 12.5).abs() < 1e-12);
        assert_eq!(&next[3..], &[0.5, 0.5, 0.3, 0.9]);
    }

    #[test]
    fn learned_dimension_errors() {
        let net = MlpParams::zeros(&[4, 1], OutputMap::Linear).unwrap();
        assert!(learned_lung_step(&[0.0; 7], &[0.0; 2], &net).is_err());
        assert!(LearnedLung::new(net, PressureTarget::default()).is_err());
    }
}
