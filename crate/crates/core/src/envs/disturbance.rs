use crate::random::keyed_normal;

/// Additive perturbation sequence `w_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSpec {
    Zero,
    /// I.i.d. `N(0, σ²)` entries keyed on `(seed, t, coordinate)`.
    Gaussian { sigma: f64, seed: u64 },
    /// `amplitude · sin(omega·t + phase)` on every coordinate.
    Sinusoidal { amplitude: f64, omega: f64, phase: f64 },
    Constant(f64),
    /// `inner` on `[start, end)`, zero elsewhere.
    Shock {
        inner: Box<DisturbanceSpec>,
        start: usize,
        end: usize,
    },
}

impl DisturbanceSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DisturbanceSpec::Zero => "zero",
            DisturbanceSpec::Gaussian { .. } => "gaussian",
            DisturbanceSpec::Sinusoidal { .. } => "sinusoidal",
            DisturbanceSpec::Constant(_) => "constant",
            DisturbanceSpec::Shock { .. } => "shock",
        }
    }
}

/// Disturbance vector at step `t`; a pure function of `(spec, t, dim)`.
pub fn disturbance_at(spec: &DisturbanceSpec, t: usize, dim: usize) -> Vec<f64> {
    match spec {
        DisturbanceSpec::Zero => vec![0.0; dim],
        DisturbanceSpec::Constant(c) => vec![*c; dim],
        DisturbanceSpec::Sinusoidal {
            amplitude,
            omega,
            phase,
        } => vec![amplitude * (omega * t as f64 + phase).sin(); dim],
        DisturbanceSpec::Gaussian { sigma, seed } => (0..dim)
            .map(|i| sigma * keyed_normal(*seed, t as u64, i as u64))
            .collect(),
        DisturbanceSpec::Shock { inner, start, end } => {
            if (*start..*end).contains(&t) {
                disturbance_at(inner, t, dim)
            } else {
                vec![0.0; dim]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_and_zero() {
        assert_eq!(disturbance_at(&DisturbanceSpec::Constant(0.3), 17, 2), vec![0.3, 0.3]);
        assert_eq!(disturbance_at(&DisturbanceSpec::Zero, 3, 3), vec![0.0; 3]);
    }

    #[test]
    fn sinusoid_quarter_period() {
        let spec = DisturbanceSpec::Sinusoidal {
            amplitude: 1.0,
            omega: PI / 2.0,
            phase: 0.0,
        };
        assert_eq!(disturbance_at(&spec, 1, 2), vec![1.0, 1.0]);
    }

    #[test]
    fn gaussian_replays() {
        let spec = DisturbanceSpec::Gaussian { sigma: 1.0, seed: 42 };
        let a = disturbance_at(&spec, 5, 4);
        assert_eq!(a, disturbance_at(&spec, 5, 4));
        assert_ne!(a, disturbance_at(&spec, 6, 4));
        let from_thread = std::thread::spawn(move || disturbance_at(&spec, 5, 4)).join().unwrap();
        assert_eq!(a, from_thread);
    }

    #[test]
    fn shock_window() {
        let spec = DisturbanceSpec::Shock {
            inner: Box::new(DisturbanceSpec::Constant(1.0)),
            start: 10,
            end: 20,
        };
        assert_eq!(disturbance_at(&spec, 9, 1), vec![0.0]);
        assert_eq!(disturbance_at(&spec, 10, 1), vec![1.0]);
        assert_eq!(disturbance_at(&spec, 19, 1), vec![1.0]);
        assert_eq!(disturbance_at(&spec, 20, 1), vec![0.0]);
    }
}
