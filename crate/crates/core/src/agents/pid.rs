use crate::error::{Error, Result};

/// Discrete PID controller on a scalar error signal.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub dt: f64,
    /// `dt · Σ e` over all errors fed so far.
    pub integral: f64,
    pub prev_error: f64,
}

impl PidState {
    pub fn new(kp: f64, ki: f64, kd: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("PID dt must be positive, got {dt}")));
        }
        Ok(Self {
            kp,
            ki,
            kd,
            dt,
            integral: 0.0,
            prev_error: 0.0,
        })
    }

    /// `u = k_p·e + k_i·(I + dt·e) + k_d·(e − e_prev)/dt`, then accumulates.
    pub fn act(&mut self, error: f64) -> f64 {
        let integral = self.integral + self.dt * error;
        let u = self.kp * error + self.ki * integral + self.kd * (error - self.prev_error) / self.dt;
        self.integral = integral;
        self.prev_error = error;
        u
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.prev_error = 0.0;
    }
}

/// Splits a signed PID output into `(valve_in, valve_out)` for the lung:
/// positive opens the inspiratory valve, negative the expiratory one.
pub fn pid_valves(u: f64) -> [f64; 2] {
    [u.clamp(0.0, 1.0), (-u).clamp(0.0, 1.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional() {
        let mut pid = PidState::new(1.0, 0.0, 0.0, 0.1).unwrap();
        assert_eq!(pid.act(0.7), 0.7);
    }

    #[test]
    fn integral_accumulates() {
        let mut pid = PidState::new(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(pid.act(1.0), 1.0);
        assert_eq!(pid.act(1.0), 2.0);
    }

    #[test]
    fn derivative_of_constant_stream() {
        let mut pid = PidState::new(0.0, 0.0, 1.0, 0.5).unwrap();
        pid.act(3.0);
        for _ in 0..5 {
            assert_eq!(pid.act(3.0), 0.0);
        }
    }

    #[test]
    fn rejects_bad_dt() {
        assert!(PidState::new(1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zero_gains_close_both_valves() {
        let mut pid = PidState::new(0.0, 0.0, 0.0, 0.03).unwrap();
        assert_eq!(pid_valves(pid.act(12.0)), [0.0, 0.0]);
        assert_eq!(pid_valves(0.4), [0.4, 0.0]);
        assert_eq!(pid_valves(-2.0), [0.0, 1.0]);
    }
}
