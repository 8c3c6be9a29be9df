use super::linear::Controller;
use crate::error::{dim_mismatch, Error, Result};

/// Fixed-share multiplicative weights over a set of expert controllers.
///
/// The action is the weight-averaged expert action; the fixed-share floor
/// keeps every expert recoverable after a regime change.
#[derive(Debug, Clone)]
pub struct AdaptiveState<C> {
    pub experts: Vec<C>,
    weights: Vec<f64>,
    pub eta: f64,
    pub share: f64,
}

impl<C: Controller> AdaptiveState<C> {
    /// Uniform weights, `η = 1`, `γ_fs = 0.01`.
    pub fn new(experts: Vec<C>) -> Result<Self> {
        Self::with_rates(experts, 1.0, 0.01)
    }

    pub fn with_rates(experts: Vec<C>, eta: f64, share: f64) -> Result<Self> {
        if experts.is_empty() {
            return Err(Error::InvalidArgument("adaptive controller needs an expert".into()));
        }
        if !(0.0..=1.0).contains(&share) {
            return Err(Error::InvalidArgument(format!("fixed share must lie in [0, 1], got {share}")));
        }
        let n = experts.len();
        Ok(Self {
            experts,
            weights: vec![1.0 / n as f64; n],
            eta,
            share,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Every expert's action at `x`.
    pub fn expert_actions(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.experts.iter().map(|e| e.act(x)).collect()
    }

    /// Weighted average of the expert actions.
    pub fn act(&self, x: &[f64]) -> Result<Vec<f64>> {
        let actions = self.expert_actions(x)?;
        let mut u = vec![0.0; actions[0].len()];
        for (a, w) in actions.iter().zip(&self.weights) {
            for (ui, ai) in u.iter_mut().zip(a) {
                *ui += w * ai;
            }
        }
        Ok(u)
    }

    /// `wᵢ ← wᵢ·exp(−η·costᵢ)`, renormalise, then mix in `γ_fs/N`.
    pub fn update_weights(&mut self, costs: &[f64]) -> Result<()> {
        let n = self.weights.len();
        if costs.len() != n {
            return Err(dim_mismatch(format!("{n} experts, {} costs", costs.len())));
        }
        // shift by the smallest cost so the exponentials cannot all underflow
        let c_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
        for (w, c) in self.weights.iter_mut().zip(costs) {
            *w *= (-self.eta * (c - c_min)).exp();
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w = (1.0 - self.share) * (*w / total) + self.share / n as f64;
        }
        Ok(())
    }

    /// Forwards the observed transition to every expert.
    pub fn update_experts(&mut self, x_prev: &[f64], u_prev: &[f64], x_curr: &[f64]) -> Result<()> {
        for e in &mut self.experts {
            e.update(x_prev, u_prev, x_curr)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::LinearController;
    use crate::linalg::Matrix;

    fn expert(k: f64) -> LinearController {
        LinearController { k: Matrix::scalar(k) }
    }

    #[test]
    fn single_expert_passthrough() {
        let ada = AdaptiveState::new(vec![expert(0.7)]).unwrap();
        assert_eq!(ada.act(&[2.0]).unwrap(), expert(0.7).act(&[2.0]).unwrap());
    }

    #[test]
    fn identical_experts() {
        let mut ada = AdaptiveState::new(vec![expert(0.5), expert(0.5)]).unwrap();
        ada.update_weights(&[0.0, 3.0]).unwrap();
        let u = ada.act(&[4.0]).unwrap();
        assert!((u[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn better_expert_wins() {
        let mut ada = AdaptiveState::new(vec![expert(0.1), expert(0.2)]).unwrap();
        for _ in 0..100 {
            ada.update_weights(&[0.0, 1.0]).unwrap();
        }
        assert!(ada.weights()[0] > 0.9);
    }

    #[test]
    fn simplex_and_floor() {
        let mut ada = AdaptiveState::new(vec![expert(0.1), expert(0.2), expert(0.3)]).unwrap();
        ada.update_weights(&[1e6, 0.0, 5.0]).unwrap();
        let sum: f64 = ada.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(ada.weights().iter().all(|w| *w >= 0.01 / 3.0 - 1e-15));
        assert!(AdaptiveState::<LinearController>::new(vec![]).is_err());
    }
}
