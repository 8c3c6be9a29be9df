use crate::error::{dim_mismatch, Result};
use crate::linalg::{hinf_gain, lqr_gain, Matrix};

/// State-feedback action `u = −K·x`.
pub fn lqr_act(k: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != k.cols() {
        return Err(dim_mismatch(format!(
            "gain {:?} applied to a {}-vector",
            k.shape(),
            x.len()
        )));
    }
    Ok(k.mul_vec(x).into_iter().map(|v| -v).collect())
}

/// Online controller interface shared by the reactive agents.
pub trait Controller {
    fn act(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Observes the transition `x_prev --u_prev--> x_curr`.
    fn update(&mut self, _x_prev: &[f64], _u_prev: &[f64], _x_curr: &[f64]) -> Result<()> {
        Ok(())
    }
}

/// Fixed linear feedback `u = −K·x` (LQR, or H∞ with a game-theoretic gain).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearController {
    pub k: Matrix,
}

impl LinearController {
    pub fn lqr(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Self> {
        Ok(Self {
            k: lqr_gain(a, b, q, r)?,
        })
    }

    pub fn hinf(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, gamma: f64) -> Result<Self> {
        Ok(Self {
            k: hinf_gain(a, b, q, r, gamma, 1e-10, 100_000)?,
        })
    }
}

impl Controller for LinearController {
    fn act(&self, x: &[f64]) -> Result<Vec<f64>> {
        lqr_act(&self.k, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_actions() {
        let k = Matrix::zeros(1, 2);
        assert_eq!(lqr_act(&k, &[3.0, -1.0]).unwrap(), vec![0.0]);
        let k = Matrix::from_rows(&[[1.0, 2.0]]);
        assert_eq!(lqr_act(&k, &[0.0, 0.0]).unwrap(), vec![0.0]);
        assert!(lqr_act(&k, &[1.0]).is_err());
    }

    #[test]
    fn golden_ratio_gain() {
        let one = Matrix::identity(1);
        let c = LinearController::lqr(&one, &one, &one, &one).unwrap();
        let u = c.act(&[2.0]).unwrap();
        let expected = -2.0 * (5f64.sqrt() - 1.0) / 2.0;
        assert!((u[0] - expected).abs() < 1e-9);
    }
}
