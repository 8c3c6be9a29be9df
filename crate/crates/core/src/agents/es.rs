use crate::error::{Error, Result};
use crate::random::keyed_normal;

/// Sampling configuration of the evolution-strategies estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EsOptions {
    pub sigma: f64,
    pub n_samples: usize,
    /// Evaluate `J(π − δ)` as well and use the symmetric difference.
    pub antithetic: bool,
}

impl Default for EsOptions {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            n_samples: 8,
            antithetic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsEstimate {
    pub gradient: Vec<f64>,
    /// Objective evaluations (rollouts) consumed.
    pub evaluations: usize,
}

/// Gaussian-smoothing gradient estimate
/// `ĝ = (1/(nσ²)) Σ_j δ_j · J(π + δ_j)` with `δ_j ~ N(0, σ²I)`.
///
/// Perturbation `j` of update `update` is keyed on
/// `(seed, update·2³² + j, coordinate)`.
pub fn es_gradient_estimate<F>(
    params: &[f64],
    mut objective: F,
    options: &EsOptions,
    seed: u64,
    update: u64,
) -> Result<EsEstimate>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(options.sigma > 0.0) || options.n_samples == 0 {
        return Err(Error::InvalidArgument(format!(
            "ES needs sigma > 0 and at least one sample, got sigma {} and {} samples",
            options.sigma, options.n_samples
        )));
    }
    let d = params.len();
    let sigma = options.sigma;
    let mut gradient = vec![0.0; d];
    let mut evaluations = 0;
    let mut probe = vec![0.0; d];
    for j in 0..options.n_samples {
        let stream = (update << 32) | j as u64;
        let delta: Vec<f64> = (0..d)
            .map(|i| sigma * keyed_normal(seed, stream, i as u64))
            .collect();
        for i in 0..d {
            probe[i] = params[i] + delta[i];
        }
        let mut weight = objective(&probe);
        evaluations += 1;
        if options.antithetic {
            for i in 0..d {
                probe[i] = params[i] - delta[i];
            }
            weight = 0.5 * (weight - objective(&probe));
            evaluations += 1;
        }
        for i in 0..d {
            gradient[i] += delta[i] * weight;
        }
    }
    let scale = 1.0 / (options.n_samples as f64 * sigma * sigma);
    for g in &mut gradient {
        *g *= scale;
    }
    Ok(EsEstimate {
        gradient,
        evaluations,
    })
}
