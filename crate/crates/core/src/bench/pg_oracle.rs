use super::counter::{counted, CallCounter};
use super::result::ExperimentResult;
use crate::agents::{es_gradient_estimate, policy_gradient_step, EsOptions, LinearPolicy, Policy, RolloutObjective};
use crate::linalg::Matrix;
use crate::config::Config;
use crate::envs::{DisturbanceSpec, Env, Pendulum, PendulumParams};
use crate::error::Result;

pub const METHOD_DETERMINISTIC: f64 = 0.0;
pub const METHOD_ES: f64 = 1.0;

/// One training curve point: cost of the policy before update `update`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgPoint {
    pub update: usize,
    pub dynamics_evals: u64,
    pub rollouts: u64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgTrainingRun {
    pub deterministic: Vec<PgPoint>,
    pub es: Vec<PgPoint>,
    pub final_deterministic: Vec<f64>,
    pub final_es: Vec<f64>,
}

pub struct PgSetup {
    pub env: Pendulum,
    pub x0: Vec<f64>,
    pub horizon: usize,
    pub steps: usize,
    pub lr: f64,
    pub es: EsOptions,
}

impl PgSetup {
    /// Swing-up from hanging, torque limit 10, angle observation.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let env = Pendulum::new(PendulumParams::policy_gradient().with_overrides(cfg)?);
        Ok(Self {
            x0: env.initial_state(),
            env,
            horizon: cfg.usize("pg_oracle.horizon", 200)?,
            steps: cfg.usize("pg_oracle.steps", 500)?,
            lr: cfg.f64("pg_oracle.lr", 0.01)?,
            es: EsOptions {
                sigma: cfg.f64("pg_oracle.sigma", 0.1)?,
                n_samples: cfg.usize("pg_oracle.es_samples", 8)?,
                antithetic: cfg.usize("pg_oracle.antithetic", 0)? != 0,
            },
        })
    }

    fn rollout_cost(&self, policy: &LinearPolicy) -> f64 {
        RolloutObjective {
            env: &self.env,
            policy,
            x0: &self.x0,
            horizon: self.horizon,
            disturbance: &DisturbanceSpec::Zero,
        }
        .cost()
    }
}

/// Deterministic policy gradient from the zero policy.
pub fn train_deterministic(setup: &PgSetup) -> Result<(Vec<PgPoint>, LinearPolicy)> {
    let counter = CallCounter::new();
    let env = counted(&setup.env, &counter);
    let mut policy = LinearPolicy::zeros(1, 2);
    let mut curve = Vec::with_capacity(setup.steps + 1);
    for update in 0..setup.steps {
        let step = policy_gradient_step(&mut policy, &env, &setup.x0, setup.horizon, setup.lr, &DisturbanceSpec::Zero)?;
        counter.add_rollouts(1);
        counter.add_gradient_passes(1);
        curve.push(PgPoint {
            update,
            dynamics_evals: counter.dynamics_evals(),
            rollouts: counter.rollouts(),
            cost: step.cost,
        });
    }
    curve.push(PgPoint {
        update: setup.steps,
        dynamics_evals: counter.dynamics_evals(),
        rollouts: counter.rollouts(),
        cost: setup.rollout_cost(&policy),
    });
    Ok((curve, policy))
}

/// Evolution-strategies training from the zero policy; the reported cost is
/// evaluated outside the counted budget.
pub fn train_es(setup: &PgSetup, seed: u64) -> Result<(Vec<PgPoint>, LinearPolicy)> {
    let counter = CallCounter::new();
    let env = counted(&setup.env, &counter);
    let mut policy = LinearPolicy::zeros(1, 2);
    let mut curve = Vec::with_capacity(setup.steps + 1);
    for update in 0..setup.steps {
        let cost = setup.rollout_cost(&policy);
        let estimate = es_gradient_estimate(
            policy.params(),
            |p| {
                let probe = LinearPolicy::from_matrix(
                    &Matrix::new(1, 2, p.to_vec()).expect("1×2 policy"),
                );
                RolloutObjective {
                    env: &env,
                    policy: &probe,
                    x0: &setup.x0,
                    horizon: setup.horizon,
                    disturbance: &DisturbanceSpec::Zero,
                }
                .cost()
            },
            &setup.es,
            seed,
            update as u64,
        )?;
        counter.add_rollouts(estimate.evaluations as u64);
        for (p, g) in policy.params_mut().iter_mut().zip(&estimate.gradient) {
            *p -= setup.lr * g;
        }
        curve.push(PgPoint {
            update,
            dynamics_evals: counter.dynamics_evals(),
            rollouts: counter.rollouts(),
            cost,
        });
    }
    curve.push(PgPoint {
        update: setup.steps,
        dynamics_evals: counter.dynamics_evals(),
        rollouts: counter.rollouts(),
        cost: setup.rollout_cost(&policy),
    });
    Ok((curve, policy))
}

pub fn pg_oracle(seed: u64, cfg: &Config) -> Result<PgTrainingRun> {
    let setup = PgSetup::from_config(cfg)?;
    let (deterministic, det_policy) = train_deterministic(&setup)?;
    let (es, es_policy) = train_es(&setup, seed)?;
    Ok(PgTrainingRun {
        deterministic,
        es,
        final_deterministic: det_policy.params().to_vec(),
        final_es: es_policy.params().to_vec(),
    })
}

pub fn run_pg_oracle(seed: u64, cfg: &Config) -> Result<ExperimentResult> {
    let run = pg_oracle(seed, cfg)?;
    let mut result = ExperimentResult::new(
        "pg-oracle",
        &["method", "update", "dynamics_evals", "rollouts", "cost"],
    );
    for (method, curve) in [(METHOD_DETERMINISTIC, &run.deterministic), (METHOD_ES, &run.es)] {
        for p in curve {
            result.push_row(vec![
                method,
                p.update as f64,
                p.dynamics_evals as f64,
                p.rollouts as f64,
                p.cost,
            ])?;
        }
    }
    result.set_meta("seed", seed);
    result.set_meta("config_hash", cfg.hash_hex());
    result.set_meta("method_codes", "0=deterministic;1=es");
    result.set_meta("policy_deterministic", format!("{:?}", run.final_deterministic));
    result.set_meta("policy_es", format!("{:?}", run.final_es));
    Ok(result)
}
