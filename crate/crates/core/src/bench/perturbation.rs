use std::f64::consts::PI;

use rayon::prelude::*;

use super::result::ExperimentResult;
use crate::agents::{Controller, GpcState, LinearController};
use crate::config::Config;
use crate::envs::{disturbance_at, DisturbanceSpec, Env, Lds};
use crate::error::Result;
use crate::linalg::hinf_gamma_threshold;

pub const CONTROLLERS: [&str; 3] = ["lqr", "hinf", "gpc"];
pub const NOISES: [&str; 4] = ["zero", "gaussian", "sinusoidal", "constant"];

/// Per-step costs and final state of one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub costs: Vec<f64>,
    pub max_state_norm: f64,
}

impl ClosedLoopRun {
    pub fn total(&self) -> f64 {
        self.costs.iter().sum()
    }
}

/// Runs `controller` on `env` with online updates after every transition.
pub fn run_closed_loop<C: Controller>(
    env: &Lds,
    controller: &mut C,
    x0: &[f64],
    horizon: usize,
    disturbance: &DisturbanceSpec,
) -> Result<ClosedLoopRun> {
    let n = env.spec().state_dim;
    let mut x = x0.to_vec();
    let mut costs = Vec::with_capacity(horizon);
    let mut max_state_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    for t in 0..horizon {
        let u = controller.act(&x)?;
        costs.push(env.cost(t, &x, &u));
        let w = disturbance_at(disturbance, t, n);
        let next = env.step(&x, &u, &w);
        controller.update(&x, &u, &next)?;
        max_state_norm = max_state_norm.max(next.iter().map(|v| v * v).sum::<f64>().sqrt());
        x = next;
    }
    Ok(ClosedLoopRun {
        costs,
        max_state_norm,
    })
}

pub struct PerturbationSetup {
    pub env: Lds,
    pub x0: Vec<f64>,
    pub horizon: usize,
    pub gamma: f64,
    pub gpc_h: usize,
    pub gpc_eta0: f64,
    pub noises: Vec<DisturbanceSpec>,
}

impl PerturbationSetup {
    pub fn from_config(seed: u64, cfg: &Config) -> Result<Self> {
        let env = Lds::double_integrator();
        let gamma_threshold = hinf_gamma_threshold(&env.a, &env.b, &env.q, &env.r, 1e-6)?;
        let amplitude = cfg.f64("perturbation.amplitude", 0.5)?;
        let period = cfg.f64("perturbation.period", 50.0)?;
        Ok(Self {
            x0: vec![cfg.f64("perturbation.x0", 1.0)?, 0.0],
            horizon: cfg.usize("perturbation.horizon", 500)?,
            gamma: cfg.f64("perturbation.gamma_factor", 1.1)? * gamma_threshold,
            gpc_h: cfg.usize("perturbation.gpc_h", 5)?,
            gpc_eta0: cfg.f64("perturbation.gpc_eta0", 0.01)?,
            noises: vec![
                DisturbanceSpec::Zero,
                DisturbanceSpec::Gaussian {
                    sigma: cfg.f64("perturbation.sigma", 0.5)?,
                    seed,
                },
                DisturbanceSpec::Sinusoidal {
                    amplitude,
                    omega: 2.0 * PI / period,
                    phase: 0.0,
                },
                DisturbanceSpec::Constant(cfg.f64("perturbation.constant", 0.5)?),
            ],
            env,
        })
    }

    fn run(&self, controller: usize, noise: usize) -> Result<ClosedLoopRun> {
        let env = &self.env;
        let noise = &self.noises[noise];
        match controller {
            0 => {
                let mut c = LinearController::lqr(&env.a, &env.b, &env.q, &env.r)?;
                run_closed_loop(env, &mut c, &self.x0, self.horizon, noise)
            }
            1 => {
                let mut c = LinearController::hinf(&env.a, &env.b, &env.q, &env.r, self.gamma)?;
                run_closed_loop(env, &mut c, &self.x0, self.horizon, noise)
            }
            _ => {
                let lqr = LinearController::lqr(&env.a, &env.b, &env.q, &env.r)?;
                let mut c = GpcState::new(
                    lqr.k,
                    env.a.clone(),
                    env.b.clone(),
                    env.q.clone(),
                    env.r.clone(),
                    self.gpc_h,
                    self.gpc_eta0,
                )?;
                run_closed_loop(env, &mut c, &self.x0, self.horizon, noise)
            }
        }
    }
}

/// Every `(controller, noise)` run, indexed `[controller][noise]`.
pub fn perturbation(seed: u64, cfg: &Config) -> Result<(PerturbationSetup, Vec<Vec<ClosedLoopRun>>)> {
    let setup = PerturbationSetup::from_config(seed, cfg)?;
    let jobs: Vec<(usize, usize)> = (0..CONTROLLERS.len())
        .flat_map(|c| (0..NOISES.len()).map(move |n| (c, n)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(c, n)| setup.run(c, n))
        .collect::<Result<Vec<_>>>()?;
    let grid = runs.chunks(NOISES.len()).map(<[ClosedLoopRun]>::to_vec).collect();
    Ok((setup, grid))
}

pub fn run_perturbation(seed: u64, cfg: &Config) -> Result<ExperimentResult> {
    let (setup, grid) = perturbation(seed, cfg)?;
    let mut result = ExperimentResult::new(
        "perturbation",
        &["controller", "noise", "t", "cost", "cumulative_cost"],
    );
    for (c, row) in grid.iter().enumerate() {
        for (n, run) in row.iter().enumerate() {
            let mut cumulative = 0.0;
            for (t, cost) in run.costs.iter().enumerate() {
                cumulative += cost;
                result.push_row(vec![c as f64, n as f64, t as f64, *cost, cumulative])?;
            }
            result.set_meta(
                &format!("total_{}_{}", CONTROLLERS[c], NOISES[n]),
                run.total(),
            );
            result.set_meta(
                &format!("max_state_norm_{}_{}", CONTROLLERS[c], NOISES[n]),
                run.max_state_norm,
            );
        }
    }
    result.set_meta("seed", seed);
    result.set_meta("config_hash", cfg.hash_hex());
    result.set_meta("controller_codes", "0=lqr;1=hinf;2=gpc");
    result.set_meta("noise_codes", "0=zero;1=gaussian;2=sinusoidal;3=constant");
    result.set_meta("gamma", setup.gamma);
    result.set_meta("system", "double integrator A=[[1,1],[0,1]] B=[[0],[1]] Q=I R=I");
    Ok(result)
}
