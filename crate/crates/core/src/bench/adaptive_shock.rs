use std::f64::consts::PI;

use rayon::prelude::*;

use super::result::ExperimentResult;
use crate::agents::{ilqr_plan, AdaptiveState, Controller, GpcState, IlqrOptions, LinearController};
use crate::autodiff::{jacobian, Scalar};
use crate::config::Config;
use crate::envs::{disturbance_at, rollout, DisturbanceSpec, Env, Pendulum, PendulumParams, StepFunction};
use crate::error::Result;
use crate::linalg::Matrix;

pub const SCENARIOS: [&str; 2] = ["none", "shock"];
pub const SHOCK_CONTROLLERS: [&str; 7] = ["lqr", "gpc_0.003", "gpc_0.01", "gpc_0.03", "gpc_0.1", "adaptive", "ilqr"];
pub const GPC_RATES: [f64; 4] = [0.003, 0.01, 0.03, 0.1];

/// Index of the stand-alone GPC row with the default rate.
pub const GPC_DEFAULT: usize = 2;

/// Per-step costs of one controller, plus the adaptive weights when present.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockRun {
    pub costs: Vec<f64>,
    /// Weights in force at each step; empty for non-adaptive controllers.
    pub weights: Vec<Vec<f64>>,
}

impl ShockRun {
    pub fn total(&self) -> f64 {
        self.costs.iter().sum()
    }
}

/// Upright pendulum stabilization with a mid-horizon sinusoidal shock.
pub struct ShockSetup {
    pub env: Pendulum,
    pub x0: Vec<f64>,
    pub horizon: usize,
    pub a: Matrix,
    pub b: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub k: Matrix,
    pub gpc_h: usize,
    pub mw_eta: f64,
    pub share: f64,
    pub replan_every: usize,
    /// Extra planning steps beyond each executed segment.
    pub lookahead: usize,
    pub shock: DisturbanceSpec,
}

/// `(wrap(θ), θ̇)`: the coordinates the linearization is valid in.
fn wrapped(x: &[f64]) -> Vec<f64> {
    vec![x[0].wrap_angle(), x[1]]
}

impl ShockSetup {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let env = Pendulum::new(PendulumParams::default().with_overrides(cfg)?);
        let jac = jacobian(&StepFunction(&env), &[0.0, 0.0, 0.0])?;
        let a = Matrix::from_rows(&[[jac[(0, 0)], jac[(0, 1)]], [jac[(1, 0)], jac[(1, 1)]]]);
        let b = Matrix::from_rows(&[[jac[(0, 2)]], [jac[(1, 2)]]]);
        let q = Matrix::from_diag(&[1.0, 0.1]);
        let r = Matrix::scalar(0.001);
        let k = LinearController::lqr(&a, &b, &q, &r)?.k;
        let horizon = cfg.usize("adaptive_shock.horizon", 600)?;
        let period = cfg.f64("adaptive_shock.period", 40.0)?;
        Ok(Self {
            x0: vec![cfg.f64("adaptive_shock.theta0", 0.1)?, 0.0],
            gpc_h: cfg.usize("adaptive_shock.gpc_h", 5)?,
            mw_eta: cfg.f64("adaptive_shock.mw_eta", 1.0)?,
            share: cfg.f64("adaptive_shock.share", 0.01)?,
            replan_every: cfg.usize("adaptive_shock.replan_every", 50)?.max(1),
            lookahead: cfg.usize("adaptive_shock.lookahead", 50)?,
            shock: DisturbanceSpec::Shock {
                inner: Box::new(DisturbanceSpec::Sinusoidal {
                    amplitude: cfg.f64("adaptive_shock.amplitude", 0.02)?,
                    omega: 2.0 * PI / period,
                    phase: 0.0,
                }),
                start: horizon / 3,
                end: 2 * horizon / 3,
            },
            horizon,
            env,
            a,
            b,
            q,
            r,
            k,
        })
    }

    pub fn scenario(&self, index: usize) -> DisturbanceSpec {
        if index == 0 {
            DisturbanceSpec::Zero
        } else {
            self.shock.clone()
        }
    }

    fn gpc(&self, eta0: f64) -> Result<GpcState> {
        GpcState::new(
            self.k.clone(),
            self.a.clone(),
            self.b.clone(),
            self.q.clone(),
            self.r.clone(),
            self.gpc_h,
            eta0,
        )
    }

    fn transition(&self, x: &[f64], u: &[f64], w: &[f64]) -> Vec<f64> {
        self.env.step(x, u, w)
    }

    fn run_controller<C: Controller>(&self, c: &mut C, dist: &DisturbanceSpec) -> Result<ShockRun> {
        let mut x = self.x0.clone();
        let mut costs = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            let z = wrapped(&x);
            let u = c.act(&z)?;
            costs.push(self.env.cost(t, &x, &u));
            let next = self.transition(&x, &u, &disturbance_at(dist, t, 2));
            c.update(&z, &u, &wrapped(&next))?;
            x = next;
        }
        Ok(ShockRun {
            costs,
            weights: Vec::new(),
        })
    }

    /// Experts are scored on the counterfactual next-step cost of their own
    /// action under the realised disturbance.
    fn run_adaptive(&self, dist: &DisturbanceSpec) -> Result<ShockRun> {
        let experts = GPC_RATES.iter().map(|&eta| self.gpc(eta)).collect::<Result<Vec<_>>>()?;
        let mut ada = AdaptiveState::with_rates(experts, self.mw_eta, self.share)?;
        let mut x = self.x0.clone();
        let mut costs = Vec::with_capacity(self.horizon);
        let mut weights = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            let z = wrapped(&x);
            weights.push(ada.weights().to_vec());
            let proposals = ada.expert_actions(&z)?;
            let u = ada.act(&z)?;
            costs.push(self.env.cost(t, &x, &u));
            let w = disturbance_at(dist, t, 2);
            let next = self.transition(&x, &u, &w);
            let expert_costs: Vec<f64> = proposals
                .iter()
                .map(|ui| self.env.cost(t + 1, &self.transition(&x, ui, &w), ui))
                .collect();
            ada.update_weights(&expert_costs)?;
            ada.update_experts(&z, &u, &wrapped(&next))?;
            x = next;
        }
        Ok(ShockRun { costs, weights })
    }

    /// Plans `replan_every + lookahead` steps on the undisturbed model and
    /// executes the first `replan_every` actions open-loop. Each plan is
    /// warm-started from the LQR rollout; a zero start falls into a full-swing
    /// local minimum.
    fn run_ilqr(&self, dist: &DisturbanceSpec) -> Result<ShockRun> {
        let options = IlqrOptions::default();
        let mut x = self.x0.clone();
        let mut costs = Vec::with_capacity(self.horizon);
        let mut t = 0;
        while t < self.horizon {
            let len = self.replan_every.min(self.horizon - t);
            let x_plan = wrapped(&x);
            let lqr = LinearController { k: self.k.clone() };
            let warm = rollout(&self.env, |_, x: &[f64]| lqr.act(&wrapped(x)).unwrap_or_else(|_| vec![0.0]), &x_plan, len + self.lookahead, &DisturbanceSpec::Zero)?;
            let plan = ilqr_plan(&self.env, &x_plan, &warm.actions, &options)?;
            for u in &plan.actions[..len] {
                costs.push(self.env.cost(t, &x, u));
                x = self.transition(&x, u, &disturbance_at(dist, t, 2));
                t += 1;
            }
        }
        Ok(ShockRun {
            costs,
            weights: Vec::new(),
        })
    }

    pub fn run(&self, scenario: usize, controller: usize) -> Result<ShockRun> {
        let dist = self.scenario(scenario);
        match controller {
            0 => self.run_controller(&mut LinearController { k: self.k.clone() }, &dist),
            1..=4 => self.run_controller(&mut self.gpc(GPC_RATES[controller - 1])?, &dist),
            5 => self.run_adaptive(&dist),
            _ => self.run_ilqr(&dist),
        }
    }
}

/// Every `(scenario, controller)` run, indexed `[scenario][controller]`.
pub fn adaptive_shock(cfg: &Config) -> Result<(ShockSetup, Vec<Vec<ShockRun>>)> {
    let setup = ShockSetup::from_config(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..SCENARIOS.len())
        .flat_map(|s| (0..SHOCK_CONTROLLERS.len()).map(move |c| (s, c)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(s, c)| setup.run(s, c))
        .collect::<Result<Vec<_>>>()?;
    let grid = runs.chunks(SHOCK_CONTROLLERS.len()).map(<[ShockRun]>::to_vec).collect();
    Ok((setup, grid))
}

pub fn run_adaptive_shock(seed: u64, cfg: &Config) -> Result<ExperimentResult> {
    let (setup, grid) = adaptive_shock(cfg)?;
    let mut columns = vec!["scenario", "controller", "t", "cost", "cumulative_cost"];
    let weight_names: Vec<String> = (0..GPC_RATES.len()).map(|i| format!("weight_{i}")).collect();
    columns.extend(weight_names.iter().map(String::as_str));
    let mut result = ExperimentResult::new("adaptive-shock", &columns);
    for (s, row) in grid.iter().enumerate() {
        for (c, run) in row.iter().enumerate() {
            let mut cumulative = 0.0;
            for (t, cost) in run.costs.iter().enumerate() {
                cumulative += cost;
                let mut values = vec![s as f64, c as f64, t as f64, *cost, cumulative];
                match run.weights.get(t) {
                    Some(w) => values.extend_from_slice(w),
                    None => values.extend(std::iter::repeat_n(0.0, GPC_RATES.len())),
                }
                result.push_row(values)?;
            }
            result.set_meta(&format!("total_{}_{}", SCENARIOS[s], SHOCK_CONTROLLERS[c]), run.total());
        }
    }
    result.set_meta("seed", seed);
    result.set_meta("config_hash", cfg.hash_hex());
    result.set_meta("scenario_codes", "0=none;1=shock");
    result.set_meta(
        "controller_codes",
        "0=lqr;1=gpc_0.003;2=gpc_0.01;3=gpc_0.03;4=gpc_0.1;5=adaptive;6=ilqr",
    );
    result.set_meta("weights", "adaptive rows only; zero elsewhere");
    result.set_meta("shock_window", format!("[{}, {})", setup.horizon / 3, 2 * setup.horizon / 3));
    Ok(result)
}
