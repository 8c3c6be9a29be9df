use rayon::prelude::*;

use super::result::ExperimentResult;
use crate::agents::{pid_valves, Adam, MlpParams, OutputMap, PidState, Policy, RolloutObjective};
use crate::autodiff::{grad, DiffFunction, Scalar};
use crate::config::Config;
use crate::envs::{learned_pressure, BalloonLung, DisturbanceSpec, Env, LearnedLung, PressureTarget, PRESSURE_SCALE};
use crate::error::{Error, Result};
use crate::random::keyed_uniform;

pub const PHASE_SIM_TRAIN: f64 = 0.0;
pub const PHASE_SIM_HELDOUT: f64 = 1.0;
pub const PHASE_OPEN_LOOP: f64 = 2.0;
pub const PHASE_CONTROLLER_TRAIN: f64 = 3.0;
pub const PHASE_EVAL: f64 = 4.0;

pub const EVAL_CONTROLLERS: [&str; 5] = ["zero", "pid", "pid_zero_gains", "learned_init", "learned_trained"];

const STREAM_EXPLORE: u64 = 1;
const STREAM_OPEN_LOOP: u64 = 2;
const STREAM_SIM_INIT: u64 = 3;
const STREAM_CONTROLLER_INIT: u64 = 4;

/// One simulator training example: history state, valves, next pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub x: [f64; 7],
    pub u: [f64; 2],
    pub next: f64,
}

impl Transition {
    pub fn delta(&self) -> f64 {
        self.next - self.x[2]
    }
}

/// Piecewise-constant uniform valve settings, redrawn every `hold` steps.
pub fn random_valves(seed: u64, stream: u64, steps: usize, hold: usize) -> Vec<[f64; 2]> {
    let hold = hold.max(1);
    (0..steps)
        .map(|t| {
            let k = (t / hold) as u64;
            [keyed_uniform(seed, stream, 2 * k), keyed_uniform(seed, stream, 2 * k + 1)]
        })
        .collect()
}

/// History-state transitions of `lung` driven by `valves` from rest at PEEP.
pub fn collect_transitions(lung: &BalloonLung, valves: &[[f64; 2]]) -> Vec<Transition> {
    let peep = lung.params.peep;
    let mut x = LearnedLung::rest_state(peep);
    let mut p = peep;
    let mut out = Vec::with_capacity(valves.len());
    for u in valves {
        let next = lung.step(&[p], u, &[0.0])[0];
        out.push(Transition {
            x: x.clone().try_into().expect("history state has 7 entries"),
            u: *u,
            next,
        });
        x = vec![x[1], x[2], next, x[5], x[6], u[0], u[1]];
        p = next;
    }
    out
}

/// Splits off every `k`-th transition as held-out data.
pub fn split_heldout(data: &[Transition], k: usize) -> (Vec<Transition>, Vec<Transition>) {
    let k = k.max(2);
    let mut train = Vec::new();
    let mut heldout = Vec::new();
    for (i, tr) in data.iter().enumerate() {
        if i % k == k - 1 {
            heldout.push(tr.clone());
        } else {
            train.push(tr.clone());
        }
    }
    (train, heldout)
}

/// Sum over a batch of squared scaled one-step errors.
pub(crate) struct SimLoss<'a> {
    pub sizes: &'a [usize],
    pub params_len: usize,
    pub batch: &'a [Transition],
}

impl DiffFunction for SimLoss<'_> {
    fn input_dim(&self) -> usize {
        self.params_len
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn eval<S: Scalar>(&self, params: &[S]) -> Vec<S> {
        let mut total = S::zero();
        for tr in self.batch {
            let x: Vec<S> = tr.x.iter().map(|v| S::constant(*v)).collect();
            let u = [S::constant(tr.u[0]), S::constant(tr.u[1])];
            let pred = learned_pressure(self.sizes, |i| params[i], &x, &u);
            total = total + ((pred - tr.next) * (1.0 / PRESSURE_SCALE)).square();
        }
        vec![total]
    }
}

/// Mean squared one-step prediction error in pressure units.
pub fn sim_mse(net: &MlpParams, data: &[Transition]) -> f64 {
    let total: f64 = data
        .iter()
        .map(|tr| {
            let pred = learned_pressure(net.sizes(), |i| net.params()[i], &tr.x, &tr.u);
            (pred - tr.next).powi(2)
        })
        .sum();
    total / data.len().max(1) as f64
}

/// Full-batch gradient of the mean scaled loss, summed over fixed chunks in
/// chunk order so the result does not depend on the thread count.
fn sim_gradient(net: &MlpParams, data: &[Transition], chunk: usize) -> Result<Vec<f64>> {
    let parts = data
        .par_chunks(chunk.max(1))
        .map(|batch| {
            let loss = SimLoss {
                sizes: net.sizes(),
                params_len: net.param_count(),
                batch,
            };
            grad(&loss, net.params()).map(|(_, g)| g)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![0.0; net.param_count()];
    for g in parts {
        for (t, v) in total.iter_mut().zip(g) {
            *t += v;
        }
    }
    let n = data.len().max(1) as f64;
    Ok(total.into_iter().map(|v| v / n).collect())
}

/// Fits the learned simulator by full-batch Adam; returns per-epoch train MSE.
pub fn fit_simulator(net: &mut MlpParams, data: &[Transition], epochs: usize, lr: f64) -> Result<Vec<f64>> {
    let mut adam = Adam::new(net.param_count(), lr);
    let mut curve = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let g = sim_gradient(net, data, 256)?;
        let mut params = net.params().to_vec();
        adam.step(&mut params, &g);
        net.params_mut().copy_from_slice(&params);
        let mse = sim_mse(net, data);
        if !mse.is_finite() {
            return Err(Error::TrainingDiverged(format!("simulator MSE {mse} at epoch {epoch}")));
        }
        curve.push(mse);
    }
    Ok(curve)
}

/// Pressure-tracking network on `(target − p, p, target) / scale` with valve
/// outputs in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TrackingPolicy {
    pub net: MlpParams,
    pub target: PressureTarget,
}

impl TrackingPolicy {
    pub fn random(hidden: usize, target: PressureTarget, seed: u64) -> Result<Self> {
        Ok(Self {
            net: MlpParams::random(&[3, hidden, 2], OutputMap::UnitInterval, seed, STREAM_CONTROLLER_INIT)?,
            target,
        })
    }
}

impl Policy for TrackingPolicy {
    fn params(&self) -> &[f64] {
        self.net.params()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.net.params_mut()
    }

    fn act_with<S: Scalar>(&self, params: &[S], t: usize, obs: &[S]) -> Vec<S> {
        let target = self.target.at(t);
        let p = obs[0];
        let s = 1.0 / PRESSURE_SCALE;
        let features = [(-p + target) * s, p * s, S::constant(target * s)];
        self.net.forward_with(params, &features)
    }
}

/// Trains `policy` through the learned simulator with Adam; returns the
/// learned-simulator cost before each update.
pub fn train_controller(
    policy: &mut TrackingPolicy,
    sim: &LearnedLung,
    horizon: usize,
    steps: usize,
    lr: f64,
) -> Result<Vec<f64>> {
    let x0 = sim.initial_state();
    let mut adam = Adam::new(policy.params().len(), lr);
    let mut curve = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (cost, g) = {
            let objective = RolloutObjective {
                env: sim,
                policy: &*policy,
                x0: &x0,
                horizon,
                disturbance: &DisturbanceSpec::Zero,
            };
            grad(&objective, policy.params())?
        };
        if !cost.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::TrainingDiverged(format!("controller cost {cost}")));
        }
        curve.push(cost);
        let mut params = policy.params().to_vec();
        adam.step(&mut params, &g);
        policy.params_mut().copy_from_slice(&params);
    }
    Ok(curve)
}

/// Tracking cost on `lung` of valves chosen by `act(t, p)`.
pub fn tracking_cost(lung: &BalloonLung, horizon: usize, mut act: impl FnMut(usize, f64) -> [f64; 2]) -> f64 {
    let mut p = lung.initial_state()[0];
    let mut total = 0.0;
    for t in 0..horizon {
        let u = act(t, p);
        total += lung.cost(t, &[p], &u);
        p = lung.step(&[p], &u, &[0.0])[0];
    }
    total
}

#[derive(Debug, Clone)]
pub struct VentSetup {
    pub lung: BalloonLung,
    pub explore_steps: usize,
    pub hold: usize,
    pub heldout_every: usize,
    pub sim_epochs: usize,
    pub sim_lr: f64,
    pub open_loop_steps: usize,
    pub controller_hidden: usize,
    pub controller_steps: usize,
    pub controller_lr: f64,
    pub horizon: usize,
    pub pid_gains: [f64; 3],
}

impl VentSetup {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        Ok(Self {
            lung: BalloonLung::from_config(cfg)?,
            explore_steps: cfg.usize("vent.explore_steps", 2000)?,
            hold: cfg.usize("vent.hold", 3)?,
            heldout_every: cfg.usize("vent.heldout_every", 5)?,
            sim_epochs: cfg.usize("vent.sim_epochs", 500)?,
            sim_lr: cfg.f64("vent.sim_lr", 0.01)?,
            open_loop_steps: cfg.usize("vent.open_loop_steps", 300)?,
            controller_hidden: cfg.usize("vent.controller_hidden", 16)?,
            controller_steps: cfg.usize("vent.controller_steps", 150)?,
            controller_lr: cfg.f64("vent.controller_lr", 0.02)?,
            horizon: cfg.usize("vent.horizon", 300)?,
            pid_gains: [
                cfg.f64("vent.pid_kp", 0.05)?,
                cfg.f64("vent.pid_ki", 1.0)?,
                cfg.f64("vent.pid_kd", 0.0)?,
            ],
        })
    }
}

/// Everything the pipeline measures.
#[derive(Debug, Clone)]
pub struct VentRun {
    pub sim_train_curve: Vec<f64>,
    pub heldout_mse: f64,
    pub delta_variance: f64,
    pub open_loop_error: Vec<f64>,
    pub controller_curve: Vec<f64>,
    /// True-lung tracking cost per entry of [`EVAL_CONTROLLERS`].
    pub eval_costs: Vec<f64>,
    pub simulator: LearnedLung,
    pub controller: TrackingPolicy,
}

fn variance(values: &[f64]) -> f64 {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

fn pid_cost(setup: &VentSetup, gains: [f64; 3]) -> Result<f64> {
    let lung = &setup.lung;
    let mut pid = PidState::new(gains[0], gains[1], gains[2], lung.params.dt)?;
    Ok(tracking_cost(lung, setup.horizon, |t, p| pid_valves(pid.act(lung.target.at(t) - p))))
}

fn policy_cost(setup: &VentSetup, policy: &TrackingPolicy) -> f64 {
    tracking_cost(&setup.lung, setup.horizon, |t, p| {
        let u = policy.act(t, &[p]);
        [u[0], u[1]]
    })
}

pub fn vent_pipeline(seed: u64, setup: &VentSetup) -> Result<VentRun> {
    let lung = &setup.lung;
    let valves = random_valves(seed, STREAM_EXPLORE, setup.explore_steps, setup.hold);
    let data = collect_transitions(lung, &valves);
    let (train, heldout) = split_heldout(&data, setup.heldout_every);

    let mut net = MlpParams::random(&LearnedLung::SIZES, OutputMap::Linear, seed, STREAM_SIM_INIT)?;
    let sim_train_curve = fit_simulator(&mut net, &train, setup.sim_epochs, setup.sim_lr)?;
    let heldout_mse = sim_mse(&net, &heldout);
    let deltas: Vec<f64> = heldout.iter().map(Transition::delta).collect();
    let delta_variance = variance(&deltas);
    let simulator = LearnedLung::new(net, lung.target.clone())?;

    let probe = random_valves(seed, STREAM_OPEN_LOOP, setup.open_loop_steps, setup.hold);
    let mut p_true = lung.initial_state()[0];
    let mut x_sim = simulator.initial_state();
    let zero7 = [0.0; 7];
    let open_loop_error = probe
        .iter()
        .map(|u| {
            p_true = lung.step(&[p_true], u, &[0.0])[0];
            x_sim = simulator.step(&x_sim, u, &zero7);
            (x_sim[2] - p_true).abs()
        })
        .collect();

    let initial = TrackingPolicy::random(setup.controller_hidden, lung.target.clone(), seed)?;
    let mut controller = initial.clone();
    let controller_curve = train_controller(
        &mut controller,
        &simulator,
        setup.horizon,
        setup.controller_steps,
        setup.controller_lr,
    )?;

    let eval_costs = vec![
        tracking_cost(lung, setup.horizon, |_, _| [0.0, 0.0]),
        pid_cost(setup, setup.pid_gains)?,
        pid_cost(setup, [0.0; 3])?,
        policy_cost(setup, &initial),
        policy_cost(setup, &controller),
    ];
    Ok(VentRun {
        sim_train_curve,
        heldout_mse,
        delta_variance,
        open_loop_error,
        controller_curve,
        eval_costs,
        simulator,
        controller,
    })
}

pub fn run_vent_pipeline(seed: u64, cfg: &Config) -> Result<ExperimentResult> {
    let setup = VentSetup::from_config(cfg)?;
    let run = vent_pipeline(seed, &setup)?;
    let mut result = ExperimentResult::new("vent-pipeline", &["phase", "step", "metric"]);
    for (i, mse) in run.sim_train_curve.iter().enumerate() {
        result.push_row(vec![PHASE_SIM_TRAIN, i as f64, *mse])?;
    }
    result.push_row(vec![PHASE_SIM_HELDOUT, setup.sim_epochs as f64, run.heldout_mse])?;
    for (i, e) in run.open_loop_error.iter().enumerate() {
        result.push_row(vec![PHASE_OPEN_LOOP, i as f64, *e])?;
    }
    for (i, c) in run.controller_curve.iter().enumerate() {
        result.push_row(vec![PHASE_CONTROLLER_TRAIN, i as f64, *c])?;
    }
    for (i, c) in run.eval_costs.iter().enumerate() {
        result.push_row(vec![PHASE_EVAL, i as f64, *c])?;
        result.set_meta(&format!("eval_{}", EVAL_CONTROLLERS[i]), c);
    }
    result.set_meta("seed", seed);
    result.set_meta("config_hash", cfg.hash_hex());
    result.set_meta(
        "phase_codes",
        "0=sim_train_mse;1=sim_heldout_mse;2=open_loop_abs_error;3=controller_sim_cost;4=true_lung_tracking_cost",
    );
    result.set_meta(
        "eval_codes",
        "0=zero;1=pid;2=pid_zero_gains;3=learned_init;4=learned_trained",
    );
    result.set_meta("heldout_mse", run.heldout_mse);
    result.set_meta("delta_variance", run.delta_variance);
    result.set_meta(
        "open_loop_mean_error",
        run.open_loop_error.iter().sum::<f64>() / run.open_loop_error.len().max(1) as f64,
    );
    result.set_meta(
        "pid_gains",
        format!("{},{},{}", setup.pid_gains[0], setup.pid_gains[1], setup.pid_gains[2]),
    );
    Ok(result)
}
