use std::hint::black_box;
use std::time::Instant;

use super::result::{ExperimentResult, WALL_CLOCK_PREFIX};
use crate::config::Config;
use crate::envs::{Env, Pendulum};
use crate::error::Result;

/// Timing of one uninterrupted zero-input rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedRun {
    pub steps: usize,
    pub final_state: Vec<f64>,
    pub seconds: f64,
}

impl TimedRun {
    pub fn ns_per_step(&self) -> f64 {
        self.seconds * 1e9 / self.steps.max(1) as f64
    }
}

/// `steps` plain-real pendulum transitions with `u = 0`, `w = 0` from `x0`.
pub fn time_zero_input(env: &Pendulum, x0: &[f64], steps: usize) -> TimedRun {
    let u = [0.0];
    let w = [0.0, 0.0];
    let mut x = x0.to_vec();
    let start = Instant::now();
    for _ in 0..steps {
        x = env.step(black_box(&x), &u, &w);
    }
    let seconds = start.elapsed().as_secs_f64();
    TimedRun {
        steps,
        final_state: black_box(x),
        seconds,
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Two batches of repetitions agree when their means differ by at most three
/// combined standard deviations.
pub fn stable_within(a: (f64, f64), b: (f64, f64), k: f64) -> bool {
    (a.0 - b.0).abs() <= k * (a.1 * a.1 + b.1 * b.1).sqrt()
}

#[derive(Debug, Clone)]
pub struct ThroughputRun {
    pub startup_seconds: f64,
    pub long: TimedRun,
    pub reps: Vec<TimedRun>,
    pub check_reps: Vec<TimedRun>,
}

impl ThroughputRun {
    /// Per-step time over the main repetitions, ns.
    pub fn per_step(&self) -> (f64, f64) {
        mean_std(&self.reps.iter().map(TimedRun::ns_per_step).collect::<Vec<_>>())
    }

    /// Per-step time over the second batch of repetitions, ns.
    pub fn per_step_check(&self) -> (f64, f64) {
        mean_std(&self.check_reps.iter().map(TimedRun::ns_per_step).collect::<Vec<_>>())
    }

    pub fn equilibrium_preserved(&self, x0: &[f64]) -> bool {
        self.long.final_state == x0 && self.reps.iter().chain(&self.check_reps).all(|r| r.final_state == x0)
    }
}

pub fn throughput(cfg: &Config) -> Result<ThroughputRun> {
    let start = Instant::now();
    let env = Pendulum::from_config(cfg)?;
    let x0 = env.initial_state();
    let startup_seconds = start.elapsed().as_secs_f64();
    let long_steps = cfg.usize("throughput.steps", 10_000_000)?;
    let rep_steps = cfg.usize("throughput.rep_steps", 1_000_000)?;
    let reps = cfg.usize("throughput.reps", 10)?;
    let long = time_zero_input(&env, &x0, long_steps);
    let batch = |_| time_zero_input(&env, &x0, rep_steps);
    Ok(ThroughputRun {
        startup_seconds,
        long,
        reps: (0..reps).map(batch).collect(),
        check_reps: (0..reps).map(batch).collect(),
    })
}

/// Rows hold only the deterministic final states; every timing goes into
/// `wall_clock_*` metadata.
pub fn run_throughput(seed: u64, cfg: &Config) -> Result<ExperimentResult> {
    let run = throughput(cfg)?;
    let mut result = ExperimentResult::new("throughput", &["run", "steps", "theta", "theta_dot"]);
    let all = std::iter::once(&run.long).chain(&run.reps).chain(&run.check_reps);
    for (i, r) in all.enumerate() {
        result.push_row(vec![i as f64, r.steps as f64, r.final_state[0], r.final_state[1]])?;
    }
    let (mean, std) = run.per_step();
    let (check_mean, check_std) = run.per_step_check();
    result.set_meta("seed", seed);
    result.set_meta("config_hash", cfg.hash_hex());
    result.set_meta("run_codes", "0=long;1..=reps main batch;then check batch");
    result.set_meta(&format!("{WALL_CLOCK_PREFIX}_startup_s"), run.startup_seconds);
    result.set_meta(&format!("{WALL_CLOCK_PREFIX}_long_total_s"), run.long.seconds);
    result.set_meta(&format!("{WALL_CLOCK_PREFIX}_long_ns_per_step"), run.long.ns_per_step());
    result.set_meta(&format!("{WALL_CLOCK_PREFIX}_ns_per_step_mean"), mean);
    result.set_meta(&format!("{WALL_CLOCK_PREFIX}_ns_per_step_std"), std);
    result.set_meta(&format!("{WALL_CLOCK_PREFIX}_check_ns_per_step_mean"), check_mean);
    result.set_meta(&format!("{WALL_CLOCK_PREFIX}_check_ns_per_step_std"), check_std);
    result.set_meta(
        &format!("{WALL_CLOCK_PREFIX}_stable_3sigma"),
        stable_within((mean, std), (check_mean, check_std), 3.0),
    );
    Ok(result)
}
