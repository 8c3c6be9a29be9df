use std::time::Instant;

use super::result::{ExperimentResult, WALL_CLOCK_PREFIX};
use super::{run_adaptive_shock, run_ilqr_oracle, run_perturbation, run_pg_oracle, run_throughput, run_vent_pipeline};
use crate::config::Config;
use crate::error::{Error, Result};

pub const EXPERIMENTS: [&str; 6] = [
    "ilqr-oracle",
    "pg-oracle",
    "perturbation",
    "adaptive-shock",
    "vent-pipeline",
    "throughput",
];

/// Environment variable capping the worker threads used by experiments.
pub const THREADS_VAR: &str = "DIFFCTL_THREADS";

/// Fails with the list of valid names unless `name` is a known experiment.
pub fn check_experiment(name: &str) -> Result<()> {
    if EXPERIMENTS.contains(&name) {
        Ok(())
    } else {
        Err(Error::UnknownName {
            name: name.to_string(),
            valid: EXPERIMENTS.iter().map(|s| s.to_string()).collect(),
        })
    }
}

/// Worker count from `DIFFCTL_THREADS`, defaulting to the available cores.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::InvalidArgument(format!("{THREADS_VAR} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs the named experiment inside a pool of [`thread_count`] workers and
/// stamps its elapsed time as wall-clock metadata.
pub fn run_experiment(name: &str, seed: u64, cfg: &Config) -> Result<ExperimentResult> {
    check_experiment(name)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut result = pool.install(|| match name {
        "ilqr-oracle" => run_ilqr_oracle(seed, cfg),
        "pg-oracle" => run_pg_oracle(seed, cfg),
        "perturbation" => run_perturbation(seed, cfg),
        "adaptive-shock" => run_adaptive_shock(seed, cfg),
        "vent-pipeline" => run_vent_pipeline(seed, cfg),
        _ => run_throughput(seed, cfg),
    })?;
    result.set_meta(&format!("{WALL_CLOCK_PREFIX}_seconds"), start.elapsed().as_secs_f64());
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_experiment_lists_all_names() {
        match run_experiment("nosuch", 0, &Config::new()) {
            Err(Error::UnknownName { name, valid }) => {
                assert_eq!(name, "nosuch");
                assert_eq!(valid, EXPERIMENTS.map(String::from).to_vec());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stamps_wall_clock() {
        let mut cfg = Config::new();
        cfg.set("throughput.steps", "100").unwrap();
        cfg.set("throughput.rep_steps", "10").unwrap();
        cfg.set("throughput.reps", "2").unwrap();
        let r = run_experiment("throughput", 0, &cfg).unwrap();
        assert!(r.meta(&format!("{WALL_CLOCK_PREFIX}_seconds")).is_some());
    }
}
