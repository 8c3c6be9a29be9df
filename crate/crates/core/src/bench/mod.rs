//! Experiment harness: call counting, the experiments and tabular results.

mod adaptive_shock;
mod counter;
mod gradcheck;
mod ilqr_oracle;
mod perturbation;
mod pg_oracle;
mod registry;
mod result;
mod throughput;
mod vent_pipeline;

pub use adaptive_shock::{
    adaptive_shock, run_adaptive_shock, ShockRun, ShockSetup, GPC_DEFAULT, GPC_RATES, SCENARIOS, SHOCK_CONTROLLERS,
};
pub use counter::{counted, CallCounter, CallCounts, Counted};
pub use gradcheck::{
    gradcheck, gradcheck_table, GradcheckOptions, GradcheckReport, GradcheckRow, CHECKS, GRADCHECK_TARGETS,
};
pub use ilqr_oracle::{ilqr_oracle, run_ilqr_oracle, IlqrOracleRun};
pub use perturbation::{perturbation, run_closed_loop, run_perturbation, ClosedLoopRun, PerturbationSetup};
pub use pg_oracle::{pg_oracle, run_pg_oracle, train_deterministic, train_es, PgPoint, PgSetup, PgTrainingRun};
pub use registry::{check_experiment, run_experiment, thread_count, EXPERIMENTS, THREADS_VAR};
pub use result::{strip_wall_clock, ExperimentResult, WALL_CLOCK_PREFIX};
pub use vent_pipeline::{
    collect_transitions, fit_simulator, random_valves, run_vent_pipeline, sim_mse, split_heldout, tracking_cost,
    train_controller, vent_pipeline, TrackingPolicy, Transition, VentRun, VentSetup, EVAL_CONTROLLERS,
};
pub use throughput::{mean_std, run_throughput, stable_within, throughput, time_zero_input, ThroughputRun, TimedRun};
