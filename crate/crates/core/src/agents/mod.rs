//! Controllers, trajectory optimisation and policy learning.

mod adam;
mod adaptive;
mod es;
mod gpc;
mod ilqr;
mod linear;
mod mlp;
mod pid;
mod policy;

pub use adam::Adam;
pub use adaptive::AdaptiveState;
pub use es::{es_gradient_estimate, EsEstimate, EsOptions};
pub use gpc::{gpc_act, GpcState};
pub use ilqr::{ilqr_plan, IlqrIteration, IlqrOptions, IlqrPlan, IlqrStats, JacMode, Termination};
pub use linear::{lqr_act, Controller, LinearController};
pub use mlp::{mlp_forward, mlp_param_count, MlpParams, OutputMap};
pub use pid::{pid_valves, PidState};
pub use policy::{policy_gradient_step, LinearPolicy, PgStep, Policy, RolloutObjective};
