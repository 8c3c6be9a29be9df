use super::counter::{counted, CallCounter};
use super::result::ExperimentResult;
use crate::agents::{ilqr_plan, IlqrOptions, IlqrPlan, JacMode};
use crate::config::Config;
use crate::envs::PlanarQuadrotor;
use crate::error::{Error, Result};

/// Both plans of the oracle-complexity comparison.
#[derive(Debug, Clone)]
pub struct IlqrOracleRun {
    pub autodiff: IlqrPlan,
    pub finite_diff: IlqrPlan,
    /// Dynamics evaluations seen by the counting wrapper in each mode.
    pub counted_ad: u64,
    pub counted_fd: u64,
}

impl IlqrOracleRun {
    /// Dynamics evaluations per linearization of one trajectory, FD over AD.
    pub fn eval_ratio(&self) -> f64 {
        let per = |p: &IlqrPlan| p.stats.linearization_evals as f64 / p.stats.linearizations as f64;
        per(&self.finite_diff) / per(&self.autodiff)
    }

    /// `‖U_ad − U_fd‖_∞`.
    pub fn action_gap(&self) -> f64 {
        self.autodiff
            .actions
            .iter()
            .flatten()
            .zip(self.finite_diff.actions.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Plans the quadrotor circle-tracking task with autodiff and with
/// finite-difference linearizations from the same hover initialization.
pub fn ilqr_oracle(cfg: &Config) -> Result<IlqrOracleRun> {
    let env = PlanarQuadrotor::from_config(cfg)?;
    let horizon = cfg.usize("ilqr_oracle.horizon", 100)?;
    let eps = cfg.f64("ilqr_oracle.fd_eps", 1e-2)?;
    let base = IlqrOptions {
        max_iter: cfg.usize("ilqr_oracle.max_iter", 50)?,
        tol: cfg.f64("ilqr_oracle.tol", 1e-8)?,
        ..IlqrOptions::default()
    };
    let hover = env.params.hover_thrust();
    let u_init = vec![vec![hover, hover]; horizon];
    let x0 = vec![0.0; 6];

    let run = |mode: JacMode| -> Result<(IlqrPlan, u64)> {
        let counter = CallCounter::new();
        let env = counted(&env, &counter);
        let opts = IlqrOptions {
            jac_mode: mode,
            ..base.clone()
        };
        let plan = ilqr_plan(&env, &x0, &u_init, &opts)?;
        counter.add_gradient_passes(plan.stats.gradient_passes);
        Ok((plan, counter.dynamics_evals()))
    };
    let (autodiff, counted_ad) = run(JacMode::Autodiff)?;
    let (finite_diff, counted_fd) = run(JacMode::FiniteDiff(eps))?;
    for (plan, seen) in [(&autodiff, counted_ad), (&finite_diff, counted_fd)] {
        if plan.stats.dynamics_evals() != seen {
            return Err(Error::InvalidArgument(format!(
                "planner reported {} dynamics evaluations, wrapper counted {seen}",
                plan.stats.dynamics_evals()
            )));
        }
    }
    Ok(IlqrOracleRun {
        autodiff,
        finite_diff,
        counted_ad,
        counted_fd,
    })
}

pub fn run_ilqr_oracle(seed: u64, cfg: &Config) -> Result<ExperimentResult> {
    let run = ilqr_oracle(cfg)?;
    let mut result = ExperimentResult::new(
        "ilqr-oracle",
        &["iteration", "cost_ad", "cost_fd", "evals_ad", "evals_fd"],
    );
    let (ad, fd) = (&run.autodiff.history, &run.finite_diff.history);
    for i in 0..ad.len().max(fd.len()) {
        let a = ad[i.min(ad.len() - 1)];
        let f = fd[i.min(fd.len() - 1)];
        result.push_row(vec![
            i as f64,
            a.cost,
            f.cost,
            a.linearization_evals as f64,
            f.linearization_evals as f64,
        ])?;
    }
    result.set_meta("seed", seed);
    result.set_meta("config_hash", cfg.hash_hex());
    result.set_meta("eval_ratio", run.eval_ratio());
    result.set_meta("action_gap", run.action_gap());
    result.set_meta("iterations_ad", run.autodiff.iterations);
    result.set_meta("iterations_fd", run.finite_diff.iterations);
    result.set_meta("converged_ad", run.autodiff.converged);
    result.set_meta("converged_fd", run.finite_diff.converged);
    result.set_meta("dynamics_evals_ad", run.counted_ad);
    result.set_meta("dynamics_evals_fd", run.counted_fd);
    result.set_meta("gradient_passes_ad", run.autodiff.stats.gradient_passes);
    result.set_meta(
        "eval_accounting",
        "per-step linearization charges 1 eval (AD) or 2(n+m) evals (FD); cost linearizations excluded",
    );
    Ok(result)
}
