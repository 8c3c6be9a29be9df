use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::result::ExperimentResult;
use super::vent_pipeline::{collect_transitions, random_valves, SimLoss, TrackingPolicy};
use crate::agents::{GpcState, LinearPolicy, MlpParams, OutputMap, Policy, RolloutObjective};
use crate::autodiff::{
    finite_difference_jacobian, gradient_check, gradient_check_with, jacobian, kink_margin, relative_error,
    DiffFunction, Scalar,
};
use crate::config::Config;
use crate::envs::{
    BalloonLung, Cartpole, CostFunction, DisturbanceSpec, Env, LearnedLung, Lds, Pendulum, PendulumParams,
    PlanarQuadrotor, StepFunction,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::random::seeded_rng;

pub const GRADCHECK_TARGETS: [&str; 7] = [
    "pendulum",
    "cartpole",
    "quadrotor",
    "lds",
    "balloon-lung",
    "learned-lung",
    "agents",
];

pub const CHECKS: [&str; 7] = [
    "step_jacobian",
    "cost_gradient",
    "policy_gradient",
    "mlp_params",
    "gpc_proxy",
    "sim_loss",
    "mlp_policy_gradient",
];

/// Sweep settings: central differences with step `eps`, relative tolerance
/// `tol`, points closer than `margin` to a kink are redrawn.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckOptions {
    pub points: usize,
    pub eps: f64,
    pub tol: f64,
    pub margin: f64,
    pub rollout_horizon: usize,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            points: 100,
            eps: 1e-5,
            tol: 1e-4,
            margin: 1e-3,
            rollout_horizon: 10,
        }
    }
}

impl GradcheckOptions {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            points: cfg.usize("gradcheck.points", d.points)?,
            eps: cfg.f64("gradcheck.eps", d.eps)?,
            tol: cfg.f64("gradcheck.tol", d.tol)?,
            margin: cfg.f64("gradcheck.margin", d.margin)?,
            rollout_horizon: cfg.usize("gradcheck.rollout_horizon", d.rollout_horizon)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckRow {
    pub check: usize,
    pub point: usize,
    pub max_rel_error: f64,
    pub kink_margin: f64,
    pub passed: bool,
}

/// Rows of one target's sweep plus how many points each check accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub target: String,
    pub rows: Vec<GradcheckRow>,
    /// Checks that could not find enough interior points.
    pub starved: Vec<usize>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.starved.is_empty() && !self.rows.is_empty() && self.rows.iter().all(|r| r.passed)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.rows.iter().map(|r| r.max_rel_error).fold(0.0, f64::max)
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn boxed(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|&(lo, hi)| uniform(rng, lo, hi)).collect()
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect()
}

/// Draws candidates until `points` of them clear the kink margin, then
/// records one row per accepted point.
fn sweep(
    check: usize,
    opts: &GradcheckOptions,
    rng: &mut ChaCha8Rng,
    rows: &mut Vec<GradcheckRow>,
    starved: &mut Vec<usize>,
    mut candidate: impl FnMut(&mut ChaCha8Rng) -> Result<Option<(f64, f64)>>,
) -> Result<()> {
    let mut accepted = 0;
    let mut attempts = 0;
    while accepted < opts.points && attempts < 50 * opts.points.max(1) {
        attempts += 1;
        if let Some((err, margin)) = candidate(rng)? {
            rows.push(GradcheckRow {
                check,
                point: accepted,
                max_rel_error: err,
                kink_margin: margin,
                passed: err <= opts.tol,
            });
            accepted += 1;
        }
    }
    if accepted < opts.points {
        starved.push(check);
    }
    Ok(())
}

fn step_jacobian_error<E: Env>(env: &E, z: &[f64], eps: f64) -> Result<f64> {
    let f = StepFunction(env);
    let ad = jacobian(&f, z)?;
    let fd = finite_difference_jacobian(|p| f.eval::<f64>(p), z, eps);
    Ok(relative_error(ad.data(), fd.jacobian.data()))
}

/// Step Jacobian, stage-cost gradient and rollout policy gradient of `env`.
fn env_sweep<E, P>(
    env: &E,
    opts: &GradcheckOptions,
    rng: &mut ChaCha8Rng,
    state_box: &[(f64, f64)],
    action_box: &[(f64, f64)],
    mut policy: impl FnMut(&mut ChaCha8Rng) -> Result<P>,
) -> Result<(Vec<GradcheckRow>, Vec<usize>)>
where
    E: Env,
    P: Policy,
{
    let mut rows = Vec::new();
    let mut starved = Vec::new();
    sweep(0, opts, rng, &mut rows, &mut starved, |rng| {
        let mut z = boxed(rng, state_box);
        z.extend(boxed(rng, action_box));
        let margin = kink_margin(&StepFunction(env), &z);
        if margin < opts.margin {
            return Ok(None);
        }
        Ok(Some((step_jacobian_error(env, &z, opts.eps)?, margin)))
    })?;
    sweep(1, opts, rng, &mut rows, &mut starved, |rng| {
        let mut z = boxed(rng, state_box);
        z.extend(boxed(rng, action_box));
        let t = rng.random_range(0..100);
        let f = CostFunction { env, t };
        let margin = kink_margin(&f, &z);
        if margin < opts.margin {
            return Ok(None);
        }
        Ok(Some((gradient_check(&f, &z, opts.eps, opts.tol).max_rel_error, margin)))
    })?;
    sweep(2, opts, rng, &mut rows, &mut starved, |rng| {
        let x0 = boxed(rng, state_box);
        let p = policy(rng)?;
        let objective = RolloutObjective {
            env,
            policy: &p,
            x0: &x0,
            horizon: opts.rollout_horizon,
            disturbance: &DisturbanceSpec::Zero,
        };
        let margin = kink_margin(&objective, p.params());
        if margin < opts.margin {
            return Ok(None);
        }
        Ok(Some((gradient_check(&objective, p.params(), opts.eps, opts.tol).max_rel_error, margin)))
    })?;
    Ok((rows, starved))
}

fn linear_policy(rng: &mut ChaCha8Rng, action_dim: usize, obs_dim: usize, scale: f64) -> LinearPolicy {
    let gain = Matrix::new(action_dim, obs_dim, normal_vec(rng, action_dim * obs_dim, scale)).expect("shape");
    LinearPolicy::from_matrix(&gain)
}

fn lung_policy(rng: &mut ChaCha8Rng, seed: u64) -> Result<TrackingPolicy> {
    let mut p = TrackingPolicy::random(8, Default::default(), seed)?;
    for v in p.params_mut() {
        *v += 0.3 * rng.sample::<f64, _>(rand_distr::StandardNormal);
    }
    Ok(p)
}

/// Agent-side gradient paths: network parameters, the GPC proxy loss, the
/// simulator fitting loss and an MLP policy through the pendulum.
fn agents_sweep(seed: u64, opts: &GradcheckOptions, rng: &mut ChaCha8Rng) -> Result<(Vec<GradcheckRow>, Vec<usize>)> {
    let mut rows = Vec::new();
    let mut starved = Vec::new();

    sweep(3, opts, rng, &mut rows, &mut starved, |rng| {
        let output = match rng.random_range(0..3) {
            0 => OutputMap::Linear,
            1 => OutputMap::TanhScaled(2.0),
            _ => OutputMap::UnitInterval,
        };
        let base = MlpParams::random(&[3, 6, 2], output, seed, rng.random())?;
        let input = boxed(rng, &[(-1.0, 1.0); 3]);
        let f = NetworkSum { net: &base, input };
        let margin = kink_margin(&f, base.params());
        if margin < opts.margin {
            return Ok(None);
        }
        Ok(Some((gradient_check(&f, base.params(), opts.eps, opts.tol).max_rel_error, margin)))
    })?;

    let lds = Lds::double_integrator();
    sweep(4, opts, rng, &mut rows, &mut starved, |rng| {
        let mut gpc = GpcState::with_lqr(lds.a.clone(), lds.b.clone(), lds.q.clone(), lds.r.clone())?;
        for _ in 0..2 * 5 {
            gpc.push_disturbance(normal_vec(rng, 2, 0.5))?;
        }
        let m = normal_vec(rng, gpc.m_params().len(), 0.2);
        gpc.set_m_params(m.clone())?;
        let analytic = gpc.proxy_gradient()?;
        let check = gradient_check_with(
            &analytic,
            |p| {
                let mut g = gpc.clone();
                g.set_m_params(p.to_vec()).expect("same length");
                g.proxy_cost()
            },
            &m,
            opts.eps,
            opts.tol,
        );
        Ok(Some((check.max_rel_error, f64::INFINITY)))
    })?;

    let lung = BalloonLung::default();
    sweep(5, opts, rng, &mut rows, &mut starved, |rng| {
        let data = collect_transitions(&lung, &random_valves(rng.random(), 0, 8, 3));
        let net = MlpParams::random(&[9, 6, 1], OutputMap::Linear, seed, rng.random())?;
        let f = SimLoss {
            sizes: net.sizes(),
            params_len: net.param_count(),
            batch: &data,
        };
        let margin = kink_margin(&f, net.params());
        if margin < opts.margin {
            return Ok(None);
        }
        Ok(Some((gradient_check(&f, net.params(), opts.eps, opts.tol).max_rel_error, margin)))
    })?;

    let pendulum = Pendulum::new(PendulumParams::policy_gradient());
    sweep(6, opts, rng, &mut rows, &mut starved, |rng| {
        let mut policy = MlpParams::random(&[2, 6, 1], OutputMap::TanhScaled(8.0), seed, rng.random())?;
        for v in policy.params_mut() {
            *v += 0.1 * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let x0 = boxed(rng, &[(-2.5, 2.5), (-3.0, 3.0)]);
        let objective = RolloutObjective {
            env: &pendulum,
            policy: &policy,
            x0: &x0,
            horizon: opts.rollout_horizon,
            disturbance: &DisturbanceSpec::Zero,
        };
        let margin = kink_margin(&objective, policy.params());
        if margin < opts.margin {
            return Ok(None);
        }
        Ok(Some((gradient_check(&objective, policy.params(), opts.eps, opts.tol).max_rel_error, margin)))
    })?;
    Ok((rows, starved))
}

/// `Σ_k (k+1)·out_k` as a function of the network parameters.
struct NetworkSum<'a> {
    net: &'a MlpParams,
    input: Vec<f64>,
}

impl DiffFunction for NetworkSum<'_> {
    fn input_dim(&self) -> usize {
        self.net.param_count()
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn eval<S: Scalar>(&self, p: &[S]) -> Vec<S> {
        let x: Vec<S> = self.input.iter().map(|v| S::constant(*v)).collect();
        let mut s = S::zero();
        for (k, o) in self.net.forward_with(p, &x).into_iter().enumerate() {
            s = s + o * (k as f64 + 1.0);
        }
        vec![s]
    }
}

/// Gradient sweep for one named target.
pub fn gradcheck(target: &str, seed: u64, cfg: &Config) -> Result<GradcheckReport> {
    let opts = GradcheckOptions::from_config(cfg)?;
    let index = GRADCHECK_TARGETS
        .iter()
        .position(|t| *t == target)
        .ok_or_else(|| Error::UnknownName {
            name: target.to_string(),
            valid: GRADCHECK_TARGETS.iter().map(|s| s.to_string()).collect(),
        })?;
    let mut rng = seeded_rng(seed, 100 + index as u64);
    let (rows, starved) = match target {
        "pendulum" => {
            let env = Pendulum::from_config(cfg)?;
            let obs = env.spec().observation_dim;
            env_sweep(&env, &opts, &mut rng, &[(-3.0, 3.0), (-4.0, 4.0)], &[(-1.5, 1.5)], |rng| {
                Ok(linear_policy(rng, 1, obs, 0.3))
            })?
        }
        "cartpole" => {
            let env = Cartpole::from_config(cfg)?;
            env_sweep(
                &env,
                &opts,
                &mut rng,
                &[(-1.0, 1.0), (-1.0, 1.0), (-0.3, 0.3), (-1.0, 1.0)],
                &[(-0.8, 0.8)],
                |rng| Ok(linear_policy(rng, 1, 4, 0.2)),
            )?
        }
        "quadrotor" => {
            let env = PlanarQuadrotor::from_config(cfg)?;
            let h = env.params.hover_thrust();
            env_sweep(
                &env,
                &opts,
                &mut rng,
                &[(-1.0, 1.0), (-1.0, 1.0), (-0.5, 0.5), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
                &[(h - 0.3, h + 0.3), (h - 0.3, h + 0.3)],
                |rng| Ok(linear_policy(rng, 2, 6, 0.1)),
            )?
        }
        "lds" => {
            let env = Lds::double_integrator();
            env_sweep(&env, &opts, &mut rng, &[(-2.0, 2.0), (-2.0, 2.0)], &[(-2.0, 2.0)], |rng| {
                Ok(linear_policy(rng, 1, 2, 0.5))
            })?
        }
        "balloon-lung" => {
            let env = BalloonLung::from_config(cfg)?;
            env_sweep(&env, &opts, &mut rng, &[(2.0, 60.0)], &[(0.05, 0.95), (0.05, 0.95)], |rng| {
                lung_policy(rng, seed)
            })?
        }
        "learned-lung" => {
            let env = LearnedLung::untrained(seed);
            let mut bounds = vec![(2.0, 60.0); 3];
            bounds.extend([(0.05, 0.95); 4]);
            env_sweep(&env, &opts, &mut rng, &bounds, &[(0.05, 0.95), (0.05, 0.95)], |rng| {
                lung_policy(rng, seed)
            })?
        }
        _ => agents_sweep(seed, &opts, &mut rng)?,
    };
    Ok(GradcheckReport {
        target: target.to_string(),
        rows,
        starved,
    })
}

/// Pass/fail table of a sweep.
pub fn gradcheck_table(report: &GradcheckReport, seed: u64, cfg: &Config) -> Result<ExperimentResult> {
    let opts = GradcheckOptions::from_config(cfg)?;
    let mut result = ExperimentResult::new(
        &format!("gradcheck-{}", report.target),
        &["check", "point", "max_rel_error", "kink_margin", "passed"],
    );
    for r in &report.rows {
        result.push_row(vec![
            r.check as f64,
            r.point as f64,
            r.max_rel_error,
            r.kink_margin.min(f64::MAX),
            if r.passed { 1.0 } else { 0.0 },
        ])?;
    }
    let codes: Vec<String> = CHECKS.iter().enumerate().map(|(i, c)| format!("{i}={c}")).collect();
    result.set_meta("seed", seed);
    result.set_meta("config_hash", cfg.hash_hex());
    result.set_meta("check_codes", codes.join(";"));
    result.set_meta("eps", opts.eps);
    result.set_meta("tol", opts.tol);
    result.set_meta("kink_margin_min", opts.margin);
    result.set_meta("passed", report.passed());
    result.set_meta("max_rel_error", report.max_rel_error());
    if !report.starved.is_empty() {
        let names: Vec<&str> = report.starved.iter().map(|&c| CHECKS[c]).collect();
        result.set_meta("starved", names.join(";"));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn few() -> Config {
        let mut cfg = Config::new();
        cfg.set("gradcheck.points", "5").unwrap();
        cfg
    }

    #[test]
    fn every_target_passes_on_a_few_points() {
        for target in GRADCHECK_TARGETS {
            let report = gradcheck(target, 1, &few()).unwrap();
            assert!(report.passed(), "{target}: {} {:?}", report.max_rel_error(), report.starved);
        }
    }

    #[test]
    fn unknown_target_lists_valid_names() {
        match gradcheck("nosuch", 0, &few()) {
            Err(Error::UnknownName { valid, .. }) => assert_eq!(valid.len(), GRADCHECK_TARGETS.len()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn table_has_one_row_per_point() {
        let report = gradcheck("pendulum", 0, &few()).unwrap();
        let table = gradcheck_table(&report, 0, &few()).unwrap();
        assert_eq!(table.rows.len(), 15);
    }
}
