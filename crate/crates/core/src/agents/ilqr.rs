use crate::autodiff::{finite_difference_jacobian, jacobian_with, DiffFunction, JacobianMode};
use crate::envs::{Env, ResidualFunction, StepFunction};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::Matrix;

/// How iLQR linearizes the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JacMode {
    /// One recorded evaluation plus derivative sweeps per step.
    Autodiff,
    /// Central differences with step `ε`: `2·(n + m)` evaluations per step.
    FiniteDiff(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlqrOptions {
    pub max_iter: usize,
    /// Relative cost-improvement threshold.
    pub tol: f64,
    pub jac_mode: JacMode,
    pub lambda_init: f64,
    /// Below this the regularization is switched off entirely.
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Line search tries `α = 2⁻ᵏ` for `k = 0..=max_halvings`.
    pub max_halvings: u32,
}

impl Default for IlqrOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-6,
            jac_mode: JacMode::Autodiff,
            lambda_init: 1e-6,
            lambda_min: 1e-6,
            lambda_max: 1e10,
            max_halvings: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIter,
    /// No step size decreased the cost even at `λ_max`.
    LineSearchFailed,
}

/// Dynamics-function work done by one planning call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IlqrStats {
    /// Dynamics evaluations spent on linearizations.
    pub linearization_evals: u64,
    /// Dynamics evaluations spent on rollouts and line searches.
    pub rollout_evals: u64,
    /// Tangent or adjoint sweeps over recorded tapes.
    pub gradient_passes: u64,
    pub linearizations: u64,
}

impl IlqrStats {
    pub fn dynamics_evals(&self) -> u64 {
        self.linearization_evals + self.rollout_evals
    }
}

/// Cost after an accepted iteration (iteration 0 is the initial rollout).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlqrIteration {
    pub iteration: usize,
    pub cost: f64,
    pub linearization_evals: u64,
    pub dynamics_evals: u64,
}

/// Locally optimal trajectory with its time-varying affine feedback
/// `u_t = U_t + k_t + K_t·(x_t − X_t)`.
#[derive(Debug, Clone)]
pub struct IlqrPlan {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub feedback: Vec<Matrix>,
    pub feedforward: Vec<Vec<f64>>,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    pub history: Vec<IlqrIteration>,
    pub stats: IlqrStats,
}

impl IlqrPlan {
    /// Closed-loop action at step `t` for the actual state `x`.
    pub fn feedback_action(&self, t: usize, x: &[f64]) -> Vec<f64> {
        let dx: Vec<f64> = x.iter().zip(&self.states[t]).map(|(a, b)| a - b).collect();
        let kdx = self.feedback[t].mul_vec(&dx);
        (0..self.actions[t].len())
            .map(|i| self.actions[t][i] + kdx[i])
            .collect()
    }
}

struct Linearization {
    fx: Matrix,
    fu: Matrix,
    lx: Vec<f64>,
    lu: Vec<f64>,
    lxx: Matrix,
    luu: Matrix,
    lux: Matrix,
}

struct Backward {
    k: Vec<Vec<f64>>,
    big_k: Vec<Matrix>,
    /// Expected reduction `α·d1 + α²·d2`.
    d1: f64,
    d2: f64,
}

fn rollout_cost<E: Env>(env: &E, x0: &[f64], actions: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let mut states = Vec::with_capacity(actions.len() + 1);
    states.push(x0.to_vec());
    let mut cost = 0.0;
    for (t, u) in actions.iter().enumerate() {
        let x = &states[t];
        cost += env.cost(t, x, u);
        let next = env.step_f64(x, u);
        states.push(next);
    }
    (states, cost)
}

fn block(m: &Matrix, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
    let mut out = Matrix::zeros(rows.len(), cols.len());
    for (i, r) in rows.enumerate() {
        for (j, c) in cols.clone().enumerate() {
            out[(i, j)] = m[(r, c)];
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn linearize<E: Env>(
    env: &E,
    t: usize,
    x: &[f64],
    u: &[f64],
    mode: JacMode,
    stats: &mut IlqrStats,
) -> Result<Linearization> {
    let n = x.len();
    let m = u.len();
    let mut z = x.to_vec();
    z.extend_from_slice(u);
    let step = StepFunction(env);
    let jac = match mode {
        JacMode::Autodiff => {
            let report = jacobian_with(&step, &z, JacobianMode::Auto)?;
            stats.linearization_evals += 1;
            stats.gradient_passes += report.sweeps as u64;
            report.jacobian
        }
        JacMode::FiniteDiff(eps) => {
            let fd = finite_difference_jacobian(|p| step.eval::<f64>(p), &z, eps);
            stats.linearization_evals += fd.evaluations as u64;
            fd.jacobian
        }
    };
    // Gauss-Newton expansion of c = Σ r²: ∇c = 2Jᵀr, ∇²c ≈ 2JᵀJ.
    let res = ResidualFunction::new(env, t);
    let rj = jacobian_with(&res, &z, JacobianMode::Auto)?;
    let jt = rj.jacobian.transpose();
    let grad: Vec<f64> = jt.mul_vec(&rj.value).into_iter().map(|v| 2.0 * v).collect();
    let hess = jt.matmul(&rj.jacobian).scale(2.0);
    let k = jac.rows();
    Ok(Linearization {
        fx: block(&jac, 0..k, 0..n),
        fu: block(&jac, 0..k, n..n + m),
        lx: grad[..n].to_vec(),
        lu: grad[n..].to_vec(),
        lxx: block(&hess, 0..n, 0..n),
        luu: block(&hess, n..n + m, n..n + m),
        lux: block(&hess, n..n + m, 0..n),
    })
}

fn backward_pass(lin: &[Linearization], n: usize, m: usize, lambda: f64) -> Option<Backward> {
    let horizon = lin.len();
    let mut vx = vec![0.0; n];
    let mut vxx = Matrix::zeros(n, n);
    let mut ks = vec![Vec::new(); horizon];
    let mut big_ks = vec![Matrix::zeros(m, n); horizon];
    let (mut d1, mut d2) = (0.0, 0.0);
    for t in (0..horizon).rev() {
        let l = &lin[t];
        let fxt = l.fx.transpose();
        let fut = l.fu.transpose();
        let qx = add_vec(&l.lx, &fxt.mul_vec(&vx));
        let qu = add_vec(&l.lu, &fut.mul_vec(&vx));
        let vxx_fx = vxx.matmul(&l.fx);
        let qxx = &l.lxx + &fxt.matmul(&vxx_fx);
        let quu = &l.luu + &fut.matmul(&vxx.matmul(&l.fu));
        let qux = &l.lux + &fut.matmul(&vxx_fx);
        let quu_reg = &quu + &Matrix::identity(m).scale(lambda);
        quu_reg.cholesky()?;
        let lu = quu_reg.lu().ok()?;
        let k: Vec<f64> = lu.solve_vec(&qu).into_iter().map(|v| -v).collect();
        let big_k = lu.solve(&qux).ok()?.scale(-1.0);
        let kt = big_k.transpose();
        let quu_k = quu.mul_vec(&k);
        // V_x = Q_x + Kᵀ Q_uu k + Kᵀ Q_u + Q_uxᵀ k
        let mut new_vx = add_vec(&qx, &kt.mul_vec(&quu_k));
        new_vx = add_vec(&new_vx, &kt.mul_vec(&qu));
        new_vx = add_vec(&new_vx, &qux.transpose().mul_vec(&k));
        let kt_qux = kt.matmul(&qux);
        let new_vxx = &(&(&qxx + &kt.matmul(&quu.matmul(&big_k))) + &kt_qux) + &kt_qux.transpose();
        d1 += dot(&k, &qu);
        d2 += 0.5 * dot(&k, &quu_k);
        vx = new_vx;
        vxx = new_vxx.symmetrize();
        ks[t] = k;
        big_ks[t] = big_k;
    }
    Some(Backward {
        k: ks,
        big_k: big_ks,
        d1,
        d2,
    })
}

fn forward_pass<E: Env>(
    env: &E,
    states: &[Vec<f64>],
    actions: &[Vec<f64>],
    bw: &Backward,
    alpha: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, f64) {
    let horizon = actions.len();
    let mut xs = Vec::with_capacity(horizon + 1);
    let mut us = Vec::with_capacity(horizon);
    xs.push(states[0].clone());
    let mut cost = 0.0;
    for t in 0..horizon {
        let x = &xs[t];
        let dx: Vec<f64> = x.iter().zip(&states[t]).map(|(a, b)| a - b).collect();
        let kdx = bw.big_k[t].mul_vec(&dx);
        let u: Vec<f64> = (0..actions[t].len())
            .map(|i| actions[t][i] + alpha * bw.k[t][i] + kdx[i])
            .collect();
        cost += env.cost(t, x, &u);
        let next = env.step_f64(x, &u);
        xs.push(next);
        us.push(u);
    }
    (xs, us, cost)
}

/// Iterative LQR from `x0` starting at the action sequence `u_init`.
///
/// Each iteration linearizes the dynamics along the nominal trajectory,
/// expands the cost to second order (Gauss-Newton), runs a regularized
/// Riccati backward pass and line-searches the resulting affine update.
pub fn ilqr_plan<E: Env>(env: &E, x0: &[f64], u_init: &[Vec<f64>], options: &IlqrOptions) -> Result<IlqrPlan> {
    let spec = env.spec();
    let (n, m) = (spec.state_dim, spec.action_dim);
    let horizon = u_init.len();
    if horizon == 0 {
        return Err(Error::InvalidArgument("iLQR needs a horizon of at least one step".into()));
    }
    if x0.len() != n || u_init.iter().any(|u| u.len() != m) {
        return Err(dim_mismatch(format!("{} planning dimensions", spec.name)));
    }
    if let JacMode::FiniteDiff(eps) = options.jac_mode {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {eps}")));
        }
    }
    let mut stats = IlqrStats::default();
    let mut actions = u_init.to_vec();
    let (mut states, mut cost) = rollout_cost(env, x0, &actions);
    stats.rollout_evals += horizon as u64;
    let mut history = vec![IlqrIteration {
        iteration: 0,
        cost,
        linearization_evals: 0,
        dynamics_evals: stats.dynamics_evals(),
    }];
    let mut feedback = vec![Matrix::zeros(m, n); horizon];
    let mut feedforward = vec![vec![0.0; m]; horizon];
    let mut lambda = options.lambda_init;
    let mut iterations = 0;
    let mut termination = Termination::MaxIter;

    'outer: while iterations < options.max_iter {
        let mut lin = Vec::with_capacity(horizon);
        for t in 0..horizon {
            lin.push(linearize(env, t, &states[t], &actions[t], options.jac_mode, &mut stats)?);
        }
        stats.linearizations += 1;
        loop {
            let Some(bw) = backward_pass(&lin, n, m, lambda) else {
                lambda = (lambda * 10.0).max(options.lambda_min);
                if lambda > options.lambda_max {
                    termination = Termination::LineSearchFailed;
                    break 'outer;
                }
                continue;
            };
            feedback.clone_from(&bw.big_k);
            feedforward.clone_from(&bw.k);
            if -(bw.d1 + bw.d2) < options.tol * cost.abs() {
                termination = Termination::Converged;
                break 'outer;
            }
            let mut accepted = None;
            for h in 0..=options.max_halvings {
                let alpha = 0.5f64.powi(h as i32);
                let (xs, us, c) = forward_pass(env, &states, &actions, &bw, alpha);
                stats.rollout_evals += horizon as u64;
                if c < cost {
                    accepted = Some((xs, us, c));
                    break;
                }
            }
            match accepted {
                Some((xs, us, c)) => {
                    let improvement = (cost - c) / cost.abs().max(f64::MIN_POSITIVE);
                    states = xs;
                    actions = us;
                    cost = c;
                    iterations += 1;
                    history.push(IlqrIteration {
                        iteration: iterations,
                        cost,
                        linearization_evals: stats.linearization_evals,
                        dynamics_evals: stats.dynamics_evals(),
                    });
                    lambda /= 2.0;
                    if lambda < options.lambda_min {
                        lambda = 0.0;
                    }
                    if improvement < options.tol {
                        termination = Termination::Converged;
                        break 'outer;
                    }
                    break;
                }
                None => {
                    lambda = (lambda * 10.0).max(options.lambda_min);
                    if lambda > options.lambda_max {
                        termination = Termination::LineSearchFailed;
                        break 'outer;
                    }
                }
            }
        }
    }

    Ok(IlqrPlan {
        states,
        actions,
        feedback,
        feedforward,
        cost,
        converged: termination == Termination::Converged,
        iterations,
        termination,
        history,
        stats,
    })
}
