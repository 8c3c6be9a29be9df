mod common;

use common::{max_abs_diff, random_system, riccati_gains};
use diffctl::agents::{
    es_gradient_estimate, gpc_act, ilqr_plan, lqr_act, policy_gradient_step, AdaptiveState, Controller, EsOptions,
    GpcState, IlqrOptions, LinearController, LinearPolicy, Policy,
};
use diffctl::bench::{counted, CallCounter};
use diffctl::envs::{DisturbanceSpec, Env, Lds, Pendulum, PendulumParams};
use diffctl::error::Error;
use diffctl::linalg::{dare_residual, hinf_gain, hinf_gamma_threshold, lqr_gain, solve_dare, Matrix};
use diffctl::random::keyed_normal;

#[test]
fn scalar_dare_root_is_golden_ratio() {
    let one = Matrix::scalar(1.0);
    let p = solve_dare(&one, &one, &one, &one, 1e-12, 10_000).unwrap();
    assert!((p[(0, 0)] - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-10);
}

#[test]
fn dare_residual_small_on_random_systems() {
    for i in 0..100 {
        let (a, b, q, r) = random_system(11, i);
        let p = solve_dare(&a, &b, &q, &r, 1e-12, 100_000).unwrap();
        let res = dare_residual(&a, &b, &q, &r, &p).unwrap();
        assert!(res <= 1e-8, "system {i}: residual {res}");
        // the LQR closed loop is Schur stable
        let k = lqr_gain(&a, &b, &q, &r).unwrap();
        assert!((&a - &b.matmul(&k)).spectral_radius() < 1.0, "system {i}");
    }
}

#[test]
fn hinf_with_huge_gamma_is_lqr() {
    for i in 0..20 {
        let (a, b, q, r) = random_system(12, i);
        let k_lqr = lqr_gain(&a, &b, &q, &r).unwrap();
        let k_inf = hinf_gain(&a, &b, &q, &r, 1e6, 1e-12, 100_000).unwrap();
        assert!((&k_lqr - &k_inf).max_abs() < 1e-5, "system {i}");
    }
}

#[test]
fn gamma_below_threshold_is_infeasible() {
    let env = Lds::double_integrator();
    let g = hinf_gamma_threshold(&env.a, &env.b, &env.q, &env.r, 1e-6).unwrap();
    let err = hinf_gain(&env.a, &env.b, &env.q, &env.r, 0.9 * g, 1e-10, 20_000).unwrap_err();
    assert!(matches!(err, Error::GammaInfeasible { .. }), "{err:?}");
    assert!(hinf_gain(&env.a, &env.b, &env.q, &env.r, 1.1 * g, 1e-10, 20_000).is_ok());
}

#[test]
fn ilqr_reproduces_finite_horizon_riccati() {
    for i in 0..20 {
        let (a, b, q, r) = random_system(13, i);
        let n = a.rows();
        let m = b.cols();
        let horizon = 5 + (i as usize % 16);
        let env = Lds::new(a.clone(), b.clone(), q.clone(), r.clone()).unwrap();
        let x0: Vec<f64> = (0..n).map(|k| keyed_normal(14, i, k as u64)).collect();
        let plan = ilqr_plan(&env, &x0, &vec![vec![0.0; m]; horizon], &IlqrOptions::default()).unwrap();
        assert!(plan.converged, "problem {i}");
        assert_eq!(plan.iterations, 1, "problem {i}");
        for (k_ilqr, k_ric) in plan.feedback.iter().zip(riccati_gains(&a, &b, &q, &r, horizon)) {
            let diff = (k_ilqr + &k_ric).max_abs();
            assert!(diff < 1e-8, "problem {i}: {diff}");
        }
    }
}

#[test]
fn gpc_with_zero_m_is_lqr_everywhere() {
    let env = Lds::double_integrator();
    let mut gpc = GpcState::with_lqr(env.a.clone(), env.b.clone(), env.q.clone(), env.r.clone()).unwrap();
    for t in 0..8 {
        gpc.push_disturbance(vec![keyed_normal(1, t, 0), keyed_normal(1, t, 1)]).unwrap();
    }
    for i in 0..50 {
        let x = [keyed_normal(2, i, 0) * 3.0, keyed_normal(2, i, 1) * 3.0];
        assert_eq!(gpc_act(&gpc, &x).unwrap(), lqr_act(&gpc.k, &x).unwrap());
    }
}

#[test]
fn gpc_projection_holds_under_large_disturbances() {
    let env = Lds::double_integrator();
    let mut gpc = GpcState::new(
        lqr_gain(&env.a, &env.b, &env.q, &env.r).unwrap(),
        env.a.clone(),
        env.b.clone(),
        env.q.clone(),
        env.r.clone(),
        5,
        10.0,
    )
    .unwrap();
    let mut x = vec![1.0, 0.0];
    for t in 0..200 {
        let u = gpc.act(&x).unwrap();
        let w = [5.0 * keyed_normal(3, t, 0), 5.0 * keyed_normal(3, t, 1)];
        let next = env.step(&x, &u, &w);
        gpc.update(&x, &u, &next).unwrap();
        assert!(gpc.m_norm() <= gpc.radius * (1.0 + 1e-12));
        x = next;
    }
}

#[test]
fn adaptive_weights_stay_on_simplex() {
    let experts: Vec<LinearController> = (0..4).map(|i| LinearController { k: Matrix::scalar(0.2 * i as f64) }).collect();
    let mut ada = AdaptiveState::with_rates(experts, 2.0, 0.05).unwrap();
    for t in 0..100 {
        let costs: Vec<f64> = (0..4).map(|i| keyed_normal(5, t, i).abs() * 3.0).collect();
        ada.update_weights(&costs).unwrap();
        let w = ada.weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&v| v >= 0.05 / 4.0 - 1e-15));
    }
}

#[test]
fn policy_gradient_vanishes_at_lqr_for_long_horizons() {
    let env = Lds::double_integrator().with_initial_state(vec![1.0, 0.5]).unwrap();
    let k = lqr_gain(&env.a, &env.b, &env.q, &env.r).unwrap();
    let mut policy = LinearPolicy::from_matrix(&k.scale(-1.0));
    let before = policy.params().to_vec();
    let step = policy_gradient_step(&mut policy, &env, &[1.0, 0.5], 300, 1e-3, &DisturbanceSpec::Zero).unwrap();
    let norm = step.gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    assert!(norm < 1e-8, "{norm}");
    assert!(max_abs_diff(policy.params(), &before) <= 1e-3 * 1e-8);
}

#[test]
fn policy_gradient_charges_one_rollout() {
    let env = Pendulum::new(PendulumParams::policy_gradient());
    let counter = CallCounter::new();
    let wrapped = counted(&env, &counter);
    let mut policy = LinearPolicy::zeros(1, 2);
    policy_gradient_step(&mut policy, &wrapped, &env.initial_state(), 200, 0.01, &DisturbanceSpec::Zero).unwrap();
    assert_eq!(counter.dynamics_evals(), 200);
}

#[test]
fn es_charges_n_samples_rollouts() {
    let env = Pendulum::new(PendulumParams::policy_gradient());
    let counter = CallCounter::new();
    let wrapped = counted(&env, &counter);
    let policy = LinearPolicy::zeros(1, 2);
    let opts = EsOptions {
        sigma: 0.1,
        n_samples: 3,
        antithetic: false,
    };
    let x0 = env.initial_state();
    let est = es_gradient_estimate(
        policy.params(),
        |p| {
            let pol = LinearPolicy::from_matrix(&Matrix::new(1, 2, p.to_vec()).unwrap());
            diffctl::agents::RolloutObjective {
                env: &wrapped,
                policy: &pol,
                x0: &x0,
                horizon: 50,
                disturbance: &DisturbanceSpec::Zero,
            }
            .cost()
        },
        &opts,
        9,
        0,
    )
    .unwrap();
    assert_eq!(est.evaluations, 3);
    assert_eq!(counter.dynamics_evals(), 3 * 50);
}

/// Empirical variance (trace of the covariance) of ĝ on `J(π) = ‖π‖²` at
/// `π = 1`, from `reps` independent single-sample estimates.
fn es_variance(dim: usize, reps: u64) -> f64 {
    let params = vec![1.0; dim];
    let opts = EsOptions {
        sigma: 0.1,
        n_samples: 1,
        antithetic: false,
    };
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    for rep in 0..reps {
        let g = es_gradient_estimate(&params, |p| p.iter().map(|v| v * v).sum(), &opts, 21, rep)
            .unwrap()
            .gradient;
        for i in 0..dim {
            sum[i] += g[i];
            sum_sq[i] += g[i] * g[i];
        }
    }
    let n = reps as f64;
    (0..dim).map(|i| sum_sq[i] / n - (sum[i] / n).powi(2)).sum()
}

#[test]
fn es_variance_grows_with_dimension() {
    let v: Vec<f64> = [2, 8, 32].iter().map(|&d| es_variance(d, 4000)).collect();
    assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
    // per-coordinate variance itself grows, so the trace grows faster than dim
    assert!(v[1] / v[0] > 4.0 * 0.9 && v[2] / v[1] > 4.0 * 0.9, "{v:?}");
}

#[test]
fn es_mean_converges_at_monte_carlo_rate() {
    // quadratic: the smoothed gradient equals the true gradient 2π
    let params = [0.5, -1.0];
    let truth = [1.0, -2.0];
    let opts = EsOptions {
        sigma: 0.1,
        n_samples: 1,
        antithetic: false,
    };
    let mut errors = Vec::new();
    for &n in &[100u64, 1600, 25600] {
        let mut mean = [0.0; 2];
        for rep in 0..n {
            let g = es_gradient_estimate(&params, |p| p.iter().map(|v| v * v).sum(), &opts, 31, rep)
                .unwrap()
                .gradient;
            mean[0] += g[0] / n as f64;
            mean[1] += g[1] / n as f64;
        }
        errors.push(max_abs_diff(&mean, &truth));
    }
    // each 16× increase in samples should cut the error by roughly 4×
    assert!(errors[2] < errors[0], "{errors:?}");
    assert!(errors[2] < 0.3, "{errors:?}");
}
