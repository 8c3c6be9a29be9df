mod common;

use std::f64::consts::PI;

use common::max_abs_diff;
use diffctl::agents::{LinearPolicy, RolloutObjective};
use diffctl::autodiff::{finite_difference_jacobian, gradient_check, jacobian, DiffFunction};
use diffctl::envs::{
    disturbance_at, rollout, zero_policy, BalloonLung, Cartpole, DisturbanceSpec, Env, LearnedLung, Lds, Pendulum,
    PendulumParams, PlanarQuadrotor, StepFunction,
};
use diffctl::linalg::{lqr_gain, Matrix};
use diffctl::random::keyed_uniform;

fn uniform(seed: u64, point: u64, coord: u64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * keyed_uniform(seed, point, coord)
}

/// Compares the autodiff step Jacobian against central differences at 100
/// interior points drawn coordinatewise from `ranges` over `(x, u)`.
fn check_step_jacobian<E: Env>(env: &E, ranges: &[(f64, f64)], seed: u64) {
    let f = StepFunction(env);
    assert_eq!(ranges.len(), f.input_dim());
    for point in 0..100 {
        let z: Vec<f64> = ranges
            .iter()
            .enumerate()
            .map(|(i, &(lo, hi))| uniform(seed, point, i as u64, lo, hi))
            .collect();
        let ad = jacobian(&f, &z).unwrap();
        let fd = finite_difference_jacobian(|p| f.eval::<f64>(p), &z, 1e-6).jacobian;
        let err = (&ad - &fd).max_abs();
        assert!(err <= 1e-5, "{} point {point}: {err}", env.spec().name);
    }
}

#[test]
fn pendulum_jacobian_matches_finite_differences() {
    check_step_jacobian(&Pendulum::default(), &[(-3.0, 3.0), (-4.0, 4.0), (-1.5, 1.5)], 1);
}

#[test]
fn cartpole_jacobian_matches_finite_differences() {
    check_step_jacobian(
        &Cartpole::default(),
        &[(-2.0, 2.0), (-2.0, 2.0), (-0.5, 0.5), (-2.0, 2.0), (-0.9, 0.9)],
        2,
    );
}

#[test]
fn quadrotor_jacobian_matches_finite_differences() {
    let mut ranges = vec![(-1.0, 1.0); 6];
    ranges.extend([(0.0, 1.0), (0.0, 1.0)]);
    check_step_jacobian(&PlanarQuadrotor::default(), &ranges, 3);
}

#[test]
fn lds_jacobian_matches_finite_differences() {
    check_step_jacobian(&Lds::double_integrator(), &[(-3.0, 3.0); 3], 4);
}

#[test]
fn balloon_lung_jacobian_matches_finite_differences() {
    check_step_jacobian(&BalloonLung::default(), &[(5.0, 60.0), (0.05, 0.95), (0.05, 0.95)], 5);
}

#[test]
fn learned_lung_jacobian_matches_finite_differences() {
    let mut ranges = vec![(0.0, 40.0); 3];
    ranges.extend([(0.05, 0.95); 6]);
    check_step_jacobian(&LearnedLung::untrained(6), &ranges, 6);
}

#[test]
fn equilibria_are_exact() {
    let z = |n: usize| vec![0.0; n];
    let pend = Pendulum::default();
    assert_eq!(pend.step(&[PI, 0.0], &[0.0], &z(2)), vec![PI, 0.0]);
    let upright = pend.step(&[0.0, 0.0], &[0.0], &z(2));
    assert!(upright.iter().all(|v| v.abs() <= 1e-12), "{upright:?}");
    assert_eq!(Cartpole::default().step(&z(4), &[0.0], &z(4)), z(4));
    let quad = PlanarQuadrotor::default();
    let hover = quad.params.hover_thrust();
    let next = quad.step(&z(6), &[hover, hover], &z(6));
    assert!(next.iter().all(|v| v.abs() <= 1e-12), "{next:?}");
    let lung = BalloonLung::default();
    assert_eq!(lung.step(&[5.0], &[0.0, 1.0], &[0.0]), vec![5.0]);
    assert_eq!(lung.step(&[0.0], &[0.0, 0.0], &[0.0]), vec![0.0]);
}

/// Cart-pole written from the textbook form of the equations of motion.
fn textbook_cartpole(x: &[f64], u: f64) -> Vec<f64> {
    let (g, mc, mp, l, dt) = (9.8, 1.0, 0.1, 0.5, 0.02);
    let m = mc + mp;
    let f = 10.0 * u.clamp(-1.0, 1.0);
    let (th, om) = (x[2], x[3]);
    let th_acc = (g * th.sin() - th.cos() * (f + mp * l * om * om * th.sin()) / m)
        / (l * (4.0 / 3.0 - mp * th.cos().powi(2) / m));
    let x_acc = (f + mp * l * (om * om * th.sin() - th_acc * th.cos())) / m;
    vec![x[0] + dt * x[1], x[1] + dt * x_acc, th + dt * om, om + dt * th_acc]
}

#[test]
fn cartpole_matches_textbook_equations() {
    let env = Cartpole::default();
    for point in 0..50 {
        let x: Vec<f64> = (0..4).map(|i| uniform(7, point, i, -1.0, 1.0)).collect();
        let u = uniform(7, point, 4, -1.5, 1.5);
        let ours = env.step(&x, &[u], &[0.0; 4]);
        assert!(max_abs_diff(&ours, &textbook_cartpole(&x, u)) < 1e-12, "point {point}");
    }
}

#[test]
fn rollout_costs_and_states_replay() {
    let env = Pendulum::default();
    let spec = DisturbanceSpec::Gaussian { sigma: 0.05, seed: 8 };
    let traj = rollout(&env, |t, x: &[f64]| vec![(0.3 * t as f64).sin() - 0.5 * x[1]], &[2.0, 0.5], 120, &spec).unwrap();
    assert_eq!(traj.states.len(), 121);
    let mut total = 0.0;
    for t in 0..120 {
        let w = disturbance_at(&spec, t, 2);
        assert_eq!(env.step(&traj.states[t], &traj.actions[t], &w), traj.states[t + 1]);
        let c: f64 = env.cost(t, &traj.states[t], &traj.actions[t]);
        assert_eq!(c, traj.costs[t]);
        total += c;
    }
    assert!((total - traj.total_cost).abs() <= 1e-10);
}

#[test]
fn zero_horizon_rollout() {
    let traj = rollout(&Pendulum::default(), zero_policy(1), &[1.0, 0.0], 0, &DisturbanceSpec::Zero).unwrap();
    assert_eq!(traj.states.len(), 1);
    assert!(traj.actions.is_empty());
    assert_eq!(traj.total_cost, 0.0);
}

#[test]
fn hanging_pendulum_costs_pi_squared_per_step() {
    let traj = rollout(&Pendulum::default(), zero_policy(1), &[PI, 0.0], 100, &DisturbanceSpec::Zero).unwrap();
    assert!(traj.states.iter().all(|s| s == &[PI, 0.0]));
    assert!((traj.total_cost - 100.0 * PI * PI).abs() <= 1e-9);
}

#[test]
fn pendulum_energy_drift_is_small_near_the_bottom() {
    let env = Pendulum::default();
    for point in 0..200 {
        let x = [PI + uniform(9, point, 0, -0.2, 0.2), uniform(9, point, 1, -0.5, 0.5)];
        let next = env.step(&x, &[0.0], &[0.0, 0.0]);
        let drift = (env.energy(&next) - env.energy(&x)).abs();
        assert!(drift < 0.05, "point {point}: {drift}");
    }
}

#[test]
fn lqr_keeps_noisy_lds_bounded() {
    let env = Lds::double_integrator();
    let k = lqr_gain(&env.a, &env.b, &env.q, &env.r).unwrap();
    let traj = rollout(
        &env,
        |_, x: &[f64]| k.mul_vec(x).iter().map(|v| -v).collect(),
        &[1.0, 0.0],
        500,
        &DisturbanceSpec::Gaussian { sigma: 0.1, seed: 10 },
    )
    .unwrap();
    assert!(traj.total_cost.is_finite());
    let peak = traj.states.iter().map(|s| s.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    assert!(peak < 5.0, "{peak}");
}

#[test]
fn pendulum_policy_gradient_matches_finite_differences() {
    let env = Pendulum::new(PendulumParams::policy_gradient());
    let x0 = [2.5, 0.0];
    for point in 0..20 {
        let gain = Matrix::new(1, 2, vec![uniform(11, point, 0, -2.0, 0.0), uniform(11, point, 1, -1.0, 0.0)]).unwrap();
        let policy = LinearPolicy::from_matrix(&gain);
        let objective = RolloutObjective {
            env: &env,
            policy: &policy,
            x0: &x0,
            horizon: 50,
            disturbance: &DisturbanceSpec::Zero,
        };
        let check = gradient_check(&objective, &gain.data().to_vec(), 1e-5, 1e-4);
        assert!(check.passed, "point {point}: {}", check.max_rel_error);
    }
}

#[test]
fn disturbances_replay_across_threads() {
    let spec = DisturbanceSpec::Gaussian { sigma: 1.0, seed: 42 };
    let here: Vec<Vec<f64>> = (0..50).map(|t| disturbance_at(&spec, t, 3)).collect();
    let there = std::thread::spawn({
        let spec = spec.clone();
        move || (0..50).map(|t| disturbance_at(&spec, t, 3)).collect::<Vec<_>>()
    })
    .join()
    .unwrap();
    assert_eq!(here, there);
}
